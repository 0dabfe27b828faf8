#pragma once

#include <stdexcept>
#include <string>

namespace thermal {

// Error taxonomy mirrored by the CLI exit codes:
//   ConfigError -> 1, DataError -> 2, NumericError -> 3.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Distinct failure modes of the binary file formats.
enum class FileErrc {
    bad_magic,
    bad_version,
    truncated,
    io_failure,
};

class FileFormatError : public DataError {
public:
    FileFormatError(FileErrc code, const std::string& msg)
        : DataError(msg), code_(code) {}
    FileErrc code() const { return code_; }

private:
    FileErrc code_;
};

// Raised by ctc_loss when the target cannot be aligned to the frame count.
class InfeasibleTargetError : public DataError {
public:
    explicit InfeasibleTargetError(const std::string& msg) : DataError(msg) {}
};

// Raised by the augmentation pipeline when a clip is too short to resample;
// the training loop skips the sample.
class SkipSample : public std::runtime_error {
public:
    explicit SkipSample(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace thermal

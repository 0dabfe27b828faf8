#include "thermal/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include <cstring>
#include <fstream>
#include <sstream>

#include "thermal/errors.hpp"

namespace thermal {

namespace {

constexpr char kMagic[4] = {'T', 'H', 'G', 'M'};
constexpr std::uint16_t kVersion = 1;

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}
void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f32(std::string& out, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
}
void put_str(std::string& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.append(s);
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;
    const std::string& what;

    void need(std::size_t n, const char* field) {
        if (pos + n > buf.size())
            throw FileFormatError(FileErrc::truncated,
                                  what + ": truncated " + field + " (expected " +
                                      std::to_string(pos + n) + " bytes, file has " +
                                      std::to_string(buf.size()) + ")");
    }
    std::uint16_t u16(const char* field) {
        need(2, field);
        std::uint16_t v = 0;
        for (int i = 0; i < 2; ++i)
            v |= static_cast<std::uint16_t>(static_cast<std::uint8_t>(buf[pos++])) << (8 * i);
        return v;
    }
    std::uint32_t u32(const char* field) {
        need(4, field);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf[pos++])) << (8 * i);
        return v;
    }
    float f32(const char* field) {
        const std::uint32_t bits = u32(field);
        float f;
        std::memcpy(&f, &bits, 4);
        return f;
    }
    std::string str(const char* field) {
        const std::uint32_t n = u32(field);
        need(n, field);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

std::string meta_to_json(const CheckpointMeta& m) {
    nlohmann::json j;
    j["seed"] = m.seed;
    j["epoch"] = m.epoch;
    j["lr"] = m.lr;
    j["best_accuracy"] = m.best_accuracy;
    j["plateau"] = m.plateau;
    j["adam_step"] = m.adam_step;
    j["loss"] = m.loss;
    return j.dump();
}

CheckpointMeta meta_from_json(const std::string& s, const std::string& what) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(s);
    } catch (const nlohmann::json::exception& e) {
        throw FileFormatError(FileErrc::truncated, what + ": bad trainer meta: " + e.what());
    }
    CheckpointMeta m;
    m.seed = j.value("seed", std::uint64_t{0});
    m.epoch = j.value("epoch", std::int64_t{-1});
    m.lr = j.value("lr", 0.0);
    m.best_accuracy = j.value("best_accuracy", 0.0);
    m.plateau = j.value("plateau", std::int64_t{0});
    m.adam_step = j.value("adam_step", std::int64_t{0});
    m.loss = j.value("loss", std::string("ce"));
    return m;
}

struct Header {
    LoadedCheckpoint loaded;
    Reader reader;
};

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileFormatError(FileErrc::io_failure, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

LoadedCheckpoint parse_header(Reader& r) {
    r.need(4, "magic");
    if (std::memcmp(r.buf.data(), kMagic, 4) != 0)
        throw FileFormatError(FileErrc::bad_magic, r.what + ": bad magic (not a THGM checkpoint)");
    r.pos = 4;
    const std::uint16_t version = r.u16("version");
    if (version != kVersion)
        throw FileFormatError(FileErrc::bad_version,
                              r.what + ": unsupported checkpoint version " + std::to_string(version));
    LoadedCheckpoint lc;
    lc.config_json = r.str("config snapshot");
    lc.meta = meta_from_json(r.str("trainer meta"), r.what);
    return lc;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const std::string& config_json,
                     const CheckpointMeta& meta, const ParamStore<float>& store) {
    std::string out;
    out.append(kMagic, 4);
    put_u16(out, kVersion);
    put_str(out, config_json);
    put_str(out, meta_to_json(meta));
    put_u32(out, static_cast<std::uint32_t>(store.size() * 3));
    auto blob = [&](const std::string& name, const Tensor<float>& t) {
        put_u16(out, static_cast<std::uint16_t>(name.size()));
        out.append(name);
        put_u32(out, static_cast<std::uint32_t>(t.size()));
        for (std::int64_t i = 0; i < t.size(); ++i) put_f32(out, t[i]);
    };
    for (const auto& p : store) {
        blob("p/" + p.name, p.value);
        blob("m/" + p.name, p.adam_m);
        blob("v/" + p.name, p.adam_v);
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw FileFormatError(FileErrc::io_failure, "cannot open " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw FileFormatError(FileErrc::io_failure, "write failed: " + path.string());
}

LoadedCheckpoint read_checkpoint_header(const std::filesystem::path& path) {
    const std::string buf = slurp(path);
    const std::string what = path.string();
    Reader r{buf, 0, what};
    return parse_header(r);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, ParamStore<float>& store) {
    const std::string buf = slurp(path);
    const std::string what = path.string();
    Reader r{buf, 0, what};
    LoadedCheckpoint lc = parse_header(r);

    const std::uint32_t blob_count = r.u32("blob count");
    if (blob_count != store.size() * 3)
        throw DataError(what + ": checkpoint has " + std::to_string(blob_count) +
                        " blobs, model expects " + std::to_string(store.size() * 3));
    for (std::uint32_t b = 0; b < blob_count; ++b) {
        const std::uint16_t name_len = r.u16("blob name length");
        r.need(name_len, "blob name");
        const std::string name = buf.substr(r.pos, name_len);
        r.pos += name_len;
        const std::uint32_t n = r.u32("blob length");
        if (name.size() < 3 || name[1] != '/')
            throw DataError(what + ": malformed blob name '" + name + "'");
        const std::string pname = name.substr(2);
        if (!store.has(pname))
            throw DataError(what + ": checkpoint blob '" + name + "' has no matching parameter");
        auto& param = store.at(pname);
        Tensor<float>* dst = nullptr;
        switch (name[0]) {
            case 'p': dst = &param.value; break;
            case 'm': dst = &param.adam_m; break;
            case 'v': dst = &param.adam_v; break;
            default: throw DataError(what + ": unknown blob kind '" + name + "'");
        }
        if (static_cast<std::uint32_t>(dst->size()) != n)
            throw DataError(what + ": blob '" + name + "' has " + std::to_string(n) +
                            " floats, parameter wants " + std::to_string(dst->size()));
        r.need(static_cast<std::size_t>(n) * 4, "blob payload");
        for (std::uint32_t i = 0; i < n; ++i) (*dst)[i] = r.f32("blob payload");
    }
    store.adam_step = lc.meta.adam_step;
    return lc;
}

}  // namespace thermal

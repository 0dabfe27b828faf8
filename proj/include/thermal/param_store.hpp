#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "thermal/tensor.hpp"

namespace thermal {

// One named trainable blob: value, gradient and Adam state share the shape.
template <typename T>
struct Param {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
    Tensor<T> adam_m;
    Tensor<T> adam_v;
};

// Registry of parameters with deterministic iteration order (registration
// order). Models keep indices into the store, so a cloned store can be used
// interchangeably — per-sample gradient buffers in the trainer rely on this.
template <typename T>
class ParamStore {
public:
    std::size_t add(const std::string& name, std::vector<std::int64_t> shape) {
        if (index_.count(name)) throw ConfigError("duplicate parameter name: " + name);
        Param<T> p;
        p.name = name;
        p.value = Tensor<T>(shape);
        p.grad = Tensor<T>(shape);
        p.adam_m = Tensor<T>(shape);
        p.adam_v = Tensor<T>(std::move(shape));
        params_.push_back(std::move(p));
        index_[name] = params_.size() - 1;
        return params_.size() - 1;
    }

    Param<T>& operator[](std::size_t i) { return params_[i]; }
    const Param<T>& operator[](std::size_t i) const { return params_[i]; }

    Param<T>& at(const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
        return params_[it->second];
    }
    const Param<T>& at(const std::string& name) const {
        return const_cast<ParamStore*>(this)->at(name);
    }
    bool has(const std::string& name) const { return index_.count(name) > 0; }

    std::size_t size() const { return params_.size(); }
    std::int64_t total_scalars() const {
        std::int64_t n = 0;
        for (const auto& p : params_) n += p.value.size();
        return n;
    }

    void zero_grads() {
        for (auto& p : params_) p.grad.zero();
    }

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

    template <typename U>
    ParamStore<U> cast() const {
        ParamStore<U> out;
        for (const auto& p : params_) {
            auto idx = out.add(p.name, p.value.shape());
            out[idx].value = p.value.template cast<U>();
        }
        out.adam_step = adam_step;
        return out;
    }

    // Flat snapshot of all parameter values, in registration order.
    std::vector<T> snapshot_values() const {
        std::vector<T> out;
        out.reserve(static_cast<std::size_t>(total_scalars()));
        for (const auto& p : params_)
            out.insert(out.end(), p.value.data(), p.value.data() + p.value.size());
        return out;
    }

    void restore_values(const std::vector<T>& flat) {
        std::size_t off = 0;
        for (auto& p : params_) {
            const auto n = static_cast<std::size_t>(p.value.size());
            if (off + n > flat.size()) throw ConfigError("value snapshot size mismatch");
            std::copy(flat.begin() + off, flat.begin() + off + n, p.value.data());
            off += n;
        }
        if (off != flat.size()) throw ConfigError("value snapshot size mismatch");
    }

    // Adam bias-correction step counter, shared by all parameters.
    std::int64_t adam_step = 0;

private:
    std::vector<Param<T>> params_;
    std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace thermal

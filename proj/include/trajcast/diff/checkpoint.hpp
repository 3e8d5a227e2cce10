#pragma once

#include <map>
#include <string>
#include <vector>

#include "trajcast/diff/param.hpp"

namespace trajcast::diff {

// Checkpoint container. Binary layout, all integers little-endian:
//
//   magic   "TJCP" (4 bytes)
//   version u32 (currently 1)
//   count   u32
//   entry*  { kind u8 (0 = f64 tensor, 1 = byte blob)
//             name_len u16, name bytes
//             kind 0: rows u32, cols u32, rows*cols f64 values
//             kind 1: len u64, raw bytes }
//
// Tensor entries hold parameter values, optimizer moments and scalar
// training counters; blob entries hold the model config text and the
// serialized RNG stream. Loading a tensor into a Parameter whose shape
// differs is a hard error.
struct Checkpoint {
    struct Tensor {
        Shape shape;
        std::vector<double> values;
    };

    std::map<std::string, Tensor> tensors;
    std::map<std::string, std::string> blobs;

    void set_scalar(const std::string& name, double v) {
        tensors[name] = Tensor{Shape{1, 1}, {v}};
    }
    double get_scalar(const std::string& name, double fallback = 0.0) const {
        auto it = tensors.find(name);
        return it == tensors.end() ? fallback : it->second.values.at(0);
    }
    bool has(const std::string& name) const {
        return tensors.count(name) > 0 || blobs.count(name) > 0;
    }

    // Copies every parameter of `ps` into the container / back out.
    void store_params(const ParamStore& ps);
    void load_params(ParamStore& ps) const;  // throws InputError on shape mismatch

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);
};

}  // namespace trajcast::diff

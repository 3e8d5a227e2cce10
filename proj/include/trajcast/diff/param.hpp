#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "trajcast/core/rng.hpp"

namespace trajcast::diff {

struct Shape {
    int rows = 0, cols = 0;
    int size() const { return rows * cols; }
    bool operator==(const Shape&) const = default;
};

// A named dense tensor with a gradient buffer of identical shape.
// Gradients accumulate across backward passes until the optimizer (or
// zero_grad) clears them.
struct Parameter {
    std::string name;
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    int fan_in = 0;  // 0 => zero-initialized (biases)

    Parameter(std::string n, Shape s, int fan)
        : name(std::move(n)), shape(s),
          value(static_cast<size_t>(s.size()), 0.0),
          grad(static_cast<size_t>(s.size()), 0.0),
          fan_in(fan) {}

    void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

class ParamStore {
public:
    Parameter& add(const std::string& name, int rows, int cols, int fan_in) {
        if (find(name) != nullptr) throw std::logic_error("duplicate parameter: " + name);
        params_.push_back(std::make_unique<Parameter>(name, Shape{rows, cols}, fan_in));
        return *params_.back();
    }

    Parameter* find(const std::string& name) {
        for (auto& p : params_)
            if (p->name == name) return p.get();
        return nullptr;
    }

    // Uniform [-s, s] with s = 1/sqrt(fan_in) for weights, zeros for
    // fan_in == 0 entries. Deterministic in registration order.
    void init(Rng& rng) {
        for (auto& p : params_) {
            if (p->fan_in <= 0) {
                std::fill(p->value.begin(), p->value.end(), 0.0);
                continue;
            }
            const double s = 1.0 / std::sqrt(static_cast<double>(p->fan_in));
            for (auto& v : p->value) v = rng.uniform(-s, s);
        }
    }

    void zero_all() {
        for (auto& p : params_) std::fill(p->value.begin(), p->value.end(), 0.0);
    }
    void zero_grad() {
        for (auto& p : params_) p->zero_grad();
    }

    size_t count() const { return params_.size(); }
    size_t scalar_count() const {
        size_t n = 0;
        for (const auto& p : params_) n += p->value.size();
        return n;
    }

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

private:
    std::vector<std::unique_ptr<Parameter>> params_;
};

}  // namespace trajcast::diff

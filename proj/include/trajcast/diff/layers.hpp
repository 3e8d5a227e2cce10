#pragma once

#include <array>
#include <cmath>
#include <string>

#include "trajcast/diff/tape.hpp"
#include "trajcast/kernels/kernels.hpp"

namespace trajcast::diff {

// Fully connected layer; weight rows = outputs, cols = inputs.
class Affine {
public:
    Affine() = default;
    Affine(ParamStore& ps, const std::string& name, int in, int out, bool bias = true)
        : w_(&ps.add(name + ".w", out, in, in)),
          b_(bias ? &ps.add(name + ".b", 1, out, 0) : nullptr) {}

    Var operator()(Tape& t, Var x) const { return t.linear(x, *w_, b_); }

    int out_size() const { return w_->shape.rows; }
    int in_size() const { return w_->shape.cols; }

private:
    Parameter* w_ = nullptr;
    Parameter* b_ = nullptr;
};

// affine -> tanh -> affine
class Mlp {
public:
    Mlp() = default;
    Mlp(ParamStore& ps, const std::string& name, int in, int hidden, int out)
        : l0_(ps, name + ".0", in, hidden), l1_(ps, name + ".1", hidden, out) {}

    Var operator()(Tape& t, Var x) const { return l1_(t, t.tanh(l0_(t, x))); }

private:
    Affine l0_, l1_;
};

struct LstmState {
    Var h, c;
};

// Standard LSTM cell with fused gate weights, gate order (i, f, g, o):
//   i,f,o = sigmoid(.), g = tanh(.)
//   c' = f.*c + i.*g ; h' = o.*tanh(c')
// With all-zero parameters, inputs and state, the output is exactly zero
// (i = f = o = 1/2, g = 0), which the unit tests pin down.
class LstmCell {
public:
    LstmCell() = default;
    LstmCell(ParamStore& ps, const std::string& name, int input, int hidden)
        : input_(input), hidden_(hidden),
          w_(&ps.add(name + ".w", 4 * hidden, input + hidden, input + hidden)),
          b_(&ps.add(name + ".b", 1, 4 * hidden, 0)) {}

    int input_size() const { return input_; }
    int hidden_size() const { return hidden_; }

    LstmState zero_state(Tape& t, int rows) const {
        return {t.constant(Shape{rows, hidden_}, 0.0), t.constant(Shape{rows, hidden_}, 0.0)};
    }

    // Value-only step for online inference; bitwise-identical math to the
    // tape path (same kernels, same transcendental calls). h and c are
    // updated in place.
    void step_values(std::span<const double> x, std::vector<double>& h,
                     std::vector<double>& c) const {
        if (static_cast<int>(x.size()) != input_ || static_cast<int>(h.size()) != hidden_ ||
            static_cast<int>(c.size()) != hidden_)
            throw std::invalid_argument("lstm step_values: size mismatch");
        std::vector<double> xh(static_cast<size_t>(input_ + hidden_));
        std::copy(x.begin(), x.end(), xh.begin());
        std::copy(h.begin(), h.end(), xh.begin() + input_);
        std::vector<double> gates(static_cast<size_t>(4 * hidden_));
        kernels::gemm_nt(xh.data(), w_->value.data(), gates.data(), 1, input_ + hidden_, 4 * hidden_);
        kernels::add(gates.data(), b_->value.data(), gates.data(), gates.size());
        for (int j = 0; j < hidden_; ++j) {
            const double i = 1.0 / (1.0 + std::exp(-gates[static_cast<size_t>(j)]));
            const double f = 1.0 / (1.0 + std::exp(-gates[static_cast<size_t>(hidden_ + j)]));
            const double g = std::tanh(gates[static_cast<size_t>(2 * hidden_ + j)]);
            const double o = 1.0 / (1.0 + std::exp(-gates[static_cast<size_t>(3 * hidden_ + j)]));
            c[static_cast<size_t>(j)] = f * c[static_cast<size_t>(j)] + i * g;
            h[static_cast<size_t>(j)] = o * std::tanh(c[static_cast<size_t>(j)]);
        }
    }

    LstmState step(Tape& t, Var x, const LstmState& s) const {
        if (t.shape(x).cols != input_)
            throw std::invalid_argument("lstm step: input width mismatch");
        if (t.shape(s.h).cols != hidden_ || t.shape(s.h).rows != t.shape(x).rows)
            throw std::invalid_argument("lstm step: state shape mismatch");
        const std::array<Var, 2> xs{x, s.h};
        Var gates = t.linear(t.concat_cols(xs), *w_, b_);
        Var i = t.sigmoid(t.slice_cols(gates, 0, hidden_));
        Var f = t.sigmoid(t.slice_cols(gates, hidden_, hidden_));
        Var g = t.tanh(t.slice_cols(gates, 2 * hidden_, hidden_));
        Var o = t.sigmoid(t.slice_cols(gates, 3 * hidden_, hidden_));
        Var c = t.add(t.mul(f, s.c), t.mul(i, g));
        Var h = t.mul(o, t.tanh(c));
        return {h, c};
    }

private:
    int input_ = 0, hidden_ = 0;
    Parameter* w_ = nullptr;
    Parameter* b_ = nullptr;
};

}  // namespace trajcast::diff

#pragma once

#include <span>
#include <vector>

#include "trajcast/diff/param.hpp"

namespace trajcast::diff {

struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Unary scalar functions usable as elementwise tape ops; the backward
// pass evaluates the paired derivative at the saved input.
enum class Fn : int {
    sin_, cos_,
    g1, g2, h1, u2, w2, w3, u3,
};

// Reverse-mode tape over row-major (rows x cols) dense double tensors.
// Forward values are computed eagerly as ops are recorded; backward()
// replays the record in reverse and accumulates into Parameter::grad.
// A tape is single-owner, single-threaded, and consumed by at most one
// backward pass; reset() reclaims the arena for the next example.
class Tape {
public:
    explicit Tape(size_t reserve_values = 1 << 14);

    // -- leaves --
    Var constant(Shape s, std::span<const double> v);
    Var constant(Shape s, double fill);
    Var scalar_const(double v);
    Var param(Parameter& p);  // gradient flows into p.grad

    // -- linear algebra --
    // y[n x m] = x[n x k] * W[m x k]^T + 1 * b^T  (b optional)
    Var linear(Var x, Parameter& w, Parameter* b);

    // -- elementwise (shapes must match) --
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var add_scaled(Var a, double alpha, Var b);  // a + alpha*b
    Var scale(Var a, double alpha);
    Var add_const(Var a, double alpha);
    Var tanh(Var a);
    Var sigmoid(Var a);
    Var exp(Var a);
    Var log(Var a);
    Var apply(Fn fn, Var a);

    // -- structure --
    Var concat_cols(std::span<const Var> xs);
    Var slice_cols(Var a, int col0, int ncols);
    Var repeat_rows(Var a, int n);  // [1 x c] -> [n x c]
    Var reshape(Var a, Shape s);    // same element count, shared storage semantics

    // -- reductions --
    Var sum_all(Var a);                 // -> [1 x 1]
    Var dot_all(Var a, Var b);          // -> [1 x 1]
    Var logsumexp_all(Var a);           // -> [1 x 1]
    Var row_logsumexp(Var a);           // [n x c] -> [n x 1]
    Var row_softmax(Var a);
    Var row_log_softmax(Var a);
    Var mean_rows(Var a);               // [n x c] -> [1 x c]

    // -- density ops --
    // Bivariate GMM log-density of a fixed point under raw per-row
    // mixture parameters. Row layout for m_components == 1:
    //   (mu_x, mu_y, s_x, s_y, r)          (5 columns)
    // for M > 1:
    //   (w_0..w_{M-1}, mu_x0, mu_y0, ..muxy pairs.., s_x0, s_y0, .., r_0..r_{M-1})
    // with sigma = exp(s) and correlation rho = tanh(r); mixture weights
    // are the softmax of the w logits. Output [n x 1].
    Var gmm_logp(Var raw, int m_components, double px, double py);

    // log N(point; mu, cov) per row; mu [n x 2], cov [n x 3] packed
    // (xx, xy, yy). Output [n x 1]. Throws NumericalError on non-PD rows.
    Var gauss2_logp(Var mu, Var cov, double px, double py);

    // (s1, s2, r) per row -> packed covariance (e^{2 s1}, rho e^{s1+s2}, e^{2 s2})
    Var cov_from_params(Var sp);

    // -- conv (binary occupancy encoder) --
    // x: [1 x (C*H*W)], weight [outC x (C*kh*kw)], bias [outC]; stride s,
    // zero padding (kh/2). Output [1 x (outC*oH*oW)].
    Var conv2d(Var x, Parameter& w, Parameter* b, int in_c, int h, int wdt, int out_c, int kh, int stride);

    // -- access --
    Shape shape(Var v) const { return nodes_[static_cast<size_t>(v.id)].shape; }
    std::span<const double> val(Var v) const;
    double scalar(Var v) const { return val(v)[0]; }
    std::span<const double> grad(Var v) const;  // valid after backward()

    void backward(Var scalar_output);
    bool consumed() const { return consumed_; }
    void reset();
    size_t node_count() const { return nodes_.size(); }

private:
    enum class Op : uint8_t {
        kConst, kParam, kLinear,
        kAdd, kSub, kMul, kAddScaled, kScale, kAddConst,
        kTanh, kSigmoid, kExp, kLog, kApply,
        kConcatCols, kSliceCols, kRepeatRows, kReshape,
        kSumAll, kDotAll, kLogSumExpAll, kRowLogSumExp,
        kRowSoftmax, kRowLogSoftmax, kMeanRows,
        kGmmLogp, kGauss2Logp, kCovFromParams, kConv2d,
    };

    struct Node {
        Op op;
        Fn fn = Fn::sin_;
        Shape shape;
        int in0 = -1, in1 = -1;
        size_t off = 0;          // value offset into vals_/grads_
        Parameter* w = nullptr;
        Parameter* b = nullptr;
        double a0 = 0.0, a1 = 0.0;
        int i0 = 0, i1 = 0;
        int extra_off = -1, extra_len = 0;  // indices into extra_
    };

    Var push(Node n);                 // allocates value storage
    double* data(int id) { return vals_.data() + nodes_[static_cast<size_t>(id)].off; }
    const double* data(int id) const { return vals_.data() + nodes_[static_cast<size_t>(id)].off; }
    double* gdata(int id) { return grads_.data() + nodes_[static_cast<size_t>(id)].off; }
    int size_of(int id) const { return nodes_[static_cast<size_t>(id)].shape.size(); }
    void check_same_shape(Var a, Var b, const char* what) const;

    void backward_node(int id);

    std::vector<Node> nodes_;
    std::vector<double> vals_;
    std::vector<double> grads_;
    std::vector<int> extra_;
    bool consumed_ = false;
};

// Evaluate Fn / its derivative outside the tape (shared with tests).
double fn_value(Fn f, double x);
double fn_deriv(Fn f, double x);

}  // namespace trajcast::diff

#include "trajcast/diff/tape.hpp"

#include <cassert>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "trajcast/core/phi.hpp"
#include "trajcast/core/types.hpp"
#include "trajcast/kernels/kernels.hpp"

namespace trajcast::diff {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

double fn_value(Fn f, double x) {
    switch (f) {
        case Fn::sin_: return std::sin(x);
        case Fn::cos_: return std::cos(x);
        case Fn::g1: return phi::g1(x);
        case Fn::g2: return phi::g2(x);
        case Fn::h1: return phi::h1(x);
        case Fn::u2: return phi::u2(x);
        case Fn::w2: return phi::w2(x);
        case Fn::w3: return phi::w3(x);
        case Fn::u3: return phi::u3(x);
    }
    return 0.0;
}

double fn_deriv(Fn f, double x) {
    switch (f) {
        case Fn::sin_: return std::cos(x);
        case Fn::cos_: return -std::sin(x);
        case Fn::g1: return phi::g1d(x);
        case Fn::g2: return phi::g2d(x);
        case Fn::h1: return phi::h1d(x);
        case Fn::u2: return phi::u2d(x);
        case Fn::w2: return phi::w2d(x);
        case Fn::w3: return phi::w3d(x);
        case Fn::u3: return phi::u3d(x);
    }
    return 0.0;
}

Tape::Tape(size_t reserve_values) {
    vals_.reserve(reserve_values);
    nodes_.reserve(reserve_values / 8);
}

void Tape::reset() {
    nodes_.clear();
    vals_.clear();
    grads_.clear();
    extra_.clear();
    consumed_ = false;
}

Var Tape::push(Node n) {
    n.off = vals_.size();
    vals_.resize(vals_.size() + static_cast<size_t>(n.shape.size()), 0.0);
    nodes_.push_back(n);
    return Var{static_cast<int>(nodes_.size()) - 1};
}

std::span<const double> Tape::val(Var v) const {
    const Node& n = nodes_[static_cast<size_t>(v.id)];
    return {vals_.data() + n.off, static_cast<size_t>(n.shape.size())};
}

std::span<const double> Tape::grad(Var v) const {
    const Node& n = nodes_[static_cast<size_t>(v.id)];
    return {grads_.data() + n.off, static_cast<size_t>(n.shape.size())};
}

void Tape::check_same_shape(Var a, Var b, const char* what) const {
    if (!(shape(a) == shape(b)))
        throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

// ---------------------------------------------------------------- leaves

Var Tape::constant(Shape s, std::span<const double> v) {
    if (static_cast<int>(v.size()) != s.size())
        throw std::invalid_argument("constant: size mismatch");
    Node n{};
    n.op = Op::kConst;
    n.shape = s;
    Var out = push(n);
    std::memcpy(data(out.id), v.data(), v.size() * sizeof(double));
    return out;
}

Var Tape::constant(Shape s, double fill) {
    Node n{};
    n.op = Op::kConst;
    n.shape = s;
    Var out = push(n);
    std::fill_n(data(out.id), s.size(), fill);
    return out;
}

Var Tape::scalar_const(double v) { return constant(Shape{1, 1}, std::span<const double>(&v, 1)); }

Var Tape::param(Parameter& p) {
    Node n{};
    n.op = Op::kParam;
    n.shape = p.shape;
    n.w = &p;
    Var out = push(n);
    std::memcpy(data(out.id), p.value.data(), p.value.size() * sizeof(double));
    return out;
}

// ---------------------------------------------------------------- linear

Var Tape::linear(Var x, Parameter& w, Parameter* b) {
    const Shape xs = shape(x);
    if (xs.cols != w.shape.cols)
        throw std::invalid_argument("linear: input width " + std::to_string(xs.cols) +
                                    " != weight fan-in " + std::to_string(w.shape.cols) +
                                    " (" + w.name + ")");
    if (b != nullptr && b->shape.size() != w.shape.rows)
        throw std::invalid_argument("linear: bias size mismatch (" + w.name + ")");
    Node n{};
    n.op = Op::kLinear;
    n.shape = Shape{xs.rows, w.shape.rows};
    n.in0 = x.id;
    n.w = &w;
    n.b = b;
    Var out = push(n);
    kernels::gemm_nt(data(x.id), w.value.data(), data(out.id), xs.rows, xs.cols, w.shape.rows);
    if (b != nullptr) {
        double* y = data(out.id);
        for (int i = 0; i < xs.rows; ++i)
            kernels::add(y + static_cast<size_t>(i) * w.shape.rows, b->value.data(),
                         y + static_cast<size_t>(i) * w.shape.rows, static_cast<size_t>(w.shape.rows));
    }
    return out;
}

// ---------------------------------------------------------------- elementwise

Var Tape::add(Var a, Var b) {
    check_same_shape(a, b, "add");
    Node n{};
    n.op = Op::kAdd;
    n.shape = shape(a);
    n.in0 = a.id;
    n.in1 = b.id;
    Var out = push(n);
    kernels::add(data(a.id), data(b.id), data(out.id), static_cast<size_t>(n.shape.size()));
    return out;
}

Var Tape::sub(Var a, Var b) {
    check_same_shape(a, b, "sub");
    Node n{};
    n.op = Op::kSub;
    n.shape = shape(a);
    n.in0 = a.id;
    n.in1 = b.id;
    Var out = push(n);
    kernels::sub(data(a.id), data(b.id), data(out.id), static_cast<size_t>(n.shape.size()));
    return out;
}

Var Tape::mul(Var a, Var b) {
    check_same_shape(a, b, "mul");
    Node n{};
    n.op = Op::kMul;
    n.shape = shape(a);
    n.in0 = a.id;
    n.in1 = b.id;
    Var out = push(n);
    kernels::mul(data(a.id), data(b.id), data(out.id), static_cast<size_t>(n.shape.size()));
    return out;
}

Var Tape::add_scaled(Var a, double alpha, Var b) {
    check_same_shape(a, b, "add_scaled");
    Node n{};
    n.op = Op::kAddScaled;
    n.shape = shape(a);
    n.in0 = a.id;
    n.in1 = b.id;
    n.a0 = alpha;
    Var out = push(n);
    const int sz = n.shape.size();
    std::memcpy(data(out.id), data(a.id), static_cast<size_t>(sz) * sizeof(double));
    kernels::axpy(data(out.id), alpha, data(b.id), static_cast<size_t>(sz));
    return out;
}

Var Tape::scale(Var a, double alpha) {
    Node n{};
    n.op = Op::kScale;
    n.shape = shape(a);
    n.in0 = a.id;
    n.a0 = alpha;
    Var out = push(n);
    kernels::scale(data(a.id), alpha, data(out.id), static_cast<size_t>(n.shape.size()));
    return out;
}

Var Tape::add_const(Var a, double alpha) {
    Node n{};
    n.op = Op::kAddConst;
    n.shape = shape(a);
    n.in0 = a.id;
    n.a0 = alpha;
    Var out = push(n);
    const double* x = data(a.id);
    double* y = data(out.id);
    for (int i = 0; i < n.shape.size(); ++i) y[i] = x[i] + alpha;
    return out;
}

Var Tape::tanh(Var a) {
    Node n{};
    n.op = Op::kTanh;
    n.shape = shape(a);
    n.in0 = a.id;
    Var out = push(n);
    const double* x = data(a.id);
    double* y = data(out.id);
    for (int i = 0; i < n.shape.size(); ++i) y[i] = std::tanh(x[i]);
    return out;
}

Var Tape::sigmoid(Var a) {
    Node n{};
    n.op = Op::kSigmoid;
    n.shape = shape(a);
    n.in0 = a.id;
    Var out = push(n);
    const double* x = data(a.id);
    double* y = data(out.id);
    for (int i = 0; i < n.shape.size(); ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
    return out;
}

Var Tape::exp(Var a) {
    Node n{};
    n.op = Op::kExp;
    n.shape = shape(a);
    n.in0 = a.id;
    Var out = push(n);
    const double* x = data(a.id);
    double* y = data(out.id);
    for (int i = 0; i < n.shape.size(); ++i) y[i] = std::exp(x[i]);
    return out;
}

Var Tape::log(Var a) {
    Node n{};
    n.op = Op::kLog;
    n.shape = shape(a);
    n.in0 = a.id;
    Var out = push(n);
    const double* x = data(a.id);
    double* y = data(out.id);
    for (int i = 0; i < n.shape.size(); ++i) y[i] = std::log(x[i]);
    return out;
}

Var Tape::apply(Fn fn, Var a) {
    Node n{};
    n.op = Op::kApply;
    n.fn = fn;
    n.shape = shape(a);
    n.in0 = a.id;
    Var out = push(n);
    const double* x = data(a.id);
    double* y = data(out.id);
    for (int i = 0; i < n.shape.size(); ++i) y[i] = fn_value(fn, x[i]);
    return out;
}

// ---------------------------------------------------------------- structure

Var Tape::concat_cols(std::span<const Var> xs) {
    if (xs.empty()) throw std::invalid_argument("concat_cols: empty");
    const int rows = shape(xs[0]).rows;
    int cols = 0;
    for (Var v : xs) {
        if (shape(v).rows != rows) throw std::invalid_argument("concat_cols: row mismatch");
        cols += shape(v).cols;
    }
    Node n{};
    n.op = Op::kConcatCols;
    n.shape = Shape{rows, cols};
    n.extra_off = static_cast<int>(extra_.size());
    n.extra_len = static_cast<int>(xs.size());
    for (Var v : xs) extra_.push_back(v.id);
    Var out = push(n);
    double* y = data(out.id);
    int c0 = 0;
    for (Var v : xs) {
        const int c = shape(v).cols;
        const double* x = data(v.id);
        for (int i = 0; i < rows; ++i)
            std::memcpy(y + static_cast<size_t>(i) * cols + c0, x + static_cast<size_t>(i) * c,
                        static_cast<size_t>(c) * sizeof(double));
        c0 += c;
    }
    return out;
}

Var Tape::slice_cols(Var a, int col0, int ncols) {
    const Shape s = shape(a);
    if (col0 < 0 || ncols <= 0 || col0 + ncols > s.cols)
        throw std::invalid_argument("slice_cols: out of range");
    Node n{};
    n.op = Op::kSliceCols;
    n.shape = Shape{s.rows, ncols};
    n.in0 = a.id;
    n.i0 = col0;
    Var out = push(n);
    const double* x = data(a.id);
    double* y = data(out.id);
    for (int i = 0; i < s.rows; ++i)
        std::memcpy(y + static_cast<size_t>(i) * ncols, x + static_cast<size_t>(i) * s.cols + col0,
                    static_cast<size_t>(ncols) * sizeof(double));
    return out;
}

Var Tape::repeat_rows(Var a, int nrows) {
    const Shape s = shape(a);
    if (s.rows != 1) throw std::invalid_argument("repeat_rows: input must have one row");
    Node n{};
    n.op = Op::kRepeatRows;
    n.shape = Shape{nrows, s.cols};
    n.in0 = a.id;
    Var out = push(n);
    const double* x = data(a.id);
    double* y = data(out.id);
    for (int i = 0; i < nrows; ++i)
        std::memcpy(y + static_cast<size_t>(i) * s.cols, x, static_cast<size_t>(s.cols) * sizeof(double));
    return out;
}

Var Tape::reshape(Var a, Shape s) {
    if (s.size() != shape(a).size()) throw std::invalid_argument("reshape: size mismatch");
    Node n{};
    n.op = Op::kReshape;
    n.shape = s;
    n.in0 = a.id;
    Var out = push(n);
    std::memcpy(data(out.id), data(a.id), static_cast<size_t>(s.size()) * sizeof(double));
    return out;
}

// ---------------------------------------------------------------- reductions

Var Tape::sum_all(Var a) {
    Node n{};
    n.op = Op::kSumAll;
    n.shape = Shape{1, 1};
    n.in0 = a.id;
    Var out = push(n);
    data(out.id)[0] = kernels::sum(data(a.id), static_cast<size_t>(size_of(a.id)));
    return out;
}

Var Tape::dot_all(Var a, Var b) {
    check_same_shape(a, b, "dot_all");
    Node n{};
    n.op = Op::kDotAll;
    n.shape = Shape{1, 1};
    n.in0 = a.id;
    n.in1 = b.id;
    Var out = push(n);
    data(out.id)[0] = kernels::dot(data(a.id), data(b.id), static_cast<size_t>(size_of(a.id)));
    return out;
}

Var Tape::logsumexp_all(Var a) {
    Node n{};
    n.op = Op::kLogSumExpAll;
    n.shape = Shape{1, 1};
    n.in0 = a.id;
    Var out = push(n);
    const double* x = data(a.id);
    const int sz = size_of(a.id);
    double mx = x[0];
    for (int i = 1; i < sz; ++i) mx = std::max(mx, x[i]);
    double s = 0.0;
    for (int i = 0; i < sz; ++i) s += std::exp(x[i] - mx);
    data(out.id)[0] = mx + std::log(s);
    return out;
}

Var Tape::row_logsumexp(Var a) {
    const Shape s = shape(a);
    Node n{};
    n.op = Op::kRowLogSumExp;
    n.shape = Shape{s.rows, 1};
    n.in0 = a.id;
    Var out = push(n);
    const double* x = data(a.id);
    double* y = data(out.id);
    for (int i = 0; i < s.rows; ++i) {
        const double* xi = x + static_cast<size_t>(i) * s.cols;
        double mx = xi[0];
        for (int j = 1; j < s.cols; ++j) mx = std::max(mx, xi[j]);
        double acc = 0.0;
        for (int j = 0; j < s.cols; ++j) acc += std::exp(xi[j] - mx);
        y[i] = mx + std::log(acc);
    }
    return out;
}

Var Tape::row_softmax(Var a) {
    const Shape s = shape(a);
    Node n{};
    n.op = Op::kRowSoftmax;
    n.shape = s;
    n.in0 = a.id;
    Var out = push(n);
    const double* x = data(a.id);
    double* y = data(out.id);
    for (int i = 0; i < s.rows; ++i) {
        const double* xi = x + static_cast<size_t>(i) * s.cols;
        double* yi = y + static_cast<size_t>(i) * s.cols;
        double mx = xi[0];
        for (int j = 1; j < s.cols; ++j) mx = std::max(mx, xi[j]);
        double acc = 0.0;
        for (int j = 0; j < s.cols; ++j) {
            yi[j] = std::exp(xi[j] - mx);
            acc += yi[j];
        }
        const double inv = 1.0 / acc;
        for (int j = 0; j < s.cols; ++j) yi[j] *= inv;
    }
    return out;
}

Var Tape::row_log_softmax(Var a) {
    const Shape s = shape(a);
    Node n{};
    n.op = Op::kRowLogSoftmax;
    n.shape = s;
    n.in0 = a.id;
    Var out = push(n);
    const double* x = data(a.id);
    double* y = data(out.id);
    for (int i = 0; i < s.rows; ++i) {
        const double* xi = x + static_cast<size_t>(i) * s.cols;
        double* yi = y + static_cast<size_t>(i) * s.cols;
        double mx = xi[0];
        for (int j = 1; j < s.cols; ++j) mx = std::max(mx, xi[j]);
        double acc = 0.0;
        for (int j = 0; j < s.cols; ++j) acc += std::exp(xi[j] - mx);
        const double lse = mx + std::log(acc);
        for (int j = 0; j < s.cols; ++j) yi[j] = xi[j] - lse;
    }
    return out;
}

Var Tape::mean_rows(Var a) {
    const Shape s = shape(a);
    Node n{};
    n.op = Op::kMeanRows;
    n.shape = Shape{1, s.cols};
    n.in0 = a.id;
    Var out = push(n);
    const double* x = data(a.id);
    double* y = data(out.id);
    std::fill_n(y, s.cols, 0.0);
    for (int i = 0; i < s.rows; ++i)
        kernels::axpy(y, 1.0 / s.rows, x + static_cast<size_t>(i) * s.cols, static_cast<size_t>(s.cols));
    return out;
}

// ---------------------------------------------------------------- densities

namespace {

// shared between forward and backward of kGmmLogp
struct GmmRowLayout {
    int m;
    bool has_w;
    int w0, mu0, s0, r0;
};

GmmRowLayout gmm_layout(int m) {
    GmmRowLayout l{};
    l.m = m;
    l.has_w = m > 1;
    l.w0 = 0;
    l.mu0 = l.has_w ? m : 0;
    l.s0 = l.mu0 + 2 * m;
    l.r0 = l.s0 + 2 * m;
    return l;
}

int gmm_row_width(int m) { return (m > 1 ? 6 : 5) * m; }

}  // namespace

Var Tape::gmm_logp(Var raw, int m_components, double px, double py) {
    const Shape s = shape(raw);
    if (s.cols != gmm_row_width(m_components))
        throw std::invalid_argument("gmm_logp: row width mismatch");
    Node n{};
    n.op = Op::kGmmLogp;
    n.shape = Shape{s.rows, 1};
    n.in0 = raw.id;
    n.i0 = m_components;
    n.a0 = px;
    n.a1 = py;
    Var out = push(n);
    const GmmRowLayout l = gmm_layout(m_components);
    const double* x = data(raw.id);
    double* y = data(out.id);
    std::vector<double> a(static_cast<size_t>(l.m));
    for (int i = 0; i < s.rows; ++i) {
        const double* row = x + static_cast<size_t>(i) * s.cols;
        double wlse = 0.0;
        if (l.has_w) {
            double mx = row[l.w0];
            for (int m = 1; m < l.m; ++m) mx = std::max(mx, row[l.w0 + m]);
            double acc = 0.0;
            for (int m = 0; m < l.m; ++m) acc += std::exp(row[l.w0 + m] - mx);
            wlse = mx + std::log(acc);
        }
        for (int m = 0; m < l.m; ++m) {
            const double sx = row[l.s0 + 2 * m], sy = row[l.s0 + 2 * m + 1];
            const double rho = std::tanh(row[l.r0 + m]);
            const double dx = (px - row[l.mu0 + 2 * m]) * std::exp(-sx);
            const double dy = (py - row[l.mu0 + 2 * m + 1]) * std::exp(-sy);
            const double om = 1.0 - rho * rho;
            const double q = (dx * dx - 2.0 * rho * dx * dy + dy * dy) / om;
            const double logn = -kLog2Pi - sx - sy - 0.5 * std::log(om) - 0.5 * q;
            a[static_cast<size_t>(m)] = (l.has_w ? row[l.w0 + m] - wlse : 0.0) + logn;
        }
        double mx = a[0];
        for (int m = 1; m < l.m; ++m) mx = std::max(mx, a[static_cast<size_t>(m)]);
        double acc = 0.0;
        for (int m = 0; m < l.m; ++m) acc += std::exp(a[static_cast<size_t>(m)] - mx);
        y[i] = mx + std::log(acc);
    }
    return out;
}

Var Tape::gauss2_logp(Var mu, Var cov, double px, double py) {
    const Shape ms = shape(mu), cs = shape(cov);
    if (ms.cols != 2 || cs.cols != 3 || ms.rows != cs.rows)
        throw std::invalid_argument("gauss2_logp: bad shapes");
    Node n{};
    n.op = Op::kGauss2Logp;
    n.shape = Shape{ms.rows, 1};
    n.in0 = mu.id;
    n.in1 = cov.id;
    n.a0 = px;
    n.a1 = py;
    Var out = push(n);
    const double* m = data(mu.id);
    const double* c = data(cov.id);
    double* y = data(out.id);
    for (int i = 0; i < ms.rows; ++i) {
        const double a = c[3 * i], b = c[3 * i + 1], d = c[3 * i + 2];
        const double det = a * d - b * b;
        if (!(det > 0.0) || !(a > 0.0))
            throw NumericalError("gauss2_logp: covariance not positive definite");
        const double dx = px - m[2 * i], dy = py - m[2 * i + 1];
        const double q = (d * dx * dx - 2.0 * b * dx * dy + a * dy * dy) / det;
        y[i] = -kLog2Pi - 0.5 * std::log(det) - 0.5 * q;
    }
    return out;
}

Var Tape::cov_from_params(Var sp) {
    const Shape s = shape(sp);
    if (s.cols != 3) throw std::invalid_argument("cov_from_params: expected 3 columns");
    Node n{};
    n.op = Op::kCovFromParams;
    n.shape = s;
    n.in0 = sp.id;
    Var out = push(n);
    const double* x = data(sp.id);
    double* y = data(out.id);
    for (int i = 0; i < s.rows; ++i) {
        const double s1 = x[3 * i], s2 = x[3 * i + 1], r = x[3 * i + 2];
        y[3 * i] = std::exp(2.0 * s1);
        y[3 * i + 1] = std::tanh(r) * std::exp(s1 + s2);
        y[3 * i + 2] = std::exp(2.0 * s2);
    }
    return out;
}

// ---------------------------------------------------------------- conv

namespace {

struct ConvDims {
    int in_c, h, w, out_c, kh, stride, pad, oh, ow;
};

ConvDims conv_dims(const int* e) {
    ConvDims d{};
    d.in_c = e[0];
    d.h = e[1];
    d.w = e[2];
    d.out_c = e[3];
    d.kh = e[4];
    d.stride = e[5];
    d.pad = d.kh / 2;
    d.oh = (d.h + 2 * d.pad - d.kh) / d.stride + 1;
    d.ow = (d.w + 2 * d.pad - d.kh) / d.stride + 1;
    return d;
}

void im2col(const double* x, const ConvDims& d, double* cols) {
    // cols: [oh*ow rows x in_c*kh*kh]
    const int ksz = d.in_c * d.kh * d.kh;
    for (int oy = 0; oy < d.oh; ++oy) {
        for (int ox = 0; ox < d.ow; ++ox) {
            double* row = cols + (static_cast<size_t>(oy) * d.ow + ox) * ksz;
            int idx = 0;
            for (int c = 0; c < d.in_c; ++c) {
                for (int ky = 0; ky < d.kh; ++ky) {
                    const int iy = oy * d.stride + ky - d.pad;
                    for (int kx = 0; kx < d.kh; ++kx) {
                        const int ix = ox * d.stride + kx - d.pad;
                        row[idx++] = (iy >= 0 && iy < d.h && ix >= 0 && ix < d.w)
                                         ? x[(static_cast<size_t>(c) * d.h + iy) * d.w + ix]
                                         : 0.0;
                    }
                }
            }
        }
    }
}

void col2im_add(const double* cols, const ConvDims& d, double* gx) {
    const int ksz = d.in_c * d.kh * d.kh;
    for (int oy = 0; oy < d.oh; ++oy) {
        for (int ox = 0; ox < d.ow; ++ox) {
            const double* row = cols + (static_cast<size_t>(oy) * d.ow + ox) * ksz;
            int idx = 0;
            for (int c = 0; c < d.in_c; ++c) {
                for (int ky = 0; ky < d.kh; ++ky) {
                    const int iy = oy * d.stride + ky - d.pad;
                    for (int kx = 0; kx < d.kh; ++kx) {
                        const int ix = ox * d.stride + kx - d.pad;
                        if (iy >= 0 && iy < d.h && ix >= 0 && ix < d.w)
                            gx[(static_cast<size_t>(c) * d.h + iy) * d.w + ix] += row[idx];
                        ++idx;
                    }
                }
            }
        }
    }
}

}  // namespace

Var Tape::conv2d(Var x, Parameter& w, Parameter* b, int in_c, int h, int wdt, int out_c, int kh, int stride) {
    if (shape(x).size() != in_c * h * wdt)
        throw std::invalid_argument("conv2d: input size mismatch");
    const int ksz = in_c * kh * kh;
    if (w.shape.rows != out_c || w.shape.cols != ksz)
        throw std::invalid_argument("conv2d: weight shape mismatch (" + w.name + ")");
    Node n{};
    n.op = Op::kConv2d;
    n.in0 = x.id;
    n.w = &w;
    n.b = b;
    n.extra_off = static_cast<int>(extra_.size());
    n.extra_len = 6;
    extra_.push_back(in_c);
    extra_.push_back(h);
    extra_.push_back(wdt);
    extra_.push_back(out_c);
    extra_.push_back(kh);
    extra_.push_back(stride);
    const ConvDims d = conv_dims(&extra_[static_cast<size_t>(n.extra_off)]);
    n.shape = Shape{1, out_c * d.oh * d.ow};
    Var out = push(n);
    std::vector<double> cols(static_cast<size_t>(d.oh) * d.ow * ksz);
    im2col(data(x.id), d, cols.data());
    // out[out_c x npix] = W[out_c x ksz] * cols[npix x ksz]^T
    kernels::gemm_nt(w.value.data(), cols.data(), data(out.id), out_c, ksz, d.oh * d.ow);
    if (b != nullptr) {
        double* y = data(out.id);
        const int npix = d.oh * d.ow;
        for (int c = 0; c < out_c; ++c)
            for (int p = 0; p < npix; ++p) y[static_cast<size_t>(c) * npix + p] += b->value[static_cast<size_t>(c)];
    }
    return out;
}

// ---------------------------------------------------------------- backward

void Tape::backward(Var out) {
    if (consumed_) throw std::logic_error("tape already consumed by a backward pass");
    if (shape(out).size() != 1) throw std::invalid_argument("backward: output must be scalar");
    consumed_ = true;
    grads_.assign(vals_.size(), 0.0);
    // mark ancestors of out so unrelated forward work is skipped
    std::vector<uint8_t> live(nodes_.size(), 0);
    live[static_cast<size_t>(out.id)] = 1;
    for (int i = out.id; i >= 0; --i) {
        if (!live[static_cast<size_t>(i)]) continue;
        const Node& n = nodes_[static_cast<size_t>(i)];
        if (n.in0 >= 0) live[static_cast<size_t>(n.in0)] = 1;
        if (n.in1 >= 0) live[static_cast<size_t>(n.in1)] = 1;
        if (n.op == Op::kConcatCols)
            for (int j = 0; j < n.extra_len; ++j)
                live[static_cast<size_t>(extra_[static_cast<size_t>(n.extra_off + j)])] = 1;
    }
    gdata(out.id)[0] = 1.0;
    for (int i = out.id; i >= 0; --i)
        if (live[static_cast<size_t>(i)]) backward_node(i);
}

void Tape::backward_node(int id) {
    const Node& n = nodes_[static_cast<size_t>(id)];
    const double* gy = gdata(id);
    const int sz = n.shape.size();
    switch (n.op) {
        case Op::kConst:
            break;
        case Op::kParam:
            kernels::axpy(n.w->grad.data(), 1.0, gy, static_cast<size_t>(sz));
            break;
        case Op::kLinear: {
            const Shape xs = nodes_[static_cast<size_t>(n.in0)].shape;
            // gx += gy * W ; gW += gy^T * x ; gb += colsum(gy)
            kernels::gemm_nn(gy, n.w->value.data(), gdata(n.in0), xs.rows, n.shape.cols, xs.cols, true);
            kernels::gemm_tn(gy, data(n.in0), n.w->grad.data(), xs.rows, n.shape.cols, xs.cols, true);
            if (n.b != nullptr) {
                for (int i = 0; i < xs.rows; ++i)
                    kernels::axpy(n.b->grad.data(), 1.0, gy + static_cast<size_t>(i) * n.shape.cols,
                                  static_cast<size_t>(n.shape.cols));
            }
            break;
        }
        case Op::kAdd:
            kernels::axpy(gdata(n.in0), 1.0, gy, static_cast<size_t>(sz));
            kernels::axpy(gdata(n.in1), 1.0, gy, static_cast<size_t>(sz));
            break;
        case Op::kSub:
            kernels::axpy(gdata(n.in0), 1.0, gy, static_cast<size_t>(sz));
            kernels::axpy(gdata(n.in1), -1.0, gy, static_cast<size_t>(sz));
            break;
        case Op::kMul:
            kernels::madd(gdata(n.in0), gy, data(n.in1), static_cast<size_t>(sz));
            kernels::madd(gdata(n.in1), gy, data(n.in0), static_cast<size_t>(sz));
            break;
        case Op::kAddScaled:
            kernels::axpy(gdata(n.in0), 1.0, gy, static_cast<size_t>(sz));
            kernels::axpy(gdata(n.in1), n.a0, gy, static_cast<size_t>(sz));
            break;
        case Op::kScale:
            kernels::axpy(gdata(n.in0), n.a0, gy, static_cast<size_t>(sz));
            break;
        case Op::kAddConst:
            kernels::axpy(gdata(n.in0), 1.0, gy, static_cast<size_t>(sz));
            break;
        case Op::kTanh: {
            const double* y = data(id);
            double* gx = gdata(n.in0);
            for (int i = 0; i < sz; ++i) gx[i] += gy[i] * (1.0 - y[i] * y[i]);
            break;
        }
        case Op::kSigmoid: {
            const double* y = data(id);
            double* gx = gdata(n.in0);
            for (int i = 0; i < sz; ++i) gx[i] += gy[i] * y[i] * (1.0 - y[i]);
            break;
        }
        case Op::kExp:
            kernels::madd(gdata(n.in0), gy, data(id), static_cast<size_t>(sz));
            break;
        case Op::kLog: {
            const double* x = data(n.in0);
            double* gx = gdata(n.in0);
            for (int i = 0; i < sz; ++i) gx[i] += gy[i] / x[i];
            break;
        }
        case Op::kApply: {
            const double* x = data(n.in0);
            double* gx = gdata(n.in0);
            for (int i = 0; i < sz; ++i) gx[i] += gy[i] * fn_deriv(n.fn, x[i]);
            break;
        }
        case Op::kConcatCols: {
            int c0 = 0;
            for (int j = 0; j < n.extra_len; ++j) {
                const int src = extra_[static_cast<size_t>(n.extra_off + j)];
                const Shape ss = nodes_[static_cast<size_t>(src)].shape;
                double* gx = gdata(src);
                for (int i = 0; i < ss.rows; ++i)
                    kernels::axpy(gx + static_cast<size_t>(i) * ss.cols, 1.0,
                                  gy + static_cast<size_t>(i) * n.shape.cols + c0,
                                  static_cast<size_t>(ss.cols));
                c0 += ss.cols;
            }
            break;
        }
        case Op::kSliceCols: {
            const Shape ss = nodes_[static_cast<size_t>(n.in0)].shape;
            double* gx = gdata(n.in0);
            for (int i = 0; i < n.shape.rows; ++i)
                kernels::axpy(gx + static_cast<size_t>(i) * ss.cols + n.i0, 1.0,
                              gy + static_cast<size_t>(i) * n.shape.cols,
                              static_cast<size_t>(n.shape.cols));
            break;
        }
        case Op::kRepeatRows: {
            double* gx = gdata(n.in0);
            for (int i = 0; i < n.shape.rows; ++i)
                kernels::axpy(gx, 1.0, gy + static_cast<size_t>(i) * n.shape.cols,
                              static_cast<size_t>(n.shape.cols));
            break;
        }
        case Op::kReshape:
            kernels::axpy(gdata(n.in0), 1.0, gy, static_cast<size_t>(sz));
            break;
        case Op::kSumAll: {
            double* gx = gdata(n.in0);
            const int isz = size_of(n.in0);
            for (int i = 0; i < isz; ++i) gx[i] += gy[0];
            break;
        }
        case Op::kDotAll:
            kernels::axpy(gdata(n.in0), gy[0], data(n.in1), static_cast<size_t>(size_of(n.in0)));
            kernels::axpy(gdata(n.in1), gy[0], data(n.in0), static_cast<size_t>(size_of(n.in0)));
            break;
        case Op::kLogSumExpAll: {
            const double* x = data(n.in0);
            const double y = data(id)[0];
            double* gx = gdata(n.in0);
            const int isz = size_of(n.in0);
            for (int i = 0; i < isz; ++i) gx[i] += gy[0] * std::exp(x[i] - y);
            break;
        }
        case Op::kRowLogSumExp: {
            const Shape ss = nodes_[static_cast<size_t>(n.in0)].shape;
            const double* x = data(n.in0);
            const double* y = data(id);
            double* gx = gdata(n.in0);
            for (int i = 0; i < ss.rows; ++i)
                for (int j = 0; j < ss.cols; ++j)
                    gx[static_cast<size_t>(i) * ss.cols + j] +=
                        gy[i] * std::exp(x[static_cast<size_t>(i) * ss.cols + j] - y[i]);
            break;
        }
        case Op::kRowSoftmax: {
            const double* y = data(id);
            double* gx = gdata(n.in0);
            for (int i = 0; i < n.shape.rows; ++i) {
                const double* yi = y + static_cast<size_t>(i) * n.shape.cols;
                const double* gyi = gy + static_cast<size_t>(i) * n.shape.cols;
                double dotv = kernels::dot(gyi, yi, static_cast<size_t>(n.shape.cols));
                double* gxi = gx + static_cast<size_t>(i) * n.shape.cols;
                for (int j = 0; j < n.shape.cols; ++j) gxi[j] += yi[j] * (gyi[j] - dotv);
            }
            break;
        }
        case Op::kRowLogSoftmax: {
            const double* y = data(id);
            double* gx = gdata(n.in0);
            for (int i = 0; i < n.shape.rows; ++i) {
                const double* yi = y + static_cast<size_t>(i) * n.shape.cols;
                const double* gyi = gy + static_cast<size_t>(i) * n.shape.cols;
                const double gsum = kernels::sum(gyi, static_cast<size_t>(n.shape.cols));
                double* gxi = gx + static_cast<size_t>(i) * n.shape.cols;
                for (int j = 0; j < n.shape.cols; ++j) gxi[j] += gyi[j] - std::exp(yi[j]) * gsum;
            }
            break;
        }
        case Op::kMeanRows: {
            const Shape ss = nodes_[static_cast<size_t>(n.in0)].shape;
            double* gx = gdata(n.in0);
            for (int i = 0; i < ss.rows; ++i)
                kernels::axpy(gx + static_cast<size_t>(i) * ss.cols, 1.0 / ss.rows, gy,
                              static_cast<size_t>(ss.cols));
            break;
        }
        case Op::kGmmLogp: {
            const GmmRowLayout l = gmm_layout(n.i0);
            const Shape ss = nodes_[static_cast<size_t>(n.in0)].shape;
            const double* x = data(n.in0);
            double* gx = gdata(n.in0);
            const double px = n.a0, py = n.a1;
            std::vector<double> a(static_cast<size_t>(l.m)), pi(static_cast<size_t>(l.m));
            for (int i = 0; i < ss.rows; ++i) {
                const double* row = x + static_cast<size_t>(i) * ss.cols;
                double* grow = gx + static_cast<size_t>(i) * ss.cols;
                const double g = gy[i];
                if (g == 0.0) continue;
                double wlse = 0.0;
                if (l.has_w) {
                    double mx = row[l.w0];
                    for (int m = 1; m < l.m; ++m) mx = std::max(mx, row[l.w0 + m]);
                    double acc = 0.0;
                    for (int m = 0; m < l.m; ++m) acc += std::exp(row[l.w0 + m] - mx);
                    wlse = mx + std::log(acc);
                    for (int m = 0; m < l.m; ++m) pi[static_cast<size_t>(m)] = std::exp(row[l.w0 + m] - wlse);
                }
                for (int m = 0; m < l.m; ++m) {
                    const double sx = row[l.s0 + 2 * m], sy = row[l.s0 + 2 * m + 1];
                    const double rho = std::tanh(row[l.r0 + m]);
                    const double dx = (px - row[l.mu0 + 2 * m]) * std::exp(-sx);
                    const double dy = (py - row[l.mu0 + 2 * m + 1]) * std::exp(-sy);
                    const double om = 1.0 - rho * rho;
                    const double q = (dx * dx - 2.0 * rho * dx * dy + dy * dy) / om;
                    a[static_cast<size_t>(m)] =
                        (l.has_w ? row[l.w0 + m] - wlse : 0.0) - kLog2Pi - sx - sy - 0.5 * std::log(om) - 0.5 * q;
                }
                double mx = a[0];
                for (int m = 1; m < l.m; ++m) mx = std::max(mx, a[static_cast<size_t>(m)]);
                double acc = 0.0;
                for (int m = 0; m < l.m; ++m) acc += std::exp(a[static_cast<size_t>(m)] - mx);
                const double lse = mx + std::log(acc);
                for (int m = 0; m < l.m; ++m) {
                    const double resp = std::exp(a[static_cast<size_t>(m)] - lse);
                    const double sx = row[l.s0 + 2 * m], sy = row[l.s0 + 2 * m + 1];
                    const double rr = row[l.r0 + m];
                    const double rho = std::tanh(rr);
                    const double dx = (px - row[l.mu0 + 2 * m]) * std::exp(-sx);
                    const double dy = (py - row[l.mu0 + 2 * m + 1]) * std::exp(-sy);
                    const double om = 1.0 - rho * rho;
                    const double gm = g * resp;
                    if (l.has_w) grow[l.w0 + m] += g * (resp - pi[static_cast<size_t>(m)]);
                    grow[l.mu0 + 2 * m] += gm * (dx - rho * dy) / (om * std::exp(sx));
                    grow[l.mu0 + 2 * m + 1] += gm * (dy - rho * dx) / (om * std::exp(sy));
                    grow[l.s0 + 2 * m] += gm * (-1.0 + dx * (dx - rho * dy) / om);
                    grow[l.s0 + 2 * m + 1] += gm * (-1.0 + dy * (dy - rho * dx) / om);
                    const double dlogn_drho =
                        rho / om - (rho * (dx * dx + dy * dy) - dx * dy * (1.0 + rho * rho)) / (om * om);
                    grow[l.r0 + m] += gm * dlogn_drho * (1.0 - rho * rho);
                }
            }
            break;
        }
        case Op::kGauss2Logp: {
            const double* m = data(n.in0);
            const double* c = data(n.in1);
            double* gmu = gdata(n.in0);
            double* gcov = gdata(n.in1);
            for (int i = 0; i < n.shape.rows; ++i) {
                const double g = gy[i];
                if (g == 0.0) continue;
                const double a = c[3 * i], b = c[3 * i + 1], d = c[3 * i + 2];
                const double det = a * d - b * b;
                const double ia = d / det, ib = -b / det, ic = a / det;
                const double dx = n.a0 - m[2 * i], dy = n.a1 - m[2 * i + 1];
                const double ex = ia * dx + ib * dy;
                const double ey = ib * dx + ic * dy;
                gmu[2 * i] += g * ex;
                gmu[2 * i + 1] += g * ey;
                gcov[3 * i] += g * 0.5 * (ex * ex - ia);
                gcov[3 * i + 1] += g * (ex * ey - ib);
                gcov[3 * i + 2] += g * 0.5 * (ey * ey - ic);
            }
            break;
        }
        case Op::kCovFromParams: {
            const double* x = data(n.in0);
            const double* y = data(id);
            double* gx = gdata(n.in0);
            for (int i = 0; i < n.shape.rows; ++i) {
                const double r = x[3 * i + 2];
                const double t = std::tanh(r);
                const double ese = std::exp(x[3 * i] + x[3 * i + 1]);
                const double gxx = gy[3 * i], gxy = gy[3 * i + 1], gyy = gy[3 * i + 2];
                gx[3 * i] += 2.0 * y[3 * i] * gxx + y[3 * i + 1] * gxy;
                gx[3 * i + 1] += 2.0 * y[3 * i + 2] * gyy + y[3 * i + 1] * gxy;
                gx[3 * i + 2] += ese * (1.0 - t * t) * gxy;
            }
            break;
        }
        case Op::kConv2d: {
            const ConvDims d = conv_dims(&extra_[static_cast<size_t>(n.extra_off)]);
            const int ksz = d.in_c * d.kh * d.kh;
            const int npix = d.oh * d.ow;
            std::vector<double> cols(static_cast<size_t>(npix) * ksz);
            im2col(data(n.in0), d, cols.data());
            // gW += gy[out_c x npix] * cols[npix x ksz]
            kernels::gemm_nn(gy, cols.data(), n.w->grad.data(), d.out_c, npix, ksz, true);
            // gcols[npix x ksz] = gy^T[npix x out_c] * W[out_c x ksz]
            std::vector<double> gcols(static_cast<size_t>(npix) * ksz);
            kernels::gemm_tn(gy, n.w->value.data(), gcols.data(), d.out_c, npix, ksz, false);
            col2im_add(gcols.data(), d, gdata(n.in0));
            if (n.b != nullptr)
                for (int cch = 0; cch < d.out_c; ++cch)
                    n.b->grad[static_cast<size_t>(cch)] +=
                        kernels::sum(gy + static_cast<size_t>(cch) * npix, static_cast<size_t>(npix));
            break;
        }
    }
}

}  // namespace trajcast::diff

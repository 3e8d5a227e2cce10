#include "trajcast/kernels/kernels.hpp"

#include <cstring>

namespace trajcast::kernels {
namespace {

void s_gemm_nt(const double* a, const double* b, double* c, int n, int k, int m, bool acc) {
    for (int i = 0; i < n; ++i) {
        const double* ai = a + static_cast<size_t>(i) * k;
        double* ci = c + static_cast<size_t>(i) * m;
        for (int j = 0; j < m; ++j) {
            const double* bj = b + static_cast<size_t>(j) * k;
            double s = acc ? ci[j] : 0.0;
            for (int p = 0; p < k; ++p) s += ai[p] * bj[p];
            ci[j] = s;
        }
    }
}

void s_gemm_nn(const double* a, const double* b, double* c, int n, int m, int k, bool acc) {
    for (int i = 0; i < n; ++i) {
        const double* ai = a + static_cast<size_t>(i) * m;
        double* ci = c + static_cast<size_t>(i) * k;
        if (!acc) std::memset(ci, 0, sizeof(double) * k);
        for (int p = 0; p < m; ++p) {
            const double aip = ai[p];
            const double* bp = b + static_cast<size_t>(p) * k;
            for (int j = 0; j < k; ++j) ci[j] += aip * bp[j];
        }
    }
}

void s_gemm_tn(const double* a, const double* b, double* c, int n, int m, int k, bool acc) {
    if (!acc) std::memset(c, 0, sizeof(double) * m * k);
    for (int i = 0; i < n; ++i) {
        const double* ai = a + static_cast<size_t>(i) * m;
        const double* bi = b + static_cast<size_t>(i) * k;
        for (int p = 0; p < m; ++p) {
            const double aip = ai[p];
            double* cp = c + static_cast<size_t>(p) * k;
            for (int j = 0; j < k; ++j) cp[j] += aip * bi[j];
        }
    }
}

void s_add(const double* a, const double* b, double* dst, size_t n) {
    for (size_t i = 0; i < n; ++i) dst[i] = a[i] + b[i];
}
void s_sub(const double* a, const double* b, double* dst, size_t n) {
    for (size_t i = 0; i < n; ++i) dst[i] = a[i] - b[i];
}
void s_mul(const double* a, const double* b, double* dst, size_t n) {
    for (size_t i = 0; i < n; ++i) dst[i] = a[i] * b[i];
}
void s_madd(double* dst, const double* a, const double* b, size_t n) {
    for (size_t i = 0; i < n; ++i) dst[i] += a[i] * b[i];
}
void s_axpy(double* dst, double alpha, const double* x, size_t n) {
    for (size_t i = 0; i < n; ++i) dst[i] += alpha * x[i];
}
void s_scale(const double* a, double alpha, double* dst, size_t n) {
    for (size_t i = 0; i < n; ++i) dst[i] = alpha * a[i];
}
double s_dot(const double* a, const double* b, size_t n) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}
double s_sum(const double* a, size_t n) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += a[i];
    return s;
}
double s_sum_sq(const double* a, size_t n) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += a[i] * a[i];
    return s;
}

}  // namespace

namespace detail {
Ops scalar_ops() {
    Ops o;
    o.gemm_nt = s_gemm_nt;
    o.gemm_nn = s_gemm_nn;
    o.gemm_tn = s_gemm_tn;
    o.add = s_add;
    o.sub = s_sub;
    o.mul = s_mul;
    o.madd = s_madd;
    o.axpy = s_axpy;
    o.scale = s_scale;
    o.dot = s_dot;
    o.sum = s_sum;
    o.sum_sq = s_sum_sq;
    return o;
}
}  // namespace detail

}  // namespace trajcast::kernels

#pragma once

#include <cstddef>
#include <string>

// Dense double-precision primitives behind the autodiff tape and the
// simulators. Every routine has a scalar reference implementation and,
// on x86-64 with AVX2+FMA, a vectorized variant selected at runtime.
// The two backends are equivalence-tested against each other; callers
// must not rely on bitwise-identical results across backends (reduction
// order differs), only on results within a few ulps relative error.
namespace trajcast::kernels {

enum class Backend { scalar, avx2 };

// Selects the dispatch backend. `auto` resolution happens in select_auto().
// Returns false if the requested backend is unavailable on this machine.
bool select(Backend b);

// Picks the best available backend, honoring the TRAJCAST_KERNELS
// environment variable ("scalar" or "avx2") when set. Called lazily on
// first kernel use; safe to call again to re-resolve.
void select_auto();

Backend active();
const char* backend_name();
bool avx2_available();

struct Ops {
    // C[n x m] = (accumulate ? C : 0) + A[n x k] * B[m x k]^T
    void (*gemm_nt)(const double* a, const double* b, double* c, int n, int k, int m, bool accumulate);
    // C[n x k] = (accumulate ? C : 0) + A[n x m] * B[m x k]
    void (*gemm_nn)(const double* a, const double* b, double* c, int n, int m, int k, bool accumulate);
    // C[m x k] = (accumulate ? C : 0) + A[n x m]^T * B[n x k]
    void (*gemm_tn)(const double* a, const double* b, double* c, int n, int m, int k, bool accumulate);

    void (*add)(const double* a, const double* b, double* dst, size_t n);
    void (*sub)(const double* a, const double* b, double* dst, size_t n);
    void (*mul)(const double* a, const double* b, double* dst, size_t n);
    void (*madd)(double* dst, const double* a, const double* b, size_t n);  // dst += a .* b
    void (*axpy)(double* dst, double alpha, const double* x, size_t n);     // dst += alpha * x
    void (*scale)(const double* a, double alpha, double* dst, size_t n);
    double (*dot)(const double* a, const double* b, size_t n);
    double (*sum)(const double* a, size_t n);
    double (*sum_sq)(const double* a, size_t n);
};

const Ops& ops();

// -- convenience wrappers ---------------------------------------------------

inline void gemm_nt(const double* a, const double* b, double* c, int n, int k, int m, bool acc = false) {
    ops().gemm_nt(a, b, c, n, k, m, acc);
}
inline void gemm_nn(const double* a, const double* b, double* c, int n, int m, int k, bool acc = false) {
    ops().gemm_nn(a, b, c, n, m, k, acc);
}
inline void gemm_tn(const double* a, const double* b, double* c, int n, int m, int k, bool acc = false) {
    ops().gemm_tn(a, b, c, n, m, k, acc);
}
inline void add(const double* a, const double* b, double* dst, size_t n) { ops().add(a, b, dst, n); }
inline void sub(const double* a, const double* b, double* dst, size_t n) { ops().sub(a, b, dst, n); }
inline void mul(const double* a, const double* b, double* dst, size_t n) { ops().mul(a, b, dst, n); }
inline void madd(double* dst, const double* a, const double* b, size_t n) { ops().madd(dst, a, b, n); }
inline void axpy(double* dst, double alpha, const double* x, size_t n) { ops().axpy(dst, alpha, x, n); }
inline void scale(const double* a, double alpha, double* dst, size_t n) { ops().scale(a, alpha, dst, n); }
inline double dot(const double* a, const double* b, size_t n) { return ops().dot(a, b, n); }
inline double sum(const double* a, size_t n) { return ops().sum(a, n); }
inline double sum_sq(const double* a, size_t n) { return ops().sum_sq(a, n); }

namespace detail {
Ops scalar_ops();
#if defined(TRAJCAST_HAVE_AVX2)
Ops avx2_ops();
#endif
}  // namespace detail

}  // namespace trajcast::kernels

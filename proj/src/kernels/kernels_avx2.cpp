// AVX2+FMA variants. Compiled with -mavx2 -mfma; only dispatched to at
// runtime after a cpuid check, so the rest of the binary stays generic.

#include "trajcast/kernels/kernels.hpp"

#if defined(TRAJCAST_HAVE_AVX2)

#include <immintrin.h>

#include <cstring>

namespace trajcast::kernels {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swp = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swp));
}

inline double dot_row(const double* a, const double* b, int k) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    int p = 0;
    for (; p + 8 <= k; p += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + p), _mm256_loadu_pd(b + p), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + p + 4), _mm256_loadu_pd(b + p + 4), acc1);
    }
    for (; p + 4 <= k; p += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + p), _mm256_loadu_pd(b + p), acc0);
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; p < k; ++p) s += a[p] * b[p];
    return s;
}

void v_gemm_nt(const double* a, const double* b, double* c, int n, int k, int m, bool acc) {
    for (int i = 0; i < n; ++i) {
        const double* ai = a + static_cast<size_t>(i) * k;
        double* ci = c + static_cast<size_t>(i) * m;
        for (int j = 0; j < m; ++j) {
            const double s = dot_row(ai, b + static_cast<size_t>(j) * k, k);
            ci[j] = acc ? ci[j] + s : s;
        }
    }
}

// row-of-C accumulation: c_i += a_ip * b_p for each p
inline void row_axpy(double* ci, double aip, const double* bp, int k) {
    const __m256d va = _mm256_set1_pd(aip);
    int j = 0;
    for (; j + 4 <= k; j += 4) {
        __m256d vc = _mm256_loadu_pd(ci + j);
        vc = _mm256_fmadd_pd(va, _mm256_loadu_pd(bp + j), vc);
        _mm256_storeu_pd(ci + j, vc);
    }
    for (; j < k; ++j) ci[j] += aip * bp[j];
}

void v_gemm_nn(const double* a, const double* b, double* c, int n, int m, int k, bool acc) {
    for (int i = 0; i < n; ++i) {
        const double* ai = a + static_cast<size_t>(i) * m;
        double* ci = c + static_cast<size_t>(i) * k;
        if (!acc) std::memset(ci, 0, sizeof(double) * k);
        for (int p = 0; p < m; ++p) row_axpy(ci, ai[p], b + static_cast<size_t>(p) * k, k);
    }
}

void v_gemm_tn(const double* a, const double* b, double* c, int n, int m, int k, bool acc) {
    if (!acc) std::memset(c, 0, sizeof(double) * m * k);
    for (int i = 0; i < n; ++i) {
        const double* ai = a + static_cast<size_t>(i) * m;
        const double* bi = b + static_cast<size_t>(i) * k;
        for (int p = 0; p < m; ++p) row_axpy(c + static_cast<size_t>(p) * k, ai[p], bi, k);
    }
}

void v_add(const double* a, const double* b, double* dst, size_t n) {
    size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) dst[i] = a[i] + b[i];
}
void v_sub(const double* a, const double* b, double* dst, size_t n) {
    size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(dst + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) dst[i] = a[i] - b[i];
}
void v_mul(const double* a, const double* b, double* dst, size_t n) {
    size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(dst + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) dst[i] = a[i] * b[i];
}
void v_madd(double* dst, const double* a, const double* b, size_t n) {
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vd = _mm256_loadu_pd(dst + i);
        vd = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), vd);
        _mm256_storeu_pd(dst + i, vd);
    }
    for (; i < n; ++i) dst[i] += a[i] * b[i];
}
void v_axpy(double* dst, double alpha, const double* x, size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vd = _mm256_loadu_pd(dst + i);
        vd = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vd);
        _mm256_storeu_pd(dst + i, vd);
    }
    for (; i < n; ++i) dst[i] += alpha * x[i];
}
void v_scale(const double* a, double alpha, double* dst, size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(dst + i, _mm256_mul_pd(va, _mm256_loadu_pd(a + i)));
    for (; i < n; ++i) dst[i] = alpha * a[i];
}
double v_dot(const double* a, const double* b, size_t n) {
    return dot_row(a, b, static_cast<int>(n));
}
double v_sum(const double* a, size_t n) {
    __m256d acc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
    double s = hsum(acc);
    for (; i < n; ++i) s += a[i];
    return s;
}
double v_sum_sq(const double* a, size_t n) {
    __m256d acc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(a + i);
        acc = _mm256_fmadd_pd(v, v, acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) s += a[i] * a[i];
    return s;
}

}  // namespace

namespace detail {
Ops avx2_ops() {
    Ops o;
    o.gemm_nt = v_gemm_nt;
    o.gemm_nn = v_gemm_nn;
    o.gemm_tn = v_gemm_tn;
    o.add = v_add;
    o.sub = v_sub;
    o.mul = v_mul;
    o.madd = v_madd;
    o.axpy = v_axpy;
    o.scale = v_scale;
    o.dot = v_dot;
    o.sum = v_sum;
    o.sum_sq = v_sum_sq;
    return o;
}
}  // namespace detail

}  // namespace trajcast::kernels

#endif  // TRAJCAST_HAVE_AVX2

#include "trajcast/kernels/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace trajcast::kernels {
namespace {

Ops g_ops;                      // active table
Backend g_backend = Backend::scalar;
bool g_resolved = false;

bool cpu_has_avx2() {
#if defined(TRAJCAST_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

}  // namespace

bool avx2_available() { return cpu_has_avx2(); }

bool select(Backend b) {
    if (b == Backend::avx2) {
#if defined(TRAJCAST_HAVE_AVX2)
        if (!cpu_has_avx2()) return false;
        g_ops = detail::avx2_ops();
#else
        return false;
#endif
    } else {
        g_ops = detail::scalar_ops();
    }
    g_backend = b;
    g_resolved = true;
    return true;
}

void select_auto() {
    const char* env = std::getenv("TRAJCAST_KERNELS");
    if (env != nullptr) {
        if (std::strcmp(env, "scalar") == 0 && select(Backend::scalar)) return;
        if (std::strcmp(env, "avx2") == 0 && select(Backend::avx2)) return;
        // unknown or unavailable value: fall through to auto
    }
    if (!select(Backend::avx2)) select(Backend::scalar);
}

Backend active() {
    if (!g_resolved) select_auto();
    return g_backend;
}

const char* backend_name() {
    return active() == Backend::avx2 ? "avx2" : "scalar";
}

const Ops& ops() {
    if (!g_resolved) select_auto();
    return g_ops;
}

}  // namespace trajcast::kernels

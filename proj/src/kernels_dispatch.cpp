#include "cisrl/kernels.hpp"

#include "cisrl/common.hpp"

#include <atomic>
#include <vector>

namespace cisrl::kernels {

bool avx2_supported() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

namespace {

Backend resolve(Backend b) {
    if (b == Backend::Auto) return avx2_supported() ? Backend::Avx2 : Backend::Scalar;
    return b;
}

std::atomic<Backend> g_backend{resolve(Backend::Auto)};

} // namespace

void set_backend(Backend b) {
    const Backend r = resolve(b);
    if (r == Backend::Avx2 && !avx2_supported())
        throw ConfigError("kernels: AVX2 backend requested but not supported on this CPU");
    g_backend.store(r);
}

Backend active_backend() { return g_backend.load(); }

const char* backend_name() {
    return active_backend() == Backend::Avx2 ? "avx2" : "scalar";
}

void batch_step(const dynamics::CstrConsts& c, const double* ca, const double* T,
                const double* Tc, double* ca_out, double* T_out, size_t count) {
    if (active_backend() == Backend::Avx2)
        detail::batch_step_avx2(c, ca, T, Tc, ca_out, T_out, count);
    else
        detail::batch_step_scalar(c, ca, T, Tc, ca_out, T_out, count);
}

void batch_step_shared_u(const dynamics::CstrConsts& c, const double* ca, const double* T,
                         double Tc, double* ca_out, double* T_out, size_t count) {
    // Shared input expanded once; keeps the variant count down.
    static thread_local std::vector<double> tc_buf;
    tc_buf.assign(count, Tc);
    batch_step(c, ca, T, tc_buf.data(), ca_out, T_out, count);
}

void batch_margin2(const double* A, const double* b, size_t rows, const double* x0,
                   const double* x1, double* out, size_t count) {
    if (rows == 0) throw DimensionError("batch_margin2: zero rows");
    if (active_backend() == Backend::Avx2)
        detail::batch_margin2_avx2(A, b, rows, x0, x1, out, count);
    else
        detail::batch_margin2_scalar(A, b, rows, x0, x1, out, count);
}

} // namespace cisrl::kernels

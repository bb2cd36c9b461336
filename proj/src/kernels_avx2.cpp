#include "cisrl/common.hpp"
#include "cisrl/detail/cstr_rk4.hpp"
#include "cisrl/kernels.hpp"

#include <cmath>

#if defined(CISRL_BUILD_AVX2) && defined(__AVX2__)
#include <immintrin.h>

namespace cisrl::kernels::detail {

namespace {

// exp has no AVX2 instruction; evaluate libm per lane so the result is
// bit-identical to the scalar kernel.
inline __m256d exp4(__m256d x) {
    alignas(32) double buf[4];
    _mm256_store_pd(buf, x);
    buf[0] = std::exp(buf[0]);
    buf[1] = std::exp(buf[1]);
    buf[2] = std::exp(buf[2]);
    buf[3] = std::exp(buf[3]);
    return _mm256_load_pd(buf);
}

struct Consts4 {
    __m256d qV, k0, negEoverR, heat, cool, cAf, Tf;
};

// Mirrors cstr_deriv: k = k0*exp(negEoverR/T); rate = k*ca;
// dca = qV*(cAf-ca) - rate; dT = qV*(Tf-T) + heat*rate + cool*(Tc-T).
inline void deriv4(const Consts4& c, __m256d ca, __m256d T, __m256d Tc, __m256d& dca,
                   __m256d& dT) {
    const __m256d k = _mm256_mul_pd(c.k0, exp4(_mm256_div_pd(c.negEoverR, T)));
    const __m256d rate = _mm256_mul_pd(k, ca);
    dca = _mm256_sub_pd(_mm256_mul_pd(c.qV, _mm256_sub_pd(c.cAf, ca)), rate);
    dT = _mm256_add_pd(
        _mm256_add_pd(_mm256_mul_pd(c.qV, _mm256_sub_pd(c.Tf, T)), _mm256_mul_pd(c.heat, rate)),
        _mm256_mul_pd(c.cool, _mm256_sub_pd(Tc, T)));
}

} // namespace

void batch_step_avx2(const dynamics::CstrConsts& cc, const double* ca, const double* T,
                     const double* Tc, double* ca_out, double* T_out, size_t count) {
    Consts4 c{_mm256_set1_pd(cc.qV),  _mm256_set1_pd(cc.k0),  _mm256_set1_pd(cc.negEoverR),
              _mm256_set1_pd(cc.heat), _mm256_set1_pd(cc.cool), _mm256_set1_pd(cc.cAf),
              _mm256_set1_pd(cc.Tf)};
    const __m256d h = _mm256_set1_pd(cc.dt);
    const __m256d h2 = _mm256_set1_pd(0.5 * cc.dt);
    const __m256d h6 = _mm256_set1_pd(cc.dt / 6.0);
    const __m256d two = _mm256_set1_pd(2.0);

    size_t i = 0;
    for (; i + 4 <= count; i += 4) {
        const __m256d x = _mm256_loadu_pd(ca + i);
        const __m256d y = _mm256_loadu_pd(T + i);
        const __m256d u = _mm256_loadu_pd(Tc + i);

        __m256d d1c, d1t, d2c, d2t, d3c, d3t, d4c, d4t;
        deriv4(c, x, y, u, d1c, d1t);
        deriv4(c, _mm256_add_pd(x, _mm256_mul_pd(h2, d1c)),
               _mm256_add_pd(y, _mm256_mul_pd(h2, d1t)), u, d2c, d2t);
        deriv4(c, _mm256_add_pd(x, _mm256_mul_pd(h2, d2c)),
               _mm256_add_pd(y, _mm256_mul_pd(h2, d2t)), u, d3c, d3t);
        deriv4(c, _mm256_add_pd(x, _mm256_mul_pd(h, d3c)),
               _mm256_add_pd(y, _mm256_mul_pd(h, d3t)), u, d4c, d4t);

        // x + h6*((d1 + 2*d2) + (2*d3 + d4)), same association as scalar
        const __m256d sc = _mm256_add_pd(_mm256_add_pd(d1c, _mm256_mul_pd(two, d2c)),
                                         _mm256_add_pd(_mm256_mul_pd(two, d3c), d4c));
        const __m256d st = _mm256_add_pd(_mm256_add_pd(d1t, _mm256_mul_pd(two, d2t)),
                                         _mm256_add_pd(_mm256_mul_pd(two, d3t), d4t));
        _mm256_storeu_pd(ca_out + i, _mm256_add_pd(x, _mm256_mul_pd(h6, sc)));
        _mm256_storeu_pd(T_out + i, _mm256_add_pd(y, _mm256_mul_pd(h6, st)));
    }
    if (i < count)
        batch_step_scalar(cc, ca + i, T + i, Tc + i, ca_out + i, T_out + i, count - i);
}

void batch_margin2_avx2(const double* A, const double* b, size_t rows, const double* x0,
                        const double* x1, double* out, size_t count) {
    size_t i = 0;
    for (; i + 4 <= count; i += 4) {
        const __m256d vx0 = _mm256_loadu_pd(x0 + i);
        const __m256d vx1 = _mm256_loadu_pd(x1 + i);
        __m256d m = _mm256_sub_pd(_mm256_add_pd(_mm256_mul_pd(_mm256_set1_pd(A[0]), vx0),
                                                _mm256_mul_pd(_mm256_set1_pd(A[1]), vx1)),
                                  _mm256_set1_pd(b[0]));
        for (size_t r = 1; r < rows; ++r) {
            const __m256d v =
                _mm256_sub_pd(_mm256_add_pd(_mm256_mul_pd(_mm256_set1_pd(A[2 * r]), vx0),
                                            _mm256_mul_pd(_mm256_set1_pd(A[2 * r + 1]), vx1)),
                              _mm256_set1_pd(b[r]));
            // (v > m) ? v : m, matching the scalar update
            m = _mm256_max_pd(v, m);
        }
        _mm256_storeu_pd(out + i, m);
    }
    if (i < count) batch_margin2_scalar(A, b, rows, x0 + i, x1 + i, out + i, count - i);
}

} // namespace cisrl::kernels::detail

#else // no AVX2 at build time

namespace cisrl::kernels::detail {

void batch_step_avx2(const dynamics::CstrConsts& c, const double* ca, const double* T,
                     const double* Tc, double* ca_out, double* T_out, size_t count) {
    batch_step_scalar(c, ca, T, Tc, ca_out, T_out, count);
}

void batch_margin2_avx2(const double* A, const double* b, size_t rows, const double* x0,
                        const double* x1, double* out, size_t count) {
    batch_margin2_scalar(A, b, rows, x0, x1, out, count);
}

} // namespace cisrl::kernels::detail

#endif

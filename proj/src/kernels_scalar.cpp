#include "cisrl/detail/cstr_rk4.hpp"
#include "cisrl/kernels.hpp"

namespace cisrl::kernels::detail {

void batch_step_scalar(const dynamics::CstrConsts& c, const double* ca, const double* T,
                       const double* Tc, double* ca_out, double* T_out, size_t count) {
    for (size_t i = 0; i < count; ++i) cstr_rk4(c, ca[i], T[i], Tc[i], ca_out[i], T_out[i]);
}

void batch_margin2_scalar(const double* A, const double* b, size_t rows, const double* x0,
                          const double* x1, double* out, size_t count) {
    for (size_t i = 0; i < count; ++i) {
        double m = A[0] * x0[i] + A[1] * x1[i] - b[0];
        for (size_t r = 1; r < rows; ++r) {
            const double v = A[2 * r] * x0[i] + A[2 * r + 1] * x1[i] - b[r];
            if (v > m) m = v;
        }
        out[i] = m;
    }
}

} // namespace cisrl::kernels::detail

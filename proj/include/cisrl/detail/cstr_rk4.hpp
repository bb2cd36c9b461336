#pragma once

#include "cisrl/dynamics.hpp"

#include <cmath>

// Scalar reference kernel for one 4th-order step of the undisturbed reactor
// field. The SIMD variants mirror this operation sequence exactly; any edit
// here must be replicated there or the bit-equivalence tests will fail.

namespace cisrl::kernels::detail {

inline void cstr_deriv(const dynamics::CstrConsts& c, double ca, double T, double Tc,
                       double& dca, double& dT) {
    const double k = c.k0 * std::exp(c.negEoverR / T);
    const double rate = k * ca;
    dca = c.qV * (c.cAf - ca) - rate;
    dT = c.qV * (c.Tf - T) + c.heat * rate + c.cool * (Tc - T);
}

inline void cstr_rk4(const dynamics::CstrConsts& c, double ca, double T, double Tc,
                     double& ca_out, double& T_out) {
    const double h = c.dt;
    const double h2 = 0.5 * c.dt;
    const double h6 = c.dt / 6.0;

    double d1c, d1t, d2c, d2t, d3c, d3t, d4c, d4t;
    cstr_deriv(c, ca, T, Tc, d1c, d1t);
    cstr_deriv(c, ca + h2 * d1c, T + h2 * d1t, Tc, d2c, d2t);
    cstr_deriv(c, ca + h2 * d2c, T + h2 * d2t, Tc, d3c, d3t);
    cstr_deriv(c, ca + h * d3c, T + h * d3t, Tc, d4c, d4t);

    ca_out = ca + h6 * ((d1c + 2.0 * d2c) + (2.0 * d3c + d4c));
    T_out = T + h6 * ((d1t + 2.0 * d2t) + (2.0 * d3t + d4t));
}

} // namespace cisrl::kernels::detail

#pragma once

#include <string>

namespace cisrl::dynamics {

// Reactor model parameters. Units: minutes, liters, moles, grams, Kelvin.
struct ModelParams {
    double q = 100.0;      // flow rate, L/min
    double V = 100.0;      // volume, L
    double k0 = 7.2e10;    // pre-exponential factor, 1/min
    double E_over_R = 8750.0; // activation temperature, K
    double dH_neg = 5.0e4; // -dH, J/mol
    double rho = 1000.0;   // density, g/L
    double cp = 0.239;     // heat capacity, J/(g K)
    double UA = 5.0e4;     // heat transfer coefficient, J/(min K)
    double cAf = 1.0;      // inlet concentration, mol/L
    double Tf = 350.0;     // inlet temperature, K
    double dt = 0.1;       // sampling interval, min (6 s)

    void validate() const; // throws ConfigError unless all fields positive

    // Gain of the additive disturbance channel in the discrete map.
    double disturbance_gain() const { return dt * (q / V); }
};

// Constants pre-combined once so every evaluation path (scalar reference,
// SIMD batch kernels) performs the identical sequence of IEEE operations.
struct CstrConsts {
    double qV;       // q / V
    double k0;
    double negEoverR;
    double heat;     // dH_neg / (rho * cp)
    double cool;     // UA / (V * rho * cp)
    double cAf;
    double Tf;
    double dt;

    static CstrConsts from(const ModelParams& p) {
        CstrConsts c{};
        c.qV = p.q / p.V;
        c.k0 = p.k0;
        c.negEoverR = -p.E_over_R;
        c.heat = p.dH_neg / (p.rho * p.cp);
        c.cool = p.UA / (p.V * (p.rho * p.cp));
        c.cAf = p.cAf;
        c.Tf = p.Tf;
        c.dt = p.dt;
        return c;
    }
};

struct State {
    double cA = 0.0; // mol/L
    double T = 0.0;  // K
};

struct StateDerivative {
    double dcA = 0.0; // mol/(L min)
    double dT = 0.0;  // K/min
};

struct ControlInput {
    double Tc = 0.0; // coolant temperature, K
};

struct Disturbance {
    double w_cA = 0.0; // offset on cAf, mol/L
    double w_T = 0.0;  // offset on Tf, K
};

// Continuous-time right-hand side with the disturbance applied to the
// inlet conditions. Throws NumericError on non-finite results.
StateDerivative vector_field(const ModelParams& p, const State& x, const ControlInput& u,
                             const Disturbance& w);

// Normative discrete map: x+ = phi(x, u) + dt*(q/V)*w, where phi is one
// classical 4th-order step of the undisturbed field over p.dt. The additive
// form keeps the map exactly linear in w.
State step(const ModelParams& p, const State& x, const ControlInput& u, const Disturbance& w);

// Cross-check variant with w inside every integrator stage. Not linear in w;
// used only by oracles and experiments, never by the supervisor.
State step_continuous_w(const ModelParams& p, const State& x, const ControlInput& u,
                        const Disturbance& w);

// Integrates the undisturbed field over `total` minutes in `substeps` equal
// 4th-order steps. substeps = 1 with total = p.dt reproduces phi exactly.
State integrate(const ModelParams& p, const State& x, const ControlInput& u, double total,
                int substeps);

// Damped Newton on the one-step residual x - step(x, u, 0). Returns x_s with
// residual <= 1e-9 in the max norm or throws ConvergenceError.
State steady_state(const ModelParams& p, const ControlInput& u, const State& x_guess);

// Plain-text key=value loader; unknown keys are rejected.
ModelParams load_model_params(const std::string& path);
ModelParams parse_model_params(const std::string& text, const std::string& origin);
std::string serialize_model_params(const ModelParams& p);

} // namespace cisrl::dynamics

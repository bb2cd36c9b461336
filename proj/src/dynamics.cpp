#include "cisrl/dynamics.hpp"

#include "cisrl/common.hpp"
#include "cisrl/detail/cstr_rk4.hpp"
#include "cisrl/text_io.hpp"

#include <cmath>

namespace cisrl::dynamics {

void ModelParams::validate() const {
    auto check = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw ConfigError(std::string("model parameter must be positive: ") + name);
    };
    check(q, "q");
    check(V, "V");
    check(k0, "k0");
    check(E_over_R, "E_over_R");
    check(dH_neg, "dH_neg");
    check(rho, "rho");
    check(cp, "cp");
    check(UA, "UA");
    check(cAf, "cAf");
    check(Tf, "Tf");
    check(dt, "dt");
}

static StateDerivative deriv_with_w(const CstrConsts& c, double ca, double T, double Tc,
                                    double w_ca, double w_T) {
    const double k = c.k0 * std::exp(c.negEoverR / T);
    const double rate = k * ca;
    StateDerivative d;
    d.dcA = c.qV * ((c.cAf + w_ca) - ca) - rate;
    d.dT = c.qV * ((c.Tf + w_T) - T) + c.heat * rate + c.cool * (Tc - T);
    return d;
}

StateDerivative vector_field(const ModelParams& p, const State& x, const ControlInput& u,
                             const Disturbance& w) {
    const CstrConsts c = CstrConsts::from(p);
    StateDerivative d = deriv_with_w(c, x.cA, x.T, u.Tc, w.w_cA, w.w_T);
    if (!std::isfinite(d.dcA) || !std::isfinite(d.dT))
        throw NumericError("vector_field: non-finite derivative (exp overflow?)");
    return d;
}

State step(const ModelParams& p, const State& x, const ControlInput& u, const Disturbance& w) {
    const CstrConsts c = CstrConsts::from(p);
    State out;
    kernels::detail::cstr_rk4(c, x.cA, x.T, u.Tc, out.cA, out.T);
    const double g = p.disturbance_gain();
    out.cA += g * w.w_cA;
    out.T += g * w.w_T;
    if (!std::isfinite(out.cA) || !std::isfinite(out.T))
        throw NumericError("step: non-finite state after integration");
    return out;
}

static State rk4_with_w(const CstrConsts& c, const State& x, double Tc, const Disturbance& w,
                        double h) {
    const double h2 = 0.5 * h;
    const double h6 = h / 6.0;
    StateDerivative d1 = deriv_with_w(c, x.cA, x.T, Tc, w.w_cA, w.w_T);
    StateDerivative d2 =
        deriv_with_w(c, x.cA + h2 * d1.dcA, x.T + h2 * d1.dT, Tc, w.w_cA, w.w_T);
    StateDerivative d3 =
        deriv_with_w(c, x.cA + h2 * d2.dcA, x.T + h2 * d2.dT, Tc, w.w_cA, w.w_T);
    StateDerivative d4 = deriv_with_w(c, x.cA + h * d3.dcA, x.T + h * d3.dT, Tc, w.w_cA, w.w_T);
    State out;
    out.cA = x.cA + h6 * ((d1.dcA + 2.0 * d2.dcA) + (2.0 * d3.dcA + d4.dcA));
    out.T = x.T + h6 * ((d1.dT + 2.0 * d2.dT) + (2.0 * d3.dT + d4.dT));
    return out;
}

State step_continuous_w(const ModelParams& p, const State& x, const ControlInput& u,
                        const Disturbance& w) {
    const CstrConsts c = CstrConsts::from(p);
    State out = rk4_with_w(c, x, u.Tc, w, p.dt);
    if (!std::isfinite(out.cA) || !std::isfinite(out.T))
        throw NumericError("step_continuous_w: non-finite state after integration");
    return out;
}

State integrate(const ModelParams& p, const State& x, const ControlInput& u, double total,
                int substeps) {
    if (substeps < 1) throw ConfigError("integrate: substeps must be >= 1");
    const CstrConsts c = CstrConsts::from(p);
    const double h = total / static_cast<double>(substeps);
    State cur = x;
    for (int i = 0; i < substeps; ++i) cur = rk4_with_w(c, cur, u.Tc, Disturbance{}, h);
    if (!std::isfinite(cur.cA) || !std::isfinite(cur.T))
        throw NumericError("integrate: non-finite state");
    return cur;
}

State steady_state(const ModelParams& p, const ControlInput& u, const State& x_guess) {
    if (!std::isfinite(x_guess.cA) || !std::isfinite(x_guess.T))
        throw ConfigError("steady_state: guess must be finite");
    constexpr double tol = 1e-9;
    constexpr int max_iters = 200;

    auto residual = [&](const State& s, double& r0, double& r1) -> bool {
        State nxt;
        try {
            nxt = step(p, s, u, Disturbance{});
        } catch (const NumericError&) {
            return false;
        }
        r0 = s.cA - nxt.cA;
        r1 = s.T - nxt.T;
        return std::isfinite(r0) && std::isfinite(r1);
    };

    State x = x_guess;
    double r0, r1;
    if (!residual(x, r0, r1))
        throw ConvergenceError("steady_state: residual diverged at initial guess");

    for (int iter = 0; iter < max_iters; ++iter) {
        double rn = std::max(std::fabs(r0), std::fabs(r1));
        if (rn <= tol) return x;

        // Jacobian of x - step(x) by central differences.
        const double h0 = 1.49e-8 * std::max(1.0, std::fabs(x.cA));
        const double h1 = 1.49e-8 * std::max(1.0, std::fabs(x.T));
        double a0p, a1p, a0m, a1m, b0p, b1p, b0m, b1m;
        State xp = x, xm = x;
        xp.cA += h0;
        xm.cA -= h0;
        if (!residual(xp, a0p, a1p) || !residual(xm, a0m, a1m))
            throw ConvergenceError("steady_state: residual diverged in Jacobian");
        xp = x;
        xm = x;
        xp.T += h1;
        xm.T -= h1;
        if (!residual(xp, b0p, b1p) || !residual(xm, b0m, b1m))
            throw ConvergenceError("steady_state: residual diverged in Jacobian");
        const double j00 = (a0p - a0m) / (2.0 * h0);
        const double j10 = (a1p - a1m) / (2.0 * h0);
        const double j01 = (b0p - b0m) / (2.0 * h1);
        const double j11 = (b1p - b1m) / (2.0 * h1);

        const double det = j00 * j11 - j01 * j10;
        if (!std::isfinite(det) || std::fabs(det) < 1e-300)
            throw ConvergenceError("steady_state: singular Jacobian");
        const double dx0 = (r0 * j11 - r1 * j01) / det;
        const double dx1 = (j00 * r1 - j10 * r0) / det;

        // Damped update: halve the step while the residual grows.
        double lambda = 1.0;
        bool accepted = false;
        while (lambda >= 1e-12) {
            State trial{x.cA - lambda * dx0, x.T - lambda * dx1};
            double t0, t1;
            if (residual(trial, t0, t1) && std::max(std::fabs(t0), std::fabs(t1)) < rn) {
                x = trial;
                r0 = t0;
                r1 = t1;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!accepted) throw ConvergenceError("steady_state: damping stalled, no descent");
    }
    throw ConvergenceError("steady_state: no convergence in 200 iterations");
}

ModelParams parse_model_params(const std::string& text, const std::string& origin) {
    KeyValueFile kv = parse_key_value_text(text, origin);
    ModelParams p;
    for (const auto& key : kv.keys) {
        const double v = kv.get_double(key);
        if (key == "q") p.q = v;
        else if (key == "V") p.V = v;
        else if (key == "k0") p.k0 = v;
        else if (key == "E_over_R") p.E_over_R = v;
        else if (key == "dH_neg") p.dH_neg = v;
        else if (key == "rho") p.rho = v;
        else if (key == "cp") p.cp = v;
        else if (key == "UA") p.UA = v;
        else if (key == "cAf") p.cAf = v;
        else if (key == "Tf") p.Tf = v;
        else if (key == "dt") p.dt = v;
        else throw ConfigError(origin + ": unknown model parameter: " + key);
    }
    p.validate();
    return p;
}

ModelParams load_model_params(const std::string& path) {
    return parse_model_params(read_text_file(path), path);
}

std::string serialize_model_params(const ModelParams& p) {
    std::string out;
    auto emit = [&](const char* k, double v) {
        out += k;
        out += '=';
        out += format_full(v);
        out += '\n';
    };
    emit("q", p.q);
    emit("V", p.V);
    emit("k0", p.k0);
    emit("E_over_R", p.E_over_R);
    emit("dH_neg", p.dH_neg);
    emit("rho", p.rho);
    emit("cp", p.cp);
    emit("UA", p.UA);
    emit("cAf", p.cAf);
    emit("Tf", p.Tf);
    emit("dt", p.dt);
    return out;
}

} // namespace cisrl::dynamics

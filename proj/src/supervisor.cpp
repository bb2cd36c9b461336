#include "cisrl/supervisor.hpp"

#include "cisrl/common.hpp"

#include <chrono>
#include <cmath>

namespace cisrl::supervisor {

void SupervisorConfig::validate() const {
    if (retrain_samples_per_update < 1)
        throw ConfigError("SupervisorConfig: retrain_samples_per_update must be >= 1");
    if (!(retrain_lr_scale > 0.0))
        throw ConfigError("SupervisorConfig: retrain_lr_scale must be positive");
    if (robust) W.validate();
}

WorstCaseResult worst_case_margin_core(const geometry::HPolytope& P,
                                       std::span<const double> phi,
                                       std::span<const double> gains,
                                       const geometry::BoxSet& W) {
    const int n = P.n;
    if (static_cast<int>(phi.size()) != n || static_cast<int>(gains.size()) != n ||
        W.dim() != n)
        throw DimensionError("worst_case_margin: dimension mismatch");

    WorstCaseResult best;
    best.J_star = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < P.c; ++i) {
        const double* a = P.A.data() + static_cast<size_t>(i) * n;
        double v = -P.b[i];
        for (int j = 0; j < n; ++j) {
            const double c = 0.5 * (W.lower[j] + W.upper[j]);
            const double h = 0.5 * (W.upper[j] - W.lower[j]);
            const double ag = a[j] * gains[j];
            v += a[j] * phi[j] + ag * c + std::fabs(ag) * h;
        }
        if (v > best.J_star) { // strict: ties keep the lowest row index
            best.J_star = v;
            best.active_row = i;
        }
    }
    // sign-pattern vertex of the winning row (zero coefficients take +h)
    const double* a = P.A.data() + static_cast<size_t>(best.active_row) * n;
    double w[2] = {0.0, 0.0};
    for (int j = 0; j < n && j < 2; ++j) {
        const double c = 0.5 * (W.lower[j] + W.upper[j]);
        const double h = 0.5 * (W.upper[j] - W.lower[j]);
        const double ag = a[j] * gains[j];
        w[j] = c + (ag >= 0.0 ? h : -h);
    }
    best.w_star = {w[0], w[1]};
    return best;
}

WorstCaseResult worst_case_margin(const dynamics::ModelParams& p, const geometry::HPolytope& P,
                                  const dynamics::State& x, const dynamics::ControlInput& u,
                                  const geometry::BoxSet& W) {
    const dynamics::State phi = dynamics::step(p, x, u, dynamics::Disturbance{});
    const double g = p.disturbance_gain();
    const double phi_v[2] = {phi.cA, phi.T};
    const double gains[2] = {g, g};
    return worst_case_margin_core(P, phi_v, gains, W);
}

WorstCaseResult worst_case_margin_sampled(const dynamics::ModelParams& p,
                                          const geometry::HPolytope& P, const dynamics::State& x,
                                          const dynamics::ControlInput& u,
                                          const geometry::BoxSet& W, int points_per_axis,
                                          bool continuous_w) {
    if (points_per_axis < 2) throw ConfigError("worst_case_margin_sampled: need >= 2 points");
    WorstCaseResult best;
    best.J_star = -std::numeric_limits<double>::infinity();
    const int m = points_per_axis;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            dynamics::Disturbance w{
                W.lower[0] + (W.upper[0] - W.lower[0]) * i / (m - 1),
                W.lower[1] + (W.upper[1] - W.lower[1]) * j / (m - 1)};
            const dynamics::State nxt = continuous_w ? dynamics::step_continuous_w(p, x, u, w)
                                                     : dynamics::step(p, x, u, w);
            const double y[2] = {nxt.cA, nxt.T};
            const double v = geometry::margin(P, y);
            if (v > best.J_star) {
                best.J_star = v;
                best.w_star = w;
            }
        }
    }
    return best;
}

Verdict check_action(const dynamics::ModelParams& p, const geometry::HPolytope& P,
                     const dynamics::State& x, const dynamics::ControlInput& u,
                     const SupervisorConfig& config) {
    Verdict v;
    const dynamics::State phi = dynamics::step(p, x, u, dynamics::Disturbance{});
    if (!config.robust) {
        const double y[2] = {phi.cA, phi.T};
        v.J = geometry::margin(P, y);
        v.safe = v.J <= 0.0;
        v.x_pred = phi;
        return v;
    }
    const WorstCaseResult wc = worst_case_margin(p, P, x, u, config.W);
    v.J = wc.J_star;
    v.safe = wc.J_star <= 0.0;
    if (v.safe) {
        v.x_pred = phi;
    } else {
        // the worst disturbance shapes the prediction used for retraining
        const double g = p.disturbance_gain();
        v.x_pred = {phi.cA + g * wc.w_star.w_cA, phi.T + g * wc.w_star.w_T};
    }
    return v;
}

namespace {

uint64_t now_us() {
    return static_cast<uint64_t>(std::chrono::duration_cast<std::chrono::microseconds>(
                                     std::chrono::steady_clock::now().time_since_epoch())
                                     .count());
}

} // namespace

dynamics::ControlInput supervise_step(const SupervisorContext& ctx, rl::Agent& agent,
                                      const dynamics::State& x, Rng& rng, StepLog& log) {
    const double sv[2] = {x.cA, x.T};
    if (!geometry::contains(ctx.P, sv))
        throw Error("supervise_step: state outside the certified set");

    log.x = x;
    log.updates_used = 0;
    log.fallback = false;

    size_t updates = 0;
    bool first = true;
    while (true) {
        auto [u, logp] = agent.act(x, true, rng);
        const uint64_t t0 = now_us();
        const Verdict v = check_action(ctx.model, ctx.P, x, u, ctx.config);
        log.check_us += now_us() - t0;
        if (first) {
            log.u_raw = u.Tc;
            log.safe_raw = v.safe;
            first = false;
        }
        if (v.safe) {
            log.u_applied = u.Tc;
            log.J = v.J;
            log.updates_used = static_cast<int>(updates);
            return u;
        }
        if (updates >= ctx.config.max_iterations) break;

        // retraining at the held state: fresh exploratory actions, each
        // vetted and rewarded by its own verdict
        std::vector<rl::Episode> batch;
        batch.reserve(ctx.config.retrain_samples_per_update);
        for (int i = 0; i < ctx.config.retrain_samples_per_update; ++i) {
            auto [ui, lpi] = agent.act(x, true, rng);
            const uint64_t tc = now_us();
            const Verdict vi = check_action(ctx.model, ctx.P, x, ui, ctx.config);
            log.check_us += now_us() - tc;
            const double ri = rewards::reward(ctx.reward, vi.x_pred, vi.safe, x);
            batch.push_back(rl::Episode{{x, ui, ri, vi.x_pred, lpi, true}});
        }
        const uint64_t tu = now_us();
        agent.update(batch, ctx.config.retrain_lr_scale);
        log.update_us += now_us() - tu;
        ++updates;
    }

    // Fallback: stored backup input, re-certified at the actual state. If
    // the stored entry fails the polytope check here, any certified input
    // from the candidate grid serves as backup.
    log.updates_used = static_cast<int>(updates);
    log.fallback = true;
    const double bu = cis::backup_lookup(ctx.backup, ctx.set, sv);
    Verdict v = check_action(ctx.model, ctx.P, x, dynamics::ControlInput{bu}, ctx.config);
    if (v.safe) {
        log.u_applied = bu;
        log.J = v.J;
        return dynamics::ControlInput{bu};
    }
    for (double cand : ctx.u_grid) {
        const Verdict vc = check_action(ctx.model, ctx.P, x, dynamics::ControlInput{cand},
                                        ctx.config);
        if (vc.safe) {
            log.u_applied = cand;
            log.J = vc.J;
            return dynamics::ControlInput{cand};
        }
    }
    throw SafetyFaultError(
        "supervise_step: no certified input exists at the current state; the invariance "
        "certificate of the supplied set is broken");
}

OnlineMetrics run_online(const SupervisorContext& ctx, rl::Agent& agent, long n_episodes,
                         int steps, bool disturb_env, uint64_t seed,
                         const std::vector<dynamics::State>* initial_states,
                         bool keep_step_logs) {
    ctx.config.validate();
    if (initial_states && static_cast<long>(initial_states->size()) < n_episodes)
        throw ConfigError("run_online: initial-state list shorter than episode count");

    OnlineMetrics m;
    m.episodes = n_episodes;
    m.steps_per_episode = steps;
    const geometry::BoxSet bb = geometry::bounding_box_2d(ctx.P);
    Rng rng(seed);

    for (long e = 0; e < n_episodes; ++e) {
        dynamics::State x;
        if (initial_states) {
            x = (*initial_states)[e];
        } else {
            auto v = geometry::sample_uniform(ctx.P, bb, rng);
            x = {v[0], v[1]};
        }
        bool violated = false;
        std::vector<dynamics::State> traj;
        traj.reserve(steps + 1);
        traj.push_back(x);
        for (int k = 0; k < steps; ++k) {
            StepLog log;
            log.episode = e;
            log.k = k;
            dynamics::ControlInput u;
            try {
                u = supervise_step(ctx, agent, x, rng, log);
            } catch (const SafetyFaultError&) {
                ++m.safety_faults;
                throw;
            }
            m.updates_total += log.updates_used;
            if (log.fallback) ++m.fallback_count;

            dynamics::Disturbance w;
            if (disturb_env)
                w = {rng.uniform(ctx.config.W.lower[0], ctx.config.W.upper[0]),
                     rng.uniform(ctx.config.W.lower[1], ctx.config.W.upper[1])};
            const dynamics::State x_next = dynamics::step(ctx.model, x, u, w);
            log.w_applied = w;
            if (keep_step_logs) m.step_logs.push_back(log);

            const double nv[2] = {x_next.cA, x_next.T};
            if (geometry::margin(ctx.P, nv) > 0.0) {
                ++m.violation_steps;
                if (!violated) {
                    violated = true;
                    ++m.violation_episodes;
                }
                traj.push_back(x_next);
                break; // the certificate's precondition is gone; stop the episode
            }
            x = x_next;
            traj.push_back(x);
        }
        m.trajectories.push_back(std::move(traj));
    }
    return m;
}

} // namespace cisrl::supervisor

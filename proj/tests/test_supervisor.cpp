#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "cisrl/cis.hpp"
#include "cisrl/common.hpp"
#include "cisrl/supervisor.hpp"

#include <cmath>

using namespace cisrl;
using namespace cisrl::supervisor;
using dynamics::ControlInput;
using dynamics::Disturbance;
using dynamics::ModelParams;
using dynamics::State;
using geometry::BoxSet;
using geometry::HPolytope;

namespace {

struct ReactorSets {
    ModelParams model;
    BoxSet X{{0.0, 345.0}, {1.0, 355.0}};
    BoxSet W{{-0.1, -2.0}, {0.1, 2.0}};
    std::vector<double> u_grid = cis::linspace(285.0, 315.0, 61);
    cis::SynthesisResult det;
    cis::SynthesisResult rob;
    HPolytope P_det;
    HPolytope P_rob;

    ReactorSets() {
        cis::Grid g;
        g.box = X;
        g.resolution = {100, 100};
        det = cis::synthesize(model, X, u_grid, {}, g);
        rob = cis::synthesize(model, X, u_grid, cis::disturbance_vertices(W), g);
        P_det = cis::extract_polytope(det.set, model, u_grid, {}, 8000, 11);
        P_rob = cis::extract_polytope(rob.set, model, u_grid, cis::disturbance_vertices(W),
                                      8000, 12);
        cis::refine_backup_against_polytope(det.backup, det.set, P_det,
                                            cis::make_cstr_map(model), u_grid, {});
        cis::refine_backup_against_polytope(
            rob.backup, rob.set, P_rob, cis::make_cstr_map(model), u_grid,
            cis::disturbance_offsets(model, cis::disturbance_vertices(W)));
    }
};

ReactorSets& sets() {
    static ReactorSets s;
    return s;
}

SupervisorContext make_ctx(bool robust) {
    auto& s = sets();
    SupervisorContext ctx{s.model,
                          robust ? s.P_rob : s.P_det,
                          robust ? s.rob.set : s.det.set,
                          robust ? s.rob.backup : s.det.backup,
                          rewards::RewardSpec{},
                          SupervisorConfig{},
                          s.u_grid};
    ctx.config.robust = robust;
    ctx.config.W = s.W;
    return ctx;
}

rl::Agent fresh_agent(uint64_t seed) {
    return rl::Agent(geometry::BoxSet({0.0, 345.0}, {1.0, 355.0}), 285.0, 315.0, rl::Hyper{},
                     seed);
}

} // namespace

TEST_CASE("worst case: 1-D shift map, hand-enumerated optimum") {
    HPolytope P = geometry::box_to_polytope(BoxSet({-1.0}, {1.0}));
    const double phi[1] = {0.5};
    const double gains[1] = {1.0};
    BoxSet W({-0.3}, {0.3});
    auto r = worst_case_margin_core(P, phi, gains, W);
    CHECK(r.J_star == doctest::Approx(-0.2).epsilon(1e-12));
    CHECK(r.w_star.w_cA == doctest::Approx(0.3));
    CHECK(r.active_row == 0);
}

TEST_CASE("worst case: degenerate box reduces to the deterministic margin") {
    auto& s = sets();
    Rng rng(4);
    BoxSet W0({0.0, 0.0}, {0.0, 0.0});
    for (int i = 0; i < 200; ++i) {
        State x{rng.uniform(0.2, 0.8), rng.uniform(346.0, 354.0)};
        ControlInput u{rng.uniform(285.0, 315.0)};
        auto wc = worst_case_margin(s.model, s.P_rob, x, u, W0);
        State phi = dynamics::step(s.model, x, u, Disturbance{});
        const double y[2] = {phi.cA, phi.T};
        CHECK(wc.J_star == doctest::Approx(geometry::margin(s.P_rob, y)).epsilon(1e-12));
    }
}

TEST_CASE("worst case equals brute-force vertex enumeration") {
    auto& s = sets();
    Rng rng(9);
    double max_diff = 0.0;
    for (int i = 0; i < 1000; ++i) {
        State x{rng.uniform(0.1, 0.9), rng.uniform(345.0, 355.0)};
        ControlInput u{rng.uniform(285.0, 315.0)};
        auto wc = worst_case_margin(s.model, s.P_rob, x, u, s.W);

        // independent brute force over the four vertices
        State phi = dynamics::step(s.model, x, u, Disturbance{});
        const double g = s.model.disturbance_gain();
        double best = -1e300;
        for (double wc0 : {s.W.lower[0], s.W.upper[0]}) {
            for (double wt : {s.W.lower[1], s.W.upper[1]}) {
                const double y[2] = {phi.cA + g * wc0, phi.T + g * wt};
                best = std::max(best, geometry::margin(s.P_rob, y));
            }
        }
        max_diff = std::max(max_diff, std::fabs(best - wc.J_star));

        // the reported disturbance attains the optimum and lies in W
        CHECK(wc.w_star.w_cA >= s.W.lower[0]);
        CHECK(wc.w_star.w_cA <= s.W.upper[0]);
        const double y[2] = {phi.cA + g * wc.w_star.w_cA, phi.T + g * wc.w_star.w_T};
        CHECK(geometry::margin(s.P_rob, y) == doctest::Approx(wc.J_star).epsilon(1e-12));
    }
    CHECK(max_diff <= 1e-9);
}

TEST_CASE("worst case dominates a dense vertex-inclusive grid within 1e-6") {
    auto& s = sets();
    Rng rng(21);
    for (int i = 0; i < 300; ++i) {
        State x{rng.uniform(0.2, 0.8), rng.uniform(346.0, 354.0)};
        ControlInput u{rng.uniform(285.0, 315.0)};
        auto wc = worst_case_margin(s.model, s.P_rob, x, u, s.W);
        auto grid = worst_case_margin_sampled(s.model, s.P_rob, x, u, s.W, 41, false);
        CHECK(grid.J_star <= wc.J_star + 1e-12);
        CHECK(std::fabs(grid.J_star - wc.J_star) <= 1e-6);
    }
}

TEST_CASE("check_action modes and the worst-case prediction") {
    auto& s = sets();
    SupervisorConfig det_cfg;
    SupervisorConfig rob_cfg;
    rob_cfg.robust = true;
    rob_cfg.W = s.W;

    // interior state with a moderate input is safe in both modes
    State x{0.5, 350.0};
    ControlInput u{300.0};
    auto vd = check_action(s.model, s.P_rob, x, u, det_cfg);
    CHECK(vd.safe);
    auto vr = check_action(s.model, s.P_rob, x, u, rob_cfg);
    CHECK(vr.safe);
    State phi = dynamics::step(s.model, x, u, Disturbance{});
    CHECK(vr.x_pred.cA == phi.cA);
    CHECK(vr.x_pred.T == phi.T);

    // find a robust-unsafe action: its prediction must reflect w*
    Rng rng(5);
    bool found = false;
    auto bb = geometry::bounding_box_2d(s.P_rob);
    for (int i = 0; i < 20000 && !found; ++i) {
        auto v = geometry::sample_uniform(s.P_rob, bb, rng);
        State xs{v[0], v[1]};
        ControlInput us{rng.uniform(285.0, 315.0)};
        auto vv = check_action(s.model, s.P_rob, xs, us, rob_cfg);
        if (!vv.safe) {
            found = true;
            auto wc = worst_case_margin(s.model, s.P_rob, xs, us, s.W);
            State ph = dynamics::step(s.model, xs, us, Disturbance{});
            const double g = s.model.disturbance_gain();
            CHECK(vv.x_pred.cA == doctest::Approx(ph.cA + g * wc.w_star.w_cA));
            CHECK(vv.x_pred.T == doctest::Approx(ph.T + g * wc.w_star.w_T));
            CHECK(vv.J > 0.0);
        }
    }
    CHECK(found);
}

TEST_CASE("boundary search finds a deterministically-safe but robust-unsafe action") {
    auto& s = sets();
    SupervisorConfig det_cfg;
    SupervisorConfig rob_cfg;
    rob_cfg.robust = true;
    rob_cfg.W = s.W;

    Rng rng(31);
    auto bb = geometry::bounding_box_2d(s.P_rob);
    long witnesses = 0;
    for (int i = 0; i < 3000 && witnesses == 0; ++i) {
        auto v = geometry::sample_uniform(s.P_rob, bb, rng);
        State x{v[0], v[1]};
        for (double u : s.u_grid) {
            auto d = check_action(s.model, s.P_rob, x, ControlInput{u}, det_cfg);
            auto r = check_action(s.model, s.P_rob, x, ControlInput{u}, rob_cfg);
            if (d.safe && !r.safe) {
                ++witnesses;
                CHECK(d.J <= 0.0);
                CHECK(r.J > 0.0);
                break;
            }
        }
    }
    CHECK(witnesses > 0);
}

TEST_CASE("backup inputs pass the worst-case check at random kernel states") {
    auto& s = sets();
    Rng rng(41);
    auto bb = geometry::bounding_box_2d(s.P_rob);
    SupervisorConfig cfg;
    cfg.robust = true;
    cfg.W = s.W;
    int failures = 0;
    for (int i = 0; i < 1000; ++i) {
        auto v = geometry::sample_uniform(s.P_rob, bb, rng);
        const double u = cis::backup_lookup(s.rob.backup, s.rob.set, v);
        auto verdict = check_action(s.model, s.P_rob, State{v[0], v[1]}, ControlInput{u}, cfg);
        if (!verdict.safe) ++failures;
    }
    CHECK(failures == 0);
}

TEST_CASE("supervise_step: interior state needs no updates") {
    auto ctx = make_ctx(false);
    auto agent = fresh_agent(3);
    Rng rng(7);
    StepLog log;
    State x{0.5, 350.0};
    auto u = supervise_step(ctx, agent, x, rng, log);
    CHECK(log.updates_used == 0);
    CHECK_FALSE(log.fallback);
    auto v = check_action(ctx.model, ctx.P, x, u, ctx.config);
    CHECK(v.safe);
}

TEST_CASE("supervise_step: maxItr = 0 goes straight to the backup table") {
    auto ctx = make_ctx(false);
    ctx.config.max_iterations = 0;
    auto agent = fresh_agent(3);
    // adversarial mean at the cooling extreme with std collapsed to the floor
    auto theta = agent.policy_params_flat();
    theta[theta.size() - 2] = -10.0; // output bias -> tanh ~ -1
    theta.back() = -20.0;            // rho -> std == floor
    agent.set_policy_params_flat(theta);

    // find a state where the whole cold end of the input grid is unsafe
    Rng rng(13);
    auto bb = geometry::bounding_box_2d(ctx.P);
    bool exercised = false;
    for (int i = 0; i < 5000 && !exercised; ++i) {
        auto v = geometry::sample_uniform(ctx.P, bb, rng);
        State x{v[0], v[1]};
        bool cold_unsafe = true;
        for (double u = 285.0; u <= 288.0; u += 0.5) {
            if (check_action(ctx.model, ctx.P, x, ControlInput{u}, ctx.config).safe) {
                cold_unsafe = false;
                break;
            }
        }
        if (!cold_unsafe) continue;
        StepLog log;
        auto u = supervise_step(ctx, agent, x, rng, log);
        CHECK(log.fallback);
        CHECK(log.updates_used == 0);
        auto verdict = check_action(ctx.model, ctx.P, x, u, ctx.config);
        CHECK(verdict.safe);
        exercised = true;
    }
    CHECK(exercised);
}

TEST_CASE("supervise_step: retraining finds a safe action at most boundary states") {
    auto ctx = make_ctx(false);
    ctx.config.max_iterations = 50;

    Rng rng(17);
    auto bb = geometry::bounding_box_2d(ctx.P);
    int tried = 0, retrained_ok = 0;
    while (tried < 100) {
        auto v = geometry::sample_uniform(ctx.P, bb, rng);
        const double m = geometry::margin(ctx.P, v);
        if (m < -0.05) continue; // keep boundary states only
        State x{v[0], v[1]};
        // adversarial agent per state: mean forced toward the cooling
        // extreme but not tanh-saturated, so updates can still move it
        auto agent = fresh_agent(100 + tried);
        agent.force_mean_bias(-1.5);
        ++tried;
        StepLog log;
        auto u = supervise_step(ctx, agent, x, rng, log);
        auto verdict = check_action(ctx.model, ctx.P, x, u, ctx.config);
        CHECK(verdict.safe);
        if (!log.fallback) ++retrained_ok;
    }
    CHECK(retrained_ok >= 80);
}

TEST_CASE("run_online deterministic: zero violations by construction") {
    auto ctx = make_ctx(false);
    auto agent = fresh_agent(5);
    auto m = run_online(ctx, agent, 20, 50, false, 77);
    CHECK(m.violation_episodes == 0);
    CHECK(m.safety_faults == 0);
    CHECK(m.step_logs.size() == 20u * 50u);
}

TEST_CASE("run_online robust with disturbed plant: zero violations") {
    auto ctx = make_ctx(true);
    auto agent = fresh_agent(5);
    auto m = run_online(ctx, agent, 10, 50, true, 78);
    CHECK(m.violation_episodes == 0);
    CHECK(m.safety_faults == 0);
    // disturbances actually applied
    bool any_w = false;
    for (const auto& l : m.step_logs)
        if (l.w_applied.w_cA != 0.0 || l.w_applied.w_T != 0.0) any_w = true;
    CHECK(any_w);
}

TEST_CASE("naive pairing: deterministic check with a disturbed plant") {
    auto ctx = make_ctx(true); // robust set and W
    ctx.config.robust = false; // but the naive membership check
    auto agent = fresh_agent(5);
    auto m = run_online(ctx, agent, 200, 50, true, 79);
    // not gated: the naive check is expected to overclaim eventually; the
    // count is merely reported here
    MESSAGE("naive-check violations over 200 episodes: ", m.violation_episodes);
    CHECK(m.safety_faults == 0);
}

TEST_CASE("retraining happens at the held state and still returns a safe action") {
    auto ctx = make_ctx(false);
    ctx.config.max_iterations = 3;
    auto agent = fresh_agent(23);
    agent.force_mean_bias(-5.0);
    Rng rng(29);
    auto bb = geometry::bounding_box_2d(ctx.P);
    for (int i = 0; i < 2000; ++i) {
        auto v = geometry::sample_uniform(ctx.P, bb, rng);
        if (geometry::margin(ctx.P, v) < -0.02) continue;
        State x{v[0], v[1]};
        StepLog log;
        auto u = supervise_step(ctx, agent, x, rng, log);
        // regardless of internal retraining, the verdict of the returned
        // action is evaluated at the same held state
        auto verdict = check_action(ctx.model, ctx.P, x, u, ctx.config);
        CHECK(verdict.safe);
        if (log.updates_used > 0) return; // exercised the retraining path
    }
    FAIL("never exercised retraining");
}

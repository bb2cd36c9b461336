#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "cisrl/agent.hpp"
#include "cisrl/common.hpp"

#include <cmath>

using namespace cisrl;
using namespace cisrl::rl;
using dynamics::ControlInput;
using dynamics::State;

namespace {

geometry::BoxSet state_box() { return geometry::BoxSet({0.0, 345.0}, {1.0, 355.0}); }

Agent make_agent(uint64_t seed = 7) { return Agent(state_box(), 285.0, 315.0, Hyper{}, seed); }

Episode random_episode(Agent& agent, Rng& rng, int steps, double reward_scale = 1.0) {
    Episode ep;
    State x{rng.uniform(0.2, 0.8), rng.uniform(346.0, 354.0)};
    for (int k = 0; k < steps; ++k) {
        auto [u, logp] = agent.act(x, true, rng);
        State nxt{x.cA + rng.uniform(-0.01, 0.01), x.T + rng.uniform(-0.2, 0.2)};
        ep.push_back({x, u, reward_scale * rng.uniform(-1.0, 1.0), nxt, logp, k == steps - 1});
        x = nxt;
    }
    return ep;
}

double max_rel_grad_err(const std::vector<double>& ga, const std::vector<double>& gfd) {
    double scale = 1e-12;
    for (double v : gfd) scale = std::max(scale, std::fabs(v));
    double err = 0.0;
    for (size_t i = 0; i < ga.size(); ++i) err = std::max(err, std::fabs(ga[i] - gfd[i]));
    return err / scale;
}

} // namespace

TEST_CASE("act clips into the input range for any state") {
    Agent agent = make_agent();
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
        State x{rng.uniform(-0.5, 1.5), rng.uniform(340.0, 360.0)};
        auto [u, logp] = agent.act(x, true, rng);
        CHECK(u.Tc >= 285.0);
        CHECK(u.Tc <= 315.0);
        CHECK(std::isfinite(logp));
    }
}

TEST_CASE("deterministic mean action without exploration") {
    Agent agent = make_agent();
    Rng rng(3);
    State x{0.5, 350.0};
    auto [u1, lp1] = agent.act(x, false, rng);
    auto [u2, lp2] = agent.act(x, false, rng);
    CHECK(u1.Tc == u2.Tc);
    CHECK(lp1 == lp2);
}

TEST_CASE("seeded exploration is reproducible") {
    Agent agent = make_agent();
    State x{0.5, 350.0};
    Rng r1(11), r2(11);
    for (int i = 0; i < 100; ++i) {
        auto [u1, lp1] = agent.act(x, true, r1);
        auto [u2, lp2] = agent.act(x, true, r2);
        CHECK(u1.Tc == u2.Tc);
        CHECK(lp1 == lp2);
    }
}

TEST_CASE("returns: single done transition") {
    Episode ep{{State{0.5, 350}, ControlInput{300}, 1.0, State{0.5, 350}, -1.0, true}};
    std::vector<double> G, A;
    returns_and_advantages(ep, 0.99, 0.95, [](const State&) { return 0.0; }, G, A);
    CHECK(G[0] == 1.0);
    CHECK(A[0] == 1.0);
}

TEST_CASE("returns: two-step hand recursion") {
    Episode ep{{State{0.5, 350}, ControlInput{300}, 1.0, State{0.5, 351}, -1.0, false},
               {State{0.5, 351}, ControlInput{300}, 1.0, State{0.5, 352}, -1.0, true}};
    std::vector<double> G, A;
    returns_and_advantages(ep, 0.5, 1.0, [](const State&) { return 0.0; }, G, A);
    CHECK(G[0] == doctest::Approx(1.5));
    CHECK(G[1] == doctest::Approx(1.0));
    // lambda = 1 with zero values: advantage equals the return
    CHECK(A[0] == doctest::Approx(1.5));
    CHECK(A[1] == doctest::Approx(1.0));
}

TEST_CASE("lambda = 0 reduces GAE to the one-step TD residual") {
    Episode ep{{State{0.4, 349}, ControlInput{300}, 2.0, State{0.5, 350}, -1.0, false},
               {State{0.5, 350}, ControlInput{300}, -1.0, State{0.6, 351}, -1.0, true}};
    auto vf = [](const State& s) { return 10.0 * s.cA; };
    std::vector<double> G, A;
    returns_and_advantages(ep, 0.9, 0.0, vf, G, A);
    CHECK(A[0] == doctest::Approx(2.0 + 0.9 * vf(ep[0].x_next) - vf(ep[0].x)));
    CHECK(A[1] == doctest::Approx(-1.0 + 0.0 - vf(ep[1].x)));
}

TEST_CASE("policy and value gradients match central finite differences") {
    Agent agent = make_agent(21);
    Rng rng(5);
    std::vector<Episode> batch{random_episode(agent, rng, 3)};
    auto data = agent.prepare(batch);

    auto check_policy = [&](Agent& ag) {
        std::vector<double> ga;
        ag.policy_loss_and_grad(data, &ga);
        std::vector<double> theta = ag.policy_params_flat();
        std::vector<double> gfd(theta.size());
        const double h = 1e-6;
        for (size_t i = 0; i < theta.size(); ++i) {
            std::vector<double> tp = theta, tm = theta;
            tp[i] += h;
            tm[i] -= h;
            ag.set_policy_params_flat(tp);
            const double lp = ag.policy_loss_and_grad(data, nullptr);
            ag.set_policy_params_flat(tm);
            const double lm = ag.policy_loss_and_grad(data, nullptr);
            gfd[i] = (lp - lm) / (2.0 * h);
        }
        ag.set_policy_params_flat(theta);
        CHECK(max_rel_grad_err(ga, gfd) <= 1e-4);
    };
    auto check_value = [&](Agent& ag) {
        std::vector<double> ga;
        ag.value_loss_and_grad(data, &ga);
        std::vector<double> theta = ag.value_params_flat();
        std::vector<double> gfd(theta.size());
        const double h = 1e-6;
        for (size_t i = 0; i < theta.size(); ++i) {
            std::vector<double> tp = theta, tm = theta;
            tp[i] += h;
            tm[i] -= h;
            ag.set_value_params_flat(tp);
            const double lp = ag.value_loss_and_grad(data, nullptr);
            ag.set_value_params_flat(tm);
            const double lm = ag.value_loss_and_grad(data, nullptr);
            gfd[i] = (lp - lm) / (2.0 * h);
        }
        ag.set_value_params_flat(theta);
        CHECK(max_rel_grad_err(ga, gfd) <= 1e-4);
    };

    check_policy(agent);
    check_value(agent);

    // also at parameters away from the rollout point (ratios != 1)
    auto theta = agent.policy_params_flat();
    Rng prng(9);
    for (auto& t : theta) t += 0.01 * prng.uniform(-1.0, 1.0);
    agent.set_policy_params_flat(theta);
    check_policy(agent);
}

TEST_CASE("zero advantages produce a zero policy gradient") {
    Agent agent = make_agent(33);
    // V == 0 via zero value weights, r == 0: every GAE term vanishes
    std::vector<double> zeros(agent.value_params_flat().size(), 0.0);
    agent.set_value_params_flat(zeros);

    Rng rng(8);
    std::vector<Episode> batch{random_episode(agent, rng, 5, 0.0)};
    auto data = agent.prepare(batch);
    for (double a : data.adv) CHECK(a == 0.0);
    std::vector<double> g;
    agent.policy_loss_and_grad(data, &g);
    double norm = 0.0;
    for (double v : g) norm += v * v;
    CHECK(std::sqrt(norm) <= 1e-8);
}

TEST_CASE("update is deterministic and invariant to episode order") {
    Hyper hy;
    Rng rng(14);
    Agent proto = make_agent(55);
    Episode e1 = random_episode(proto, rng, 6);
    Episode e2 = random_episode(proto, rng, 6);

    Agent a1 = make_agent(55);
    Agent a2 = make_agent(55);
    a1.update({e1, e2});
    a2.update({e2, e1});
    CHECK(a1.serialize() == a2.serialize());

    Agent a3 = make_agent(55);
    a3.update({e1, e2});
    CHECK(a1.serialize() == a3.serialize());
}

TEST_CASE("non-finite loss aborts the update and restores weights") {
    Agent agent = make_agent(66);
    const std::string before = agent.serialize();
    Rng rng(2);
    Episode ep = random_episode(agent, rng, 3);
    ep[1].logprob = -1e6; // ratio overflows to inf
    CHECK_THROWS_AS(agent.update({ep}), NumericError);
    CHECK(agent.serialize() == before);
}

TEST_CASE("std never drops below the floor across many updates") {
    Agent agent = make_agent(77);
    Rng rng(4);
    for (int i = 0; i < 50; ++i) {
        std::vector<Episode> batch{random_episode(agent, rng, 8),
                                   random_episode(agent, rng, 8)};
        agent.update(batch);
        CHECK(agent.std_normalized() >= agent.hyper().std_floor);
    }
}

TEST_CASE("weights persist bit-exactly") {
    Agent agent = make_agent(88);
    Rng rng(6);
    agent.update({random_episode(agent, rng, 10)});
    const std::string text = agent.serialize();
    Agent back = Agent::deserialize(text, "mem", agent.hyper());
    CHECK(back.serialize() == text);
    Rng r1(123), r2(123);
    State x{0.44, 351.0};
    auto [u1, lp1] = agent.act(x, true, r1);
    auto [u2, lp2] = back.act(x, true, r2);
    CHECK(u1.Tc == u2.Tc);
    CHECK(lp1 == lp2);
}

TEST_CASE("forced extreme mean saturates the action") {
    Agent agent = make_agent(99);
    agent.force_mean_bias(5.0); // tanh ~ 1 -> mean action near the top
    Rng rng(1);
    auto [u, lp] = agent.act(State{0.5, 350.0}, false, rng);
    CHECK(u.Tc > 314.0);
}

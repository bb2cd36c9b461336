#include "cisrl/training.hpp"

#include "cisrl/common.hpp"
#include "cisrl/supervisor.hpp"
#include "cisrl/text_io.hpp"

#include <cmath>

namespace cisrl::train {

void TrainConfig::validate() const {
    if (episodes < 0) throw ConfigError("TrainConfig: negative episode count");
    if (steps_per_episode < 1) throw ConfigError("TrainConfig: steps_per_episode must be >= 1");
    if (batch_episodes < 1) throw ConfigError("TrainConfig: batch_episodes must be >= 1");
    if (episodes % batch_episodes != 0)
        throw ConfigError("TrainConfig: episodes must be a multiple of batch_episodes");
    set.validate();
    sample_box.validate();
    if (robust) W.validate();
}

rl::Episode rollout_episode(const dynamics::ModelParams& model, rl::Agent& agent,
                            const TrainConfig& config, Rng& rng) {
    return rollout_episode(
        model,
        [&agent](const dynamics::State& s, Rng& r) { return agent.act(s, true, r); }, config,
        rng);
}

rl::Episode rollout_episode(const dynamics::ModelParams& model, const PolicyFn& policy,
                            const TrainConfig& config, Rng& rng) {
    auto v0 = geometry::sample_uniform(config.set, config.sample_box, rng);
    dynamics::State x{v0[0], v0[1]};

    rl::Episode ep;
    ep.reserve(config.steps_per_episode);
    for (int k = 0; k < config.steps_per_episode; ++k) {
        auto [u, logp] = policy(x, rng);
        const dynamics::State phi = dynamics::step(model, x, u, dynamics::Disturbance{});

        bool inside;
        dynamics::State x_pred;
        if (config.robust) {
            const auto wc = supervisor::worst_case_margin(model, config.set, x, u, config.W);
            inside = wc.J_star <= 0.0;
            if (inside) {
                x_pred = phi;
            } else {
                const double g = model.disturbance_gain();
                x_pred = {phi.cA + g * wc.w_star.w_cA, phi.T + g * wc.w_star.w_T};
            }
        } else {
            const double y[2] = {phi.cA, phi.T};
            inside = geometry::margin(config.set, y) <= 0.0;
            x_pred = phi;
        }

        const double r = rewards::reward(config.reward, x_pred, inside, x);
        ep.push_back({x, u, r, x_pred, logp, k == config.steps_per_episode - 1});
        if (inside) x = phi; // otherwise the state holds (reset rule)
    }
    return ep;
}

TrainResult train_offline(const dynamics::ModelParams& model, rl::Agent& agent,
                          const TrainConfig& config) {
    config.validate();
    TrainResult result;
    Rng rng(config.seed);

    std::vector<rl::Episode> batch;
    batch.reserve(config.batch_episodes);
    double window_sum = 0.0;
    constexpr int kWindow = 100;

    for (long e = 0; e < config.episodes; ++e) {
        rl::Episode ep = rollout_episode(model, agent, config, rng);
        double score = 0.0;
        for (const auto& t : ep) score += t.r;
        result.curve.score.push_back(score);

        window_sum += score;
        if (result.curve.score.size() > kWindow)
            window_sum -= result.curve.score[result.curve.score.size() - 1 - kWindow];
        const double denom = std::min<size_t>(result.curve.score.size(), kWindow);
        result.curve.running_avg.push_back(window_sum / denom);

        batch.push_back(std::move(ep));
        if (static_cast<int>(batch.size()) == config.batch_episodes) {
            try {
                agent.update(batch);
            } catch (const NumericError&) {
                result.halted = true;
                result.episodes_completed = e + 1;
                return result;
            }
            batch.clear();
        }
        result.episodes_completed = e + 1;
    }
    return result;
}

TestResult test_policy(const dynamics::ModelParams& model, const rl::Agent& agent,
                       const geometry::HPolytope& set,
                       const std::vector<dynamics::State>& initial_states, int steps,
                       bool disturb_env, const geometry::BoxSet& W, uint64_t seed) {
    return test_policy(
        model, [&agent](const dynamics::State& s, Rng& r) { return agent.act(s, false, r); },
        set, initial_states, steps, disturb_env, W, seed);
}

TestResult test_policy(const dynamics::ModelParams& model, const PolicyFn& policy,
                       const geometry::HPolytope& set,
                       const std::vector<dynamics::State>& initial_states, int steps,
                       bool disturb_env, const geometry::BoxSet& W, uint64_t seed) {
    TestResult res;
    res.episodes = static_cast<long>(initial_states.size());
    res.failed.assign(initial_states.size(), 0);
    Rng rng(seed);

    for (size_t e = 0; e < initial_states.size(); ++e) {
        dynamics::State x = initial_states[e];
        for (int k = 0; k < steps; ++k) {
            auto [u, logp] = policy(x, rng);
            (void)logp;
            dynamics::Disturbance w;
            if (disturb_env)
                w = {rng.uniform(W.lower[0], W.upper[0]), rng.uniform(W.lower[1], W.upper[1])};
            dynamics::State nxt;
            try {
                nxt = dynamics::step(model, x, u, w);
            } catch (const NumericError&) {
                res.failed[e] = 1; // blow-up counts as leaving the set
                break;
            }
            const double y[2] = {nxt.cA, nxt.T};
            if (geometry::margin(set, y) > 0.0) {
                res.failed[e] = 1;
                break;
            }
            x = nxt;
        }
        if (res.failed[e]) ++res.failures;
    }
    res.failure_rate = initial_states.empty()
                           ? 0.0
                           : static_cast<double>(res.failures) / initial_states.size();
    return res;
}

std::vector<dynamics::State> sample_initial_states(const geometry::HPolytope& set,
                                                   const geometry::BoxSet& bb, long count,
                                                   uint64_t seed) {
    Rng rng(seed);
    std::vector<dynamics::State> out;
    out.reserve(count);
    for (long i = 0; i < count; ++i) {
        auto v = geometry::sample_uniform(set, bb, rng);
        out.push_back({v[0], v[1]});
    }
    return out;
}

uint64_t hash_states(const std::vector<dynamics::State>& states) {
    std::string text;
    for (const auto& s : states) {
        text += format_full(s.cA);
        text += ',';
        text += format_full(s.T);
        text += '\n';
    }
    return fnv1a(text.data(), text.size());
}

std::string curve_to_csv(const LearningCurve& curve) {
    std::string out = "episode,score,running_avg\n";
    for (size_t i = 0; i < curve.score.size(); ++i) {
        out += std::to_string(i);
        out += ',';
        out += format_full(curve.score[i]);
        out += ',';
        out += format_full(curve.running_avg[i]);
        out += '\n';
    }
    return out;
}

} // namespace cisrl::train

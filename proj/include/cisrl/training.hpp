#pragma once

#include "cisrl/agent.hpp"
#include "cisrl/dynamics.hpp"
#include "cisrl/geometry.hpp"
#include "cisrl/rewards.hpp"
#include "cisrl/rng.hpp"

#include <vector>

namespace cisrl::train {

struct TrainConfig {
    long episodes = 2000; // desk scale; the full-scale study uses 10000
    int steps_per_episode = 200;
    int batch_episodes = 10;
    uint64_t seed = 1;
    geometry::HPolytope set;     // gating set: invariant-set polytope, or the
                                 // constraint box for the ablation
    geometry::BoxSet sample_box; // encloses the set, used for rejection draws
    rewards::RewardSpec reward;
    bool robust = false; // gate on the worst-case verdict instead of the
                         // nominal prediction (off = the cheaper pipeline)
    geometry::BoxSet W{{0.0, 0.0}, {0.0, 0.0}};

    void validate() const;
};

struct LearningCurve {
    std::vector<double> score;       // per-episode sum of rewards
    std::vector<double> running_avg; // window of the past 100 episodes
};

struct TrainResult {
    LearningCurve curve;
    bool halted = false; // an update aborted; curve holds the partial run
    long episodes_completed = 0;
};

// Any action source works for rollouts and frozen tests; the full agent is
// only required where updates happen.
using PolicyFn = std::function<std::pair<dynamics::ControlInput, double>(const dynamics::State&,
                                                                         Rng&)>;

// One exploratory episode with membership-gated rewards and the state-reset
// rule: when the predicted next state leaves the set the stored transition
// keeps the violating prediction as x_next, but the simulation state holds.
rl::Episode rollout_episode(const dynamics::ModelParams& model, const PolicyFn& policy,
                            const TrainConfig& config, Rng& rng);
rl::Episode rollout_episode(const dynamics::ModelParams& model, rl::Agent& agent,
                            const TrainConfig& config, Rng& rng);

// Offline loop: initial states sampled inside the set, one policy update per
// batch_episodes episodes. Mutates the supplied agent.
TrainResult train_offline(const dynamics::ModelParams& model, rl::Agent& agent,
                          const TrainConfig& config);

struct TestResult {
    long episodes = 0;
    long failures = 0;
    double failure_rate = 0.0;
    std::vector<uint8_t> failed; // per-episode flag
};

// Frozen-policy evaluation: mean actions applied directly to the plant, a
// failure is any episode whose realized state leaves the set. disturb_env
// draws plant disturbances uniformly from W (robust-case testing).
TestResult test_policy(const dynamics::ModelParams& model, const PolicyFn& policy,
                       const geometry::HPolytope& set,
                       const std::vector<dynamics::State>& initial_states, int steps,
                       bool disturb_env, const geometry::BoxSet& W, uint64_t seed);
TestResult test_policy(const dynamics::ModelParams& model, const rl::Agent& agent,
                       const geometry::HPolytope& set,
                       const std::vector<dynamics::State>& initial_states, int steps,
                       bool disturb_env, const geometry::BoxSet& W, uint64_t seed);

// Shared initial-state lists, sampled uniformly inside the set.
std::vector<dynamics::State> sample_initial_states(const geometry::HPolytope& set,
                                                   const geometry::BoxSet& bb, long count,
                                                   uint64_t seed);

// Fingerprint for protocol checks (same list => same hash).
uint64_t hash_states(const std::vector<dynamics::State>& states);

// CSV persistence of a learning curve: episode,score,running_avg.
std::string curve_to_csv(const LearningCurve& curve);

} // namespace cisrl::train

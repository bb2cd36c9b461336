#pragma once

#include "cisrl/agent.hpp"
#include "cisrl/cis.hpp"
#include "cisrl/dynamics.hpp"
#include "cisrl/geometry.hpp"
#include "cisrl/rewards.hpp"
#include "cisrl/rng.hpp"

#include <cstdint>
#include <vector>

// Online safety layer: action vetting (deterministic margin or exact
// worst-case-disturbance margin), bounded retraining with state reset, and a
// certified backup fallback.

namespace cisrl::supervisor {

constexpr size_t kUnboundedIterations = SIZE_MAX;

struct SupervisorConfig {
    // maximum retraining updates per step before falling back to the backup
    // table; kUnboundedIterations removes the bound
    size_t max_iterations = 20;
    int retrain_samples_per_update = 10;
    // online updates run hotter than offline training so a bounded number
    // of iterations can actually move the policy at the held state
    double retrain_lr_scale = 50.0;
    bool robust = false;                     // worst-case check when true
    geometry::BoxSet W{{0.0, 0.0}, {0.0, 0.0}};
    // The mixed-integer view of the worst-case problem carries a big-M
    // constant that forces all but one row inactive; the active-row
    // decomposition below solves each row in closed form instead, so M never
    // needs a numeric value.

    void validate() const;
};

struct WorstCaseResult {
    double J_star = 0.0;
    dynamics::Disturbance w_star;
    int active_row = -1;
};

// Exact optimum of max_{w in W} max_i (A_i (phi + G w) - b_i) for a map that
// is linear in w with diagonal gain G. Each row's box-constrained linear
// maximum is closed-form; the winner (ties to the lowest row) provides J*
// and its sign-pattern vertex provides w*.
WorstCaseResult worst_case_margin_core(const geometry::HPolytope& P,
                                       std::span<const double> phi,
                                       std::span<const double> gains,
                                       const geometry::BoxSet& W);

WorstCaseResult worst_case_margin(const dynamics::ModelParams& p, const geometry::HPolytope& P,
                                  const dynamics::State& x, const dynamics::ControlInput& u,
                                  const geometry::BoxSet& W);

// Approximate fallback for experimental maps that are nonlinear in w (the
// continuous-injection variant): dense grid over W including its vertices.
// Inexact by construction; never used by the supervisor itself.
WorstCaseResult worst_case_margin_sampled(const dynamics::ModelParams& p,
                                          const geometry::HPolytope& P, const dynamics::State& x,
                                          const dynamics::ControlInput& u,
                                          const geometry::BoxSet& W, int points_per_axis,
                                          bool continuous_w);

struct Verdict {
    bool safe = false;
    double J = 0.0;
    dynamics::State x_pred;
};

// Deterministic mode: margin of the nominal prediction. Robust mode: exact
// worst-case margin; when unsafe, x_pred carries the worst-case prediction.
Verdict check_action(const dynamics::ModelParams& p, const geometry::HPolytope& P,
                     const dynamics::State& x, const dynamics::ControlInput& u,
                     const SupervisorConfig& config);

struct StepLog {
    long episode = 0;
    int k = 0;
    dynamics::State x;
    double u_raw = 0.0;
    double u_applied = 0.0;
    double J = 0.0; // verdict value of the applied action
    bool safe_raw = false;
    int updates_used = 0;
    bool fallback = false;
    dynamics::Disturbance w_applied;
    // microsecond timings, kept out of the deterministic logs
    uint64_t check_us = 0;
    uint64_t update_us = 0;
};

struct SupervisorContext {
    dynamics::ModelParams model;
    geometry::HPolytope P;
    cis::GriddedSet set;
    cis::BackupTable backup;
    rewards::RewardSpec reward;
    SupervisorConfig config;
    // candidate inputs scanned when the stored backup entry fails its
    // use-time re-certification (backup semantics: any certified input)
    std::vector<double> u_grid;
};

// One supervised control step at state x (Algorithm: vet, retrain at the
// held state, fall back to the backup table after max_iterations updates).
// Never returns an action with an unsafe verdict; throws SafetyFaultError
// when no input in the backup path certifies.
dynamics::ControlInput supervise_step(const SupervisorContext& ctx, rl::Agent& agent,
                                      const dynamics::State& x, Rng& rng, StepLog& log);

struct OnlineMetrics {
    long episodes = 0;
    int steps_per_episode = 0;
    long violation_episodes = 0; // realized state left P at least once
    long violation_steps = 0;
    long fallback_count = 0;
    long updates_total = 0;
    long safety_faults = 0;
    std::vector<StepLog> step_logs;
    std::vector<std::vector<dynamics::State>> trajectories; // realized states per episode
};

// Runs supervised episodes against the environment. In disturbed mode the
// environment draws w uniformly from W each step. check_robust is separated
// from the environment switch so the naive pairing (deterministic check
// against a disturbed plant) can be studied.
OnlineMetrics run_online(const SupervisorContext& ctx, rl::Agent& agent, long n_episodes,
                         int steps, bool disturb_env, uint64_t seed,
                         const std::vector<dynamics::State>* initial_states = nullptr,
                         bool keep_step_logs = true);

} // namespace cisrl::supervisor

#pragma once

#include "cisrl/dynamics.hpp"
#include "cisrl/geometry.hpp"
#include "cisrl/rng.hpp"

#include <map>
#include <string>
#include <vector>

namespace cisrl::rewards {

enum class Variant { Invariance, SetPoint, Economic, EconomicZone };

// Membership-gated reward: r2 outside the set; inside, the variant's safe
// value (a constant for Invariance, a stage cost otherwise).
struct RewardSpec {
    Variant variant = Variant::Invariance;
    double r1 = 10000.0;  // Invariance safe reward
    double r2 = -1000.0;  // violation penalty
    dynamics::State x_s{0.0, 0.0}; // SetPoint target
    double p_norm = 2.0;
    double q_exp = 2.0;
    double zone_lo = 348.0;
    double zone_hi = 352.0;
    double zone_weight = 300.0;
    double volume = 100.0; // reactor volume for the economic stage

    std::string variant_name() const;
};

Variant variant_from_name(const std::string& name);

// Economic stage cost 100 * (1 - cA) * V.
double economic_stage(const dynamics::State& x, double volume);

// Zone penalty: 0 inside [lo, hi], -weight * (bound - T)^2 outside.
double zone_stage(double T, double weight = 300.0, double lo = 348.0, double hi = 352.0);

// The gated reward. `inside` is the caller-computed membership verdict of
// the predicted next state; x is the current state used by stage costs.
double reward(const RewardSpec& spec, const dynamics::State& x_next_pred, bool inside,
              const dynamics::State& x);

// Episode economics L_e = sum_k 100 (1 - cA_k) V. Throws on empty input.
double episode_economics(const std::vector<dynamics::State>& trajectory, double volume);

// Accumulated zone penalty magnitude over a trajectory (>= 0).
double zone_violation_integral(const std::vector<dynamics::State>& trajectory,
                               const RewardSpec& spec);

// Checks the stability premise min safe reward > r2 by sampling the set.
// Throws ConfigError when a spec cannot dominate its own penalty.
void validate_over_set(const RewardSpec& spec, const geometry::HPolytope& P,
                       const geometry::BoxSet& bb, size_t samples, uint64_t seed);

// key=value embedding used by experiment configs
RewardSpec reward_spec_from_config(const std::map<std::string, std::string>& kv);
std::map<std::string, std::string> reward_spec_to_config(const RewardSpec& spec);

} // namespace cisrl::rewards

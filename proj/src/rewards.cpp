#include "cisrl/rewards.hpp"

#include "cisrl/common.hpp"
#include "cisrl/text_io.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>

namespace cisrl::rewards {

std::string RewardSpec::variant_name() const {
    switch (variant) {
        case Variant::Invariance: return "invariance";
        case Variant::SetPoint: return "setpoint";
        case Variant::Economic: return "economic";
        case Variant::EconomicZone: return "economic_zone";
    }
    return "invariance";
}

Variant variant_from_name(const std::string& name) {
    if (name == "invariance") return Variant::Invariance;
    if (name == "setpoint") return Variant::SetPoint;
    if (name == "economic") return Variant::Economic;
    if (name == "economic_zone") return Variant::EconomicZone;
    throw ConfigError("unknown reward variant: " + name);
}

double economic_stage(const dynamics::State& x, double volume) {
    return 100.0 * (1.0 - x.cA) * volume;
}

double zone_stage(double T, double weight, double lo, double hi) {
    if (T < lo) return -weight * (lo - T) * (lo - T);
    if (T > hi) return -weight * (hi - T) * (hi - T);
    return 0.0;
}

static double safe_value(const RewardSpec& spec, const dynamics::State& x) {
    switch (spec.variant) {
        case Variant::Invariance:
            return spec.r1;
        case Variant::SetPoint: {
            const double d0 = std::fabs(x.cA - spec.x_s.cA);
            const double d1 = std::fabs(x.T - spec.x_s.T);
            double norm;
            if (spec.p_norm == 2.0) norm = std::sqrt(d0 * d0 + d1 * d1);
            else if (std::isinf(spec.p_norm)) norm = std::max(d0, d1);
            else
                norm = std::pow(std::pow(d0, spec.p_norm) + std::pow(d1, spec.p_norm),
                                1.0 / spec.p_norm);
            return -std::pow(norm, spec.q_exp);
        }
        case Variant::Economic:
            return economic_stage(x, spec.volume);
        case Variant::EconomicZone:
            return economic_stage(x, spec.volume) +
                   zone_stage(x.T, spec.zone_weight, spec.zone_lo, spec.zone_hi);
    }
    return spec.r1;
}

double reward(const RewardSpec& spec, const dynamics::State& /*x_next_pred*/, bool inside,
              const dynamics::State& x) {
    if (!inside) return spec.r2;
    return safe_value(spec, x);
}

double episode_economics(const std::vector<dynamics::State>& trajectory, double volume) {
    if (trajectory.empty()) throw ConfigError("episode_economics: empty trajectory");
    double sum = 0.0;
    for (const auto& x : trajectory) sum += economic_stage(x, volume);
    return sum;
}

double zone_violation_integral(const std::vector<dynamics::State>& trajectory,
                               const RewardSpec& spec) {
    double sum = 0.0;
    for (const auto& x : trajectory)
        sum += -zone_stage(x.T, spec.zone_weight, spec.zone_lo, spec.zone_hi);
    return sum;
}

void validate_over_set(const RewardSpec& spec, const geometry::HPolytope& P,
                       const geometry::BoxSet& bb, size_t samples, uint64_t seed) {
    Rng rng(seed);
    double min_safe = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < samples; ++i) {
        auto v = geometry::sample_uniform(P, bb, rng);
        min_safe = std::min(min_safe, safe_value(spec, dynamics::State{v[0], v[1]}));
    }
    if (!(min_safe > spec.r2))
        throw ConfigError("RewardSpec: minimum safe reward " + format_full(min_safe) +
                          " does not exceed the penalty r2 " + format_full(spec.r2));
}

RewardSpec reward_spec_from_config(const std::map<std::string, std::string>& kv) {
    RewardSpec spec;
    auto get = [&](const char* key, double dflt) {
        auto it = kv.find(key);
        if (it == kv.end()) return dflt;
        char* end = nullptr;
        double v = std::strtod(it->second.c_str(), &end);
        if (end == it->second.c_str() || *end != '\0')
            throw ConfigError(std::string("reward spec: bad number for ") + key);
        return v;
    };
    auto itv = kv.find("reward");
    if (itv != kv.end()) spec.variant = variant_from_name(itv->second);
    spec.r1 = get("r1", spec.r1);
    spec.r2 = get("r2", spec.r2);
    spec.x_s.cA = get("setpoint_cA", spec.x_s.cA);
    spec.x_s.T = get("setpoint_T", spec.x_s.T);
    spec.p_norm = get("p_norm", spec.p_norm);
    spec.q_exp = get("q_exp", spec.q_exp);
    spec.zone_lo = get("zone_lo", spec.zone_lo);
    spec.zone_hi = get("zone_hi", spec.zone_hi);
    spec.zone_weight = get("zone_weight", spec.zone_weight);
    spec.volume = get("volume", spec.volume);
    return spec;
}

std::map<std::string, std::string> reward_spec_to_config(const RewardSpec& spec) {
    std::map<std::string, std::string> kv;
    kv["reward"] = spec.variant_name();
    kv["r1"] = format_full(spec.r1);
    kv["r2"] = format_full(spec.r2);
    kv["setpoint_cA"] = format_full(spec.x_s.cA);
    kv["setpoint_T"] = format_full(spec.x_s.T);
    kv["p_norm"] = format_full(spec.p_norm);
    kv["q_exp"] = format_full(spec.q_exp);
    kv["zone_lo"] = format_full(spec.zone_lo);
    kv["zone_hi"] = format_full(spec.zone_hi);
    kv["zone_weight"] = format_full(spec.zone_weight);
    kv["volume"] = format_full(spec.volume);
    return kv;
}

} // namespace cisrl::rewards

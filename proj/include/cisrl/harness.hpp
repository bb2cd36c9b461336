#pragma once

#include "cisrl/cis.hpp"
#include "cisrl/dynamics.hpp"
#include "cisrl/geometry.hpp"
#include "cisrl/rewards.hpp"
#include "cisrl/supervisor.hpp"
#include "cisrl/training.hpp"

#include <json.hpp>

#include <map>
#include <string>
#include <vector>

// Experiment orchestration behind the command-line tool: set synthesis,
// training campaigns, policy testing, supervised online runs, economics
// comparisons, steady-state optimization, and log re-verification. Every
// command is deterministic given its configuration; wall-clock timings go to
// separate sidecar files so the primary outputs stay byte-reproducible.

namespace cisrl::harness {

struct ExperimentConfig {
    std::map<std::string, std::string> kv;

    static ExperimentConfig from_file(const std::string& path);
    static ExperimentConfig from_text(const std::string& text, const std::string& origin);
    void apply_override(const std::string& key, const std::string& value);

    bool has(const std::string& key) const { return kv.count(key) > 0; }
    std::string get_str(const std::string& key, const std::string& dflt) const;
    double get_double(const std::string& key, double dflt) const;
    long get_int(const std::string& key, long dflt) const;
    bool get_bool(const std::string& key, bool dflt) const;
    std::vector<uint64_t> get_seeds(const std::string& key,
                                    const std::vector<uint64_t>& dflt) const;

    dynamics::ModelParams model() const;
    geometry::BoxSet constraint_box() const; // X
    geometry::BoxSet disturbance_box() const; // W
    std::vector<double> u_grid() const;
    cis::Grid grid() const;
    rewards::RewardSpec reward_spec() const;
    std::string out_dir() const { return get_str("out_dir", "out"); }
    std::string sets_dir() const { return get_str("sets_dir", out_dir()); }
};

// Synthesized artifacts on disk (the synth command's outputs).
struct SetFiles {
    cis::GriddedSet det_set, rob_set;
    cis::BackupTable det_backup, rob_backup;
    geometry::HPolytope P_det, P_rob;
};

SetFiles load_sets(const ExperimentConfig& cfg);

nlohmann::json cmd_synth(const ExperimentConfig& cfg);
nlohmann::json cmd_train(const ExperimentConfig& cfg);
nlohmann::json cmd_test(const ExperimentConfig& cfg);
nlohmann::json cmd_online(const ExperimentConfig& cfg);
nlohmann::json cmd_econ(const ExperimentConfig& cfg);
nlohmann::json cmd_ssopt(const ExperimentConfig& cfg);
nlohmann::json cmd_verify_logs(const ExperimentConfig& cfg);

// Steady-state economics optimum over an input grid (the ssopt core).
struct SsOptResult {
    dynamics::State x_s;
    double u_s = 0.0;
    double l_e = 0.0;
};
SsOptResult steady_state_optimum(const dynamics::ModelParams& model,
                                 const geometry::HPolytope& P, double u_step);

// Step-log CSV emission/parsing shared by cmd_online and cmd_verify_logs.
std::string step_logs_to_csv(const std::vector<supervisor::StepLog>& logs,
                             const std::vector<std::vector<dynamics::State>>& trajectories);

void ensure_dir(const std::string& path);

} // namespace cisrl::harness

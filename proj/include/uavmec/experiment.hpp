#pragma once

#include "uavmec/driver.hpp"
#include "uavmec/scenario.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace uavmec {

enum class SweepAxis { sigma_multiplier, alpha, p0, f_g, L_scale };

const char* to_string(SweepAxis a);
SweepAxis axis_from_string(const std::string& name);

/// A batch of optimizer runs along one parameter axis with replicated task
/// draws.
struct ExperimentPreset {
    std::string name;
    std::string scenario_path;
    SweepAxis axis = SweepAxis::alpha;
    std::vector<double> values;    // strictly increasing, at least two
    std::vector<uint64_t> seeds;   // at least one
    std::string out_dir;
    int mc_samples = 20000;
    int max_rounds = 30;
};

/// Throws ValidationError on a malformed preset.
void validate_preset(const ExperimentPreset& preset);

/// Built-in name (`sigma`, `alpha`, `p0`, `fg`, `headline`) or a JSON preset
/// file path.
ExperimentPreset load_preset(const std::string& name_or_path);

/// Re-draws tasks with the replication seed and applies the axis value.
Scenario scenario_for_run(const std::string& base_config_text, SweepAxis axis, double value,
                          uint64_t seed);

struct RunRow {
    double value = 0.0;
    uint64_t seed = 0;
    std::string status_robust, status_ideal;
    double gamma_robust = 0.0, gamma_ideal = 0.0;
    double bits_robust = 0.0, bits_ideal = 0.0;
    double e_local = 0.0, e_tx = 0.0, e_fly = 0.0, e_edge = 0.0;  // robust run, raw sums
    int rounds_robust = 0, rounds_ideal = 0;
    double wall_robust = 0.0, wall_ideal = 0.0;
    double max_viol_gaussian = 0.0, max_viol_uniform = 0.0, max_viol_two_point = 0.0;
};

/// Runs every (axis value, seed) pair in a worker pool and writes
/// results.csv, trajectories.csv and violations.csv into the output
/// directory. Infeasible runs become rows with a status column, not errors.
std::vector<RunRow> run_experiment(const ExperimentPreset& preset, int jobs = 1);

struct SummaryRow {
    double value = 0.0;
    int runs = 0;
    double mean_gamma_robust = 0.0, mean_gamma_ideal = 0.0;
    double mean_ratio = 0.0;  // mean of per-seed robust/ideal ratios
    double mean_bits_robust = 0.0, mean_bits_ideal = 0.0;
};

struct Summary {
    std::vector<SummaryRow> rows;
    double headline_ratio = 0.0;  // mean ratio across all converged runs
    int converged_runs = 0;
    std::string text;
};

/// Reads <dir>/results.csv, writes <dir>/summary.csv and returns the
/// aggregate. Throws ParseError naming file and line on corrupt input.
Summary summarize(const std::string& results_dir);

}  // namespace uavmec

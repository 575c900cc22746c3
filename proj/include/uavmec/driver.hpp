#pragma once

#include "uavmec/cvar.hpp"
#include "uavmec/decomposition.hpp"
#include "uavmec/energy_model.hpp"
#include "uavmec/scenario.hpp"

#include <string>
#include <vector>

namespace uavmec {

enum class OptStatus { converged, max_rounds, infeasible };

const char* to_string(OptStatus s);

struct SubproblemTimings {
    double ratios_s = 0.0;      // P5
    double assignment_s = 0.0;  // P4
    double trajectory_s = 0.0;  // P6 / SCA
};

struct OptimizationResult {
    Decision decision;
    EnergyBreakdown breakdown;
    std::vector<double> gamma_trace;  // objective after each BCD round (J)
    std::vector<std::vector<double>> sca_traces;  // per round, the SCA objective trace
    int rounds = 0;
    OptStatus status = OptStatus::infeasible;
    SubproblemTimings timings;
    std::string infeasible_reason;
};

/// Block-coordinate descent over the three subproblems: ratios, assignment,
/// trajectories. Stops when successive objectives differ by at most zeta or
/// after max_rounds. A feasibility bootstrap assigns every task whose
/// local-only latency constraint is infeasible to its nearest admissible
/// S-UAV before the first round.
OptimizationResult optimize(const Scenario& s, int max_rounds = 30,
                            Robustness mode = Robustness::robust);

/// Identical pipeline with the complexity error pinned to zero: chance
/// constraints become deterministic deadline rows at the estimated complexity.
OptimizationResult ideal_baseline(const Scenario& s, int max_rounds = 30);

/// Per-task empirical violation probabilities of the true latencies at the
/// returned decision under a matching-moments sampler.
struct ViolationReport {
    cvar::SamplerKind sampler;
    Grid2<double> local;  // I x T violation fraction
    Grid2<double> edge;
    double max_violation = 0.0;
};

ViolationReport validate_robustness(const Scenario& s, const OptimizationResult& r,
                                    cvar::SamplerKind sampler, int n, uint64_t seed);

/// Total offloaded data volume sum_{i,t} rho * L (bits).
double offloaded_bits(const Scenario& s, const Decision& d);

}  // namespace uavmec

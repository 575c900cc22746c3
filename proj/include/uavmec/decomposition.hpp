#pragma once

#include "uavmec/common.hpp"
#include "uavmec/conic.hpp"
#include "uavmec/link_model.hpp"
#include "uavmec/scenario.hpp"

#include <string>
#include <vector>

namespace uavmec {

/// Robust mode keeps the worst-case CVaR blocks; ideal replaces them with
/// deterministic deadline rows evaluated at the estimated complexity.
enum class Robustness { robust, ideal };

/// Closed-form feasibility bounds on the offload ratio, shared by the
/// bootstrap, P4 and the infeasibility diagnosis: the local latency
/// constraint tolerates rho >= rho_lower_bound, the edge constraint served
/// at secrecy rate r_sec tolerates rho <= rho_upper_bound. A small gate
/// keeps the margined conic rows strictly satisfiable at the bounds.
double rho_lower_bound(const TaskSample& task, const NetworkParams& p, Robustness mode);
double rho_upper_bound(const TaskSample& task, double r_sec, const NetworkParams& p,
                       Robustness mode);

// ---------------------------------------------------------------------------
// P5: offload ratios and CVaR auxiliaries at fixed assignment and trajectory
// ---------------------------------------------------------------------------

struct OffloadResult {
    Grid2<double> rho;
    Grid2<CvarVals> aux1, aux2;
    double objective = 0.0;  // weighted total energy at the new ratios (J)
};

/// Builds one cone program over all ratios and auxiliaries and solves it.
/// Throws InfeasibleError with a per-(i,t) diagnosis when no ratios satisfy
/// the latency constraints.
OffloadResult solve_offload_ratios(const Scenario& s, const Trajectory& w,
                                   const Assignment& lambda, Robustness mode,
                                   const conic::SolveOptions& opts);

// ---------------------------------------------------------------------------
// P4: per-slot capacitated assignment at fixed ratios and trajectory
// ---------------------------------------------------------------------------

/// Per-slot candidate costs and admissibility used by the exact assignment.
struct AssignmentSlot {
    int t = 0;
    std::vector<int> mandatory;          // GUs with rho > 0
    Grid2<double> cost;                  // I x M (J); +inf where forbidden
    Grid2<uint8_t> allowed;              // I x M
};

AssignmentSlot build_assignment_slot(const Scenario& s, const LinkState& ls,
                                     const Grid2<double>& rho, const Grid2<CvarVals>& aux2,
                                     Robustness mode, int t);

struct AssignmentOutcome {
    Assignment lambda;
    double cost = 0.0;          // sum of selected candidate costs (J)
    bool aux_rows_hold = true;  // fixed auxiliaries still satisfy the edge rows
};

/// Cost-minimal assignment per slot via capacitated min-cost flow; exact, with
/// lexicographic tie-breaking among epsilon-optimal solutions. Unassigned GUs
/// are only those with rho == 0. Throws InfeasibleError naming slot and GU.
AssignmentOutcome solve_assignment(const Scenario& s, const Trajectory& w,
                                   const Grid2<double>& rho, const Grid2<CvarVals>& aux2,
                                   Robustness mode);

/// Exhaustive per-slot oracle for small instances (tests and the `oracle`
/// CLI verb); same tie-breaking rule as the flow solver.
struct SlotAssignment {
    std::vector<int> uav_of_gu;  // -1 for unassigned
    double cost = 0.0;
    bool feasible = false;
};
SlotAssignment enumerate_slot_assignment(const AssignmentSlot& slot, int I, int M, int m_max);
SlotAssignment flow_slot_assignment(const AssignmentSlot& slot, int I, int M, int m_max);

// ---------------------------------------------------------------------------
// P6: trajectory via successive convex approximation
// ---------------------------------------------------------------------------

/// First-order expansion of the transmit latency in the squared horizontal
/// distance u = ||w_m - w_i||^2 around u_exp.
struct TaylorCoeffs {
    double value = 0.0;  // latency at the expansion point (s)
    double slope = 0.0;  // d latency / d u  (s / m^2), nonnegative
    double u_exp = 0.0;  // expansion squared distance (m^2)
};

TaylorCoeffs taylor_coeffs(const Vec2& w_expansion, const Vec2& w_gu, double lambda_rho_L,
                           double r_eav, const NetworkParams& p);

/// Upper bound on the transmit latency at w_m, tangent at w_expansion.
/// Throws InfeasibleError when the secrecy rate at the expansion point is
/// not positive.
double taylor_upper_bound(const Vec2& w_m, const Vec2& w_gu, const Vec2& w_expansion,
                          bool lambda, double rho, double L_bits, double r_eav,
                          const NetworkParams& p);

struct ScaResult {
    Trajectory w;
    std::vector<double> objective_trace;  // modeled upper-bound optimum per iteration (J)
    int iterations = 0;
};

/// Iterated convex upper-bound minimization of the trajectory subproblem with
/// assignments, ratios and auxiliaries held fixed.
ScaResult solve_trajectory_sca(const Scenario& s, const Assignment& lambda,
                               const Grid2<double>& rho, const Grid2<CvarVals>& aux2,
                               const Trajectory& w_init, Robustness mode,
                               const conic::SolveOptions& opts, int max_iterations = 40);

}  // namespace uavmec

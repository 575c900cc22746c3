#pragma once

#include "uavmec/common.hpp"
#include "uavmec/conic.hpp"
#include "uavmec/scenario.hpp"

#include <cstdint>

namespace uavmec::cvar {

/// Interior-point solvers work on closed sets, so the strict rows of the
/// reformulation are implemented with a small margin and a floor on z.
constexpr double kRowMargin = 1e-9;
constexpr double kZFloor = 1e-9;

/// Affine loss phi(xi) = Theta * xi + theta0 with the two moments of xi.
struct LinearLoss {
    double theta0 = 0.0;  // constant term (s)
    double Theta = 0.0;   // coefficient of the random complexity error
    double mu = 0.0;
    double sigma = 0.0;
};

/// sqrt(alpha / (1 - alpha))
double cantelli_factor(double alpha);

/// Worst-case CVaR over all distributions with the given two moments:
/// theta0 + Theta*mu + |Theta|*sigma*sqrt(alpha/(1-alpha)).
double worst_case_cvar_closed_form(const LinearLoss& loss, double alpha);

/// Independent oracle: maximize CVaR_alpha over two-point distributions
/// matching (mu, sigma^2) by a dense grid search over the low-mass p.
double two_point_grid_cvar(const LinearLoss& loss, double alpha, int grid_points = 20000);

/// Loss of the local-computing latency chance constraint at offload ratio rho.
LinearLoss loss_local(double rho, const TaskSample& task, const NetworkParams& p);

/// Loss of the edge (transmit + compute) latency chance constraint. One entry
/// of lambda_row per UAV; r_sec likewise. Throws InfeasibleError when an
/// assigned link has zero secrecy rate.
LinearLoss loss_edge(const std::vector<uint8_t>& lambda_row, double rho,
                     const TaskSample& task, const std::vector<double>& r_sec,
                     const NetworkParams& p);

/// Indices of the (beta, e, q, z, s) auxiliaries inside a ConicProgram.
struct CvarAuxVars {
    int beta = -1, e = -1, q = -1, z = -1, s = -1;
};

/// Adds the auxiliaries and the reformulation rows for an affine-in-x loss:
///   beta + (e + s)/(1 - alpha) <= 0
///   e - theta0(x) + beta + q - Theta(x)*mu - z >= margin
///   e >= 0,  z >= z_floor
///   || (q, Theta(x)*sigma, z - s) ||  <=  z + s
CvarAuxVars emit_cvar_rows(conic::ConicProgram& prog, const conic::AffineExpr& theta0,
                           const conic::AffineExpr& Theta, double mu, double sigma, double alpha);

/// The (beta, e, q, z, s) tuple and constraint rows produced for one fixed
/// numeric loss, packaged as a standalone cone program.
struct CvarBlock {
    conic::ConicProgram prog;  // minimizes the header beta + (e+s)/(1-alpha)
    CvarAuxVars vars;
};

CvarBlock build_cvar_block(const LinearLoss& loss, double alpha);

/// Minimum of the header over the block rows, i.e. the conic route to the
/// worst-case CVaR value; the block is feasible iff this is <= 0.
double solve_block_header(const LinearLoss& loss, double alpha,
                          const conic::SolveOptions& opts = {});

enum class SamplerKind { gaussian, uniform, two_point };

/// Draws one complexity error with the requested moments.
double sample_error(SamplerKind kind, double mu, double sigma, DetRng& rng);

/// Empirical probability of Theta*xi + theta0 > 0 under the sampler.
/// Requires n >= 10^4 (binomial noise otherwise swamps the answer).
double monte_carlo_violation(const LinearLoss& loss, SamplerKind kind, int n, uint64_t seed);

}  // namespace uavmec::cvar

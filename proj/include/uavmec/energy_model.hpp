#pragma once

#include "uavmec/common.hpp"
#include "uavmec/scenario.hpp"

namespace uavmec {

/// Per-slot energy components and the weighted total objective.
struct EnergyBreakdown {
    Grid2<double> e_local;   // I x T (J)
    Grid3<double> e_tx;      // I x M x T (J)
    Grid3<double> e_edge;    // I x M x T (J)
    Grid2<double> e_fly;     // M x T (J)
    std::vector<double> total_per_slot;  // per t (J), kappa-weighted
    double gamma = 0.0;      // sum over slots (J)

    double sum_local() const;
    double sum_tx() const;
    double sum_edge() const;
    double sum_fly() const;
};

/// Rotary-wing propulsion power at horizontal speed v: blade profile,
/// induced and parasite terms.
double propulsion_power(double v, const NetworkParams& p);

/// propulsion_power(0) = P1 + P2
double hover_power(const NetworkParams& p);

/// Fly the displacement at v0, hover for the rest of the slot.
/// Throws ValidationError when the displacement exceeds v0*tau.
double flight_energy(const Vec2& w_prev, const Vec2& w_cur, const NetworkParams& p);

struct ComputeCost {
    double latency;  // s, evaluated at the estimated complexity
    double energy;   // J, expected value (c_bar + mu)
};

ComputeCost local_compute(double rho, const TaskSample& task, const NetworkParams& p);
ComputeCost edge_compute(bool lambda, double rho, const TaskSample& task, const NetworkParams& p);

/// Assembles every component and the weighted objective Gamma. Propagates
/// the zero-secrecy error from the link model.
EnergyBreakdown total_energy(const Scenario& s, const Decision& d);

}  // namespace uavmec

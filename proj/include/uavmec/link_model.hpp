#pragma once

#include "uavmec/common.hpp"
#include "uavmec/scenario.hpp"

namespace uavmec {

/// Geometry and rate state for a fixed trajectory grid.
struct LinkState {
    Grid3<double> d_gu_uav;  // I x M x T (m)
    Grid2<double> d_gu_eav;  // I x T (m)
    std::vector<double> d_eav_jam;  // per t (m)
    Grid3<double> r_up;      // I x M x T (bit/s)
    Grid2<double> r_eav;     // I x T (bit/s)
    Grid3<double> r_sec;     // I x M x T (bit/s)
};

/// 3-D distances only (rates left empty).
LinkState distances(const Scenario& s, const Trajectory& w);

/// Distances plus uplink, eavesdropping and secrecy rates.
LinkState link_state(const Scenario& s, const Trajectory& w);

/// Shannon uplink rate over the free-space LoS channel; OFDMA, so noise only.
double uplink_rate(double d_gu_uav, const NetworkParams& p);

/// Eavesdropper rate; the jammer's signal is indistinguishable from the GUs'
/// and enters the SINR denominator.
double eavesdrop_rate(double d_gu_eav, double d_eav_jam, const NetworkParams& p);

/// max(r_up - r_eav, 0)
double secure_rate(double r_up, double r_eav);

struct TxCost {
    double latency;  // s
    double energy;   // J
};

/// Transmission latency/energy of the offloaded fraction over the secure
/// link. Throws InfeasibleError when lambda*rho > 0 meets r_sec == 0
/// (assignment over a fully eavesdropped link).
TxCost tx_latency_energy(bool lambda, double rho, double L_bits, double r_sec, double p0);

}  // namespace uavmec

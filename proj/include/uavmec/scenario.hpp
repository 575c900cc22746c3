#pragma once

#include "uavmec/common.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace uavmec {

/// Physical and algorithmic constants. Defaults are the desk values
/// (1 km^2 area, rotary-wing S-UAVs at 100 m, OFDMA uplink at 10 MHz).
struct NetworkParams {
    double tau = 2.0;        // slot duration (s)
    double alpha = 0.95;     // latency safety factor
    double kappa = 5e-4;     // UAV energy weight
    double v0 = 20.0;        // S-UAV cruise speed (m/s)
    double h_s = 100.0;      // S-UAV altitude (m)
    double h_e = 100.0;      // E-UAV altitude (m)
    int m_max = 4;           // per-UAV connection capacity
    double p0 = 2.0;         // GU transmit power (W)
    double p_jam = 20.0;     // jammer power (W)
    double n0 = 3.981071705534969e-21;  // noise PSD (W/Hz), -174 dBm/Hz
    double b0 = 1e7;         // channel bandwidth (Hz)
    double g0 = 1e-5;        // reference channel gain at 1 m, -50 dB
    double f_g = 1e8;        // GU CPU frequency (cycles/s)
    double f_u = 1e9;        // UAV CPU frequency (cycles/s)
    double eps_g = 1e-28;    // GU switched capacitance (J s^2 / cycle^3)
    double eps_u = 1e-28;    // UAV switched capacitance
    double p1 = 79.85;       // blade profile hover power (W)
    double p2 = 88.63;       // induced hover power (W)
    double v_bla = 120.0;    // blade tip speed (m/s)
    double v_rot = 4.03;     // mean rotor induced velocity (m/s)
    double drag_g = 0.6;     // drag ratio
    double rho_air = 1.225;  // air density (kg/m^3)
    double s0 = 0.05;        // rotor solidity
    double a0 = 0.503;       // rotor disc area (m^2)
    double x_min = 0.0, x_max = 1000.0;
    double y_min = 0.0, y_max = 1000.0;
    double zeta = 1e-2;       // BCD convergence accuracy (J)
    double sca_tol = 1e-3;    // trajectory SCA tolerance (J)
    double solver_tol = 1e-8; // conic duality-gap tolerance
};

/// Per-slot task streams with the two complexity-error moments.
struct TaskSpec {
    Grid2<double> L;      // data length (bits), I x T
    Grid2<double> c_bar;  // estimated complexity (cycles/bit), I x T
    Grid2<double> mu;     // mean of the complexity error (cycles/bit)
    Grid2<double> sigma;  // standard deviation of the complexity error
};

struct TaskSample {
    double L, c_bar, mu, sigma;
};

/// Immutable world description; safe to share across workers.
struct Scenario {
    std::vector<Vec2> gus;
    Vec2 jammer = Vec2::Zero();
    std::vector<Vec2> eav_path;  // E-UAV horizontal position per slot
    std::vector<Vec2> uav_start, uav_end;
    TaskSpec tasks;
    NetworkParams params;
    uint64_t seed = 1;  // task-stream seed recorded for reproducibility
    int I = 0, M = 0, T = 0;

    TaskSample task(int i, int t) const {
        return {tasks.L(i, t), tasks.c_bar(i, t), tasks.mu(i, t), tasks.sigma(i, t)};
    }
};

/// CVaR auxiliaries (beta, e, q, z, s) attached to one chance constraint.
struct CvarVals {
    double beta = 0, e = 0, q = 0, z = 0, s = 0;
    friend bool operator==(const CvarVals&, const CvarVals&) = default;
};

using Trajectory = Grid2<Vec2>;       // M x T
using Assignment = Grid3<uint8_t>;    // I x M x T

/// The three optimization variable families plus CVaR auxiliaries.
struct Decision {
    Trajectory w;
    Assignment lambda;
    Grid2<double> rho;          // I x T
    Grid2<CvarVals> aux1, aux2; // local / edge chance-constraint auxiliaries

    /// Index of the serving UAV for (i, t), or -1.
    int assigned(int i, int t) const {
        for (int m = 0; m < lambda.dim1(); ++m)
            if (lambda(i, m, t)) return m;
        return -1;
    }
};

/// Parses the documented scenario schema ([section] headers, `key = <json>`
/// lines) and returns a fully validated Scenario with Table-style defaults
/// for anything omitted. Throws ParseError / ValidationError.
Scenario load_scenario(const std::string& config_text);

/// Inverse of load_scenario up to float round-trip; tasks are written out
/// explicitly so the text no longer depends on the generator.
std::string serialize_scenario(const Scenario& s);

/// Throws ValidationError naming the violated invariant.
void validate_scenario(const Scenario& s);

/// Straight-line trajectories between the fixed endpoints, no assignments,
/// no offloading, zeroed auxiliaries.
Decision straight_line_init(const Scenario& s);

/// Checks the Decision invariant suite (assignment caps, coupling, speed,
/// endpoints, bounds). Throws ValidationError.
void check_decision_invariants(const Scenario& s, const Decision& d);

namespace units {
/// -174 dBm/Hz -> 3.981e-21 W/Hz
double dbm_per_hz_to_w_per_hz(double dbm);
/// -50 dB -> 1e-5
double db_to_linear(double db);
}  // namespace units

}  // namespace uavmec

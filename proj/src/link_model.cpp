#include "uavmec/link_model.hpp"

#include <cmath>

namespace uavmec {

namespace {

double dist3(const Vec2& a, const Vec2& b, double height) {
    return std::sqrt((a - b).squaredNorm() + height * height);
}

constexpr double kLn2 = 0.6931471805599453;

}  // namespace

LinkState distances(const Scenario& s, const Trajectory& w) {
    LinkState ls;
    ls.d_gu_uav = Grid3<double>(s.I, s.M, s.T);
    ls.d_gu_eav = Grid2<double>(s.I, s.T);
    ls.d_eav_jam.resize(s.T);
    for (int t = 0; t < s.T; ++t) {
        ls.d_eav_jam[t] = dist3(s.eav_path[t], s.jammer, s.params.h_e);
        for (int i = 0; i < s.I; ++i) {
            ls.d_gu_eav(i, t) = dist3(s.gus[i], s.eav_path[t], s.params.h_e);
            for (int m = 0; m < s.M; ++m)
                ls.d_gu_uav(i, m, t) = dist3(s.gus[i], w(m, t), s.params.h_s);
        }
    }
    return ls;
}

LinkState link_state(const Scenario& s, const Trajectory& w) {
    LinkState ls = distances(s, w);
    ls.r_up = Grid3<double>(s.I, s.M, s.T);
    ls.r_eav = Grid2<double>(s.I, s.T);
    ls.r_sec = Grid3<double>(s.I, s.M, s.T);
    for (int t = 0; t < s.T; ++t)
        for (int i = 0; i < s.I; ++i) {
            ls.r_eav(i, t) = eavesdrop_rate(ls.d_gu_eav(i, t), ls.d_eav_jam[t], s.params);
            for (int m = 0; m < s.M; ++m) {
                ls.r_up(i, m, t) = uplink_rate(ls.d_gu_uav(i, m, t), s.params);
                ls.r_sec(i, m, t) = secure_rate(ls.r_up(i, m, t), ls.r_eav(i, t));
            }
        }
    return ls;
}

double uplink_rate(double d, const NetworkParams& p) {
    const double sinr = p.p0 * p.g0 / (d * d) / (p.n0 * p.b0);
    return p.b0 * std::log1p(sinr) / kLn2;
}

double eavesdrop_rate(double d_gu_eav, double d_eav_jam, const NetworkParams& p) {
    const double signal = p.p0 * p.g0 / (d_gu_eav * d_gu_eav);
    const double jam = p.p_jam * p.g0 / (d_eav_jam * d_eav_jam);
    const double sinr = signal / (jam + p.n0 * p.b0);
    return p.b0 * std::log1p(sinr) / kLn2;
}

double secure_rate(double r_up, double r_eav) { return std::max(r_up - r_eav, 0.0); }

TxCost tx_latency_energy(bool lambda, double rho, double L_bits, double r_sec, double p0) {
    if (!lambda || rho <= 0.0) return {0.0, 0.0};
    if (r_sec <= 0.0)
        throw InfeasibleError("assignment over a fully eavesdropped link (secrecy rate is zero)");
    const double latency = rho * L_bits / r_sec;
    return {latency, p0 * latency};
}

}  // namespace uavmec

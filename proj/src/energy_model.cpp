#include "uavmec/energy_model.hpp"

#include "uavmec/link_model.hpp"

#include <cmath>
#include <numeric>

namespace uavmec {

double EnergyBreakdown::sum_local() const {
    return std::accumulate(e_local.begin(), e_local.end(), 0.0);
}
double EnergyBreakdown::sum_tx() const {
    double s = 0.0;
    for (int i = 0; i < e_tx.dim0(); ++i)
        for (int m = 0; m < e_tx.dim1(); ++m)
            for (int t = 0; t < e_tx.dim2(); ++t) s += e_tx(i, m, t);
    return s;
}
double EnergyBreakdown::sum_edge() const {
    double s = 0.0;
    for (int i = 0; i < e_edge.dim0(); ++i)
        for (int m = 0; m < e_edge.dim1(); ++m)
            for (int t = 0; t < e_edge.dim2(); ++t) s += e_edge(i, m, t);
    return s;
}
double EnergyBreakdown::sum_fly() const {
    return std::accumulate(e_fly.begin(), e_fly.end(), 0.0);
}

double propulsion_power(double v, const NetworkParams& p) {
    const double blade = p.p1 * (1.0 + 3.0 * v * v / (p.v_bla * p.v_bla));
    const double vr2 = p.v_rot * p.v_rot;
    const double induced =
        p.p2 * std::sqrt(std::sqrt(1.0 + std::pow(v, 4) / (4.0 * vr2 * vr2)) - v * v / (2.0 * vr2));
    const double parasite = 0.5 * p.drag_g * p.rho_air * p.s0 * p.a0 * v * v * v;
    return blade + induced + parasite;
}

double hover_power(const NetworkParams& p) { return p.p1 + p.p2; }

double flight_energy(const Vec2& w_prev, const Vec2& w_cur, const NetworkParams& p) {
    const double dist = (w_cur - w_prev).norm();
    const double limit = p.v0 * p.tau;
    if (dist > limit * (1.0 + 1e-9) + 1e-9)
        throw ValidationError("flight_energy: displacement " + std::to_string(dist) +
                              " m exceeds v0*tau = " + std::to_string(limit) + " m");
    const double t_fly = std::min(dist / p.v0, p.tau);
    return propulsion_power(p.v0, p) * t_fly + hover_power(p) * (p.tau - t_fly);
}

ComputeCost local_compute(double rho, const TaskSample& task, const NetworkParams& p) {
    const double keep = 1.0 - rho;
    return {keep * task.c_bar * task.L / p.f_g,
            p.eps_g * keep * (task.c_bar + task.mu) * task.L * p.f_g * p.f_g};
}

ComputeCost edge_compute(bool lambda, double rho, const TaskSample& task, const NetworkParams& p) {
    if (!lambda) return {0.0, 0.0};
    return {rho * task.c_bar * task.L / p.f_u,
            p.eps_u * rho * (task.c_bar + task.mu) * task.L * p.f_u * p.f_u};
}

EnergyBreakdown total_energy(const Scenario& s, const Decision& d) {
    const NetworkParams& p = s.params;
    EnergyBreakdown eb;
    eb.e_local = Grid2<double>(s.I, s.T);
    eb.e_tx = Grid3<double>(s.I, s.M, s.T);
    eb.e_edge = Grid3<double>(s.I, s.M, s.T);
    eb.e_fly = Grid2<double>(s.M, s.T);
    eb.total_per_slot.assign(s.T, 0.0);

    const LinkState ls = link_state(s, d.w);
    for (int t = 0; t < s.T; ++t) {
        double local = 0.0, tx = 0.0, edge = 0.0, fly = 0.0;
        for (int i = 0; i < s.I; ++i) {
            const TaskSample task = s.task(i, t);
            eb.e_local(i, t) = local_compute(d.rho(i, t), task, p).energy;
            local += eb.e_local(i, t);
            for (int m = 0; m < s.M; ++m) {
                const bool on = d.lambda(i, m, t) != 0;
                eb.e_tx(i, m, t) =
                    tx_latency_energy(on, d.rho(i, t), task.L, ls.r_sec(i, m, t), p.p0).energy;
                eb.e_edge(i, m, t) = edge_compute(on, d.rho(i, t), task, p).energy;
                tx += eb.e_tx(i, m, t);
                edge += eb.e_edge(i, m, t);
            }
        }
        for (int m = 0; m < s.M; ++m) {
            // slot 0 starts at the fixed initial point: no displacement
            eb.e_fly(m, t) = t == 0 ? hover_power(p) * p.tau
                                    : flight_energy(d.w(m, t - 1), d.w(m, t), p);
            fly += eb.e_fly(m, t);
        }
        eb.total_per_slot[t] = local + tx + p.kappa * (fly + edge);
        eb.gamma += eb.total_per_slot[t];
    }
    return eb;
}

}  // namespace uavmec

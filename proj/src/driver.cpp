#include "uavmec/driver.hpp"

#include "uavmec/link_model.hpp"

#include <chrono>
#include <cmath>

namespace uavmec {

namespace {

double now_s() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

/// Assign every task whose local-only constraint cannot hold to the nearest
/// S-UAV whose edge constraint admits the required ratio; exact per slot via
/// the same capacitated solver as P4 with distance costs.
Assignment bootstrap_assignment(const Scenario& s, const Trajectory& w, Robustness mode) {
    const NetworkParams& p = s.params;
    const LinkState ls = link_state(s, w);
    Assignment lambda(s.I, s.M, s.T, 0);
    for (int t = 0; t < s.T; ++t) {
        AssignmentSlot slot;
        slot.t = t;
        slot.cost = Grid2<double>(s.I, s.M, 0.0);
        slot.allowed = Grid2<uint8_t>(s.I, s.M, 0);
        for (int i = 0; i < s.I; ++i) {
            const TaskSample task = s.task(i, t);
            const double lo = rho_lower_bound(task, p, mode);
            if (lo <= 0.0) continue;  // locally feasible, no help needed
            slot.mandatory.push_back(i);
            for (int m = 0; m < s.M; ++m) {
                const double hi = rho_upper_bound(task, ls.r_sec(i, m, t), p, mode);
                if (lo <= hi) {
                    slot.allowed(i, m) = 1;
                    slot.cost(i, m) = ls.d_gu_uav(i, m, t);  // nearest-feasible heuristic
                }
            }
            bool any = false;
            for (int m = 0; m < s.M; ++m) any = any || slot.allowed(i, m);
            if (!any)
                throw InfeasibleError("bootstrap: GU " + std::to_string(i) + " slot " +
                                      std::to_string(t) +
                                      " cannot meet tau locally and no S-UAV admits it");
        }
        if (static_cast<int>(slot.mandatory.size()) > s.M * p.m_max)
            throw InfeasibleError("bootstrap: slot " + std::to_string(t) + " needs " +
                                  std::to_string(slot.mandatory.size()) +
                                  " offloads but capacity is " + std::to_string(s.M * p.m_max));
        const SlotAssignment sa = flow_slot_assignment(slot, s.I, s.M, p.m_max);
        if (!sa.feasible)
            throw InfeasibleError("bootstrap: slot " + std::to_string(t) +
                                  " cannot place all tasks that must offload within M_max");
        for (int i = 0; i < s.I; ++i)
            if (sa.uav_of_gu[i] >= 0) lambda(i, sa.uav_of_gu[i], t) = 1;
    }
    return lambda;
}

OptimizationResult run_bcd(const Scenario& s, int max_rounds, Robustness mode) {
    const NetworkParams& p = s.params;
    const conic::SolveOptions opts{p.solver_tol, 100};

    OptimizationResult res;
    res.decision = straight_line_init(s);
    Decision& d = res.decision;

    try {
        d.lambda = bootstrap_assignment(s, d.w, mode);
        double gamma_prev = total_energy(s, d).gamma;  // Gamma^0 of the bootstrap point

        for (int round = 0; round < max_rounds; ++round) {
            double t0 = now_s();
            OffloadResult p5 = solve_offload_ratios(s, d.w, d.lambda, mode, opts);
            res.timings.ratios_s += now_s() - t0;
            d.rho = p5.rho;
            d.aux1 = p5.aux1;
            d.aux2 = p5.aux2;

            t0 = now_s();
            AssignmentOutcome p4 = solve_assignment(s, d.w, d.rho, d.aux2, mode);
            res.timings.assignment_s += now_s() - t0;
            const bool changed = !(p4.lambda == d.lambda);
            d.lambda = p4.lambda;
            if (changed && !p4.aux_rows_hold) {
                // the new map invalidated the fixed auxiliaries; re-solve the
                // ratios inside the same round before touching trajectories
                t0 = now_s();
                OffloadResult again = solve_offload_ratios(s, d.w, d.lambda, mode, opts);
                res.timings.ratios_s += now_s() - t0;
                d.rho = again.rho;
                d.aux1 = again.aux1;
                d.aux2 = again.aux2;
            }

            t0 = now_s();
            ScaResult p6 = solve_trajectory_sca(s, d.lambda, d.rho, d.aux2, d.w, mode, opts);
            res.timings.trajectory_s += now_s() - t0;
            d.w = p6.w;
            res.sca_traces.push_back(p6.objective_trace);

            const double gamma = total_energy(s, d).gamma;
            res.gamma_trace.push_back(gamma);
            res.rounds = round + 1;
            if (std::abs(gamma_prev - gamma) <= p.zeta) {
                res.status = OptStatus::converged;
                break;
            }
            gamma_prev = gamma;
        }
        if (res.status != OptStatus::converged) res.status = OptStatus::max_rounds;
        res.breakdown = total_energy(s, d);
    } catch (const InfeasibleError& e) {
        res.status = OptStatus::infeasible;
        res.infeasible_reason = e.what();
    }
    return res;
}

}  // namespace

const char* to_string(OptStatus s) {
    switch (s) {
        case OptStatus::converged: return "converged";
        case OptStatus::max_rounds: return "max_rounds";
        case OptStatus::infeasible: return "infeasible";
    }
    return "unknown";
}

OptimizationResult optimize(const Scenario& s, int max_rounds, Robustness mode) {
    return run_bcd(s, max_rounds, mode);
}

OptimizationResult ideal_baseline(const Scenario& s, int max_rounds) {
    return run_bcd(s, max_rounds, Robustness::ideal);
}

ViolationReport validate_robustness(const Scenario& s, const OptimizationResult& r,
                                    cvar::SamplerKind sampler, int n, uint64_t seed) {
    if (n < 10000) throw ValidationError("validate_robustness needs n >= 10^4");
    const NetworkParams& p = s.params;
    const Decision& d = r.decision;
    const LinkState ls = link_state(s, d.w);

    ViolationReport rep;
    rep.sampler = sampler;
    rep.local = Grid2<double>(s.I, s.T, 0.0);
    rep.edge = Grid2<double>(s.I, s.T, 0.0);

    for (int i = 0; i < s.I; ++i)
        for (int t = 0; t < s.T; ++t) {
            const TaskSample task = s.task(i, t);
            const int m = d.assigned(i, t);
            const double rho = d.rho(i, t);
            // true latencies as a function of the sampled complexity
            const double local_fix = (1.0 - rho) * task.L / p.f_g;
            double edge_fix = 0.0, edge_tx = 0.0;
            if (m >= 0 && rho > 0.0) {
                edge_fix = rho * task.L / p.f_u;
                edge_tx = rho * task.L / ls.r_sec(i, m, t);
            }
            DetRng rng(seed ^ (static_cast<uint64_t>(i) << 32) ^ static_cast<uint64_t>(t));
            const double deadline = p.tau * (1.0 + 1e-9);  // boundary-equality is not a miss
            int viol_local = 0, viol_edge = 0;
            for (int k = 0; k < n; ++k) {
                const double c = task.c_bar + cvar::sample_error(sampler, task.mu, task.sigma, rng);
                if (local_fix * c > deadline) ++viol_local;
                if (m >= 0 && rho > 0.0 && edge_fix * c + edge_tx > deadline) ++viol_edge;
            }
            rep.local(i, t) = static_cast<double>(viol_local) / n;
            rep.edge(i, t) = static_cast<double>(viol_edge) / n;
            rep.max_violation =
                std::max({rep.max_violation, rep.local(i, t), rep.edge(i, t)});
        }
    return rep;
}

double offloaded_bits(const Scenario& s, const Decision& d) {
    double bits = 0.0;
    for (int i = 0; i < s.I; ++i)
        for (int t = 0; t < s.T; ++t) bits += d.rho(i, t) * s.tasks.L(i, t);
    return bits;
}

}  // namespace uavmec

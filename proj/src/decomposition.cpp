#include "uavmec/decomposition.hpp"

#include "uavmec/cvar.hpp"
#include "uavmec/energy_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace uavmec {

using conic::AffineExpr;
using conic::ConicProgram;
using conic::ConicSolution;
using conic::SolveStatus;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLn2 = 0.6931471805599453;

/// Deadline slack reserved so that the margined conic rows stay satisfiable
/// at ratios produced from these closed-form bounds.
constexpr double kFeasGate = 1e-6;

/// Ratios below this (with a slack local constraint) are numerical noise.
constexpr double kRhoSnap = 1e-7;

double deadline_scale(const TaskSample& task, const NetworkParams& p, Robustness mode) {
    // cycles/bit charged against the deadline per unit of kept/offloaded data
    if (mode == Robustness::ideal) return task.c_bar;
    return task.c_bar + task.mu + task.sigma * cvar::cantelli_factor(p.alpha);
}

}  // namespace

double rho_lower_bound(const TaskSample& task, const NetworkParams& p, Robustness mode) {
    const double k_local = task.L * deadline_scale(task, p, mode) / p.f_g;
    const double tau_eff = p.tau - kFeasGate;
    if (k_local <= tau_eff) return 0.0;
    return 1.0 - tau_eff / k_local;
}

double rho_upper_bound(const TaskSample& task, double r_sec, const NetworkParams& p,
                       Robustness mode) {
    if (r_sec <= 0.0) return -kInf;
    const double k_edge = task.L * deadline_scale(task, p, mode) / p.f_u + task.L / r_sec;
    const double tau_eff = p.tau - kFeasGate;
    return std::min(1.0, tau_eff / k_edge);
}

// ---------------------------------------------------------------------------
// P5
// ---------------------------------------------------------------------------

OffloadResult solve_offload_ratios(const Scenario& s, const Trajectory& w,
                                   const Assignment& lambda, Robustness mode,
                                   const conic::SolveOptions& opts) {
    const NetworkParams& p = s.params;
    const LinkState ls = link_state(s, w);

    ConicProgram prog;
    Grid2<int> rho_var(s.I, s.T, -1);
    Grid2<cvar::CvarAuxVars> aux1_var(s.I, s.T), aux2_var(s.I, s.T);

    for (int i = 0; i < s.I; ++i)
        for (int t = 0; t < s.T; ++t) {
            const TaskSample task = s.task(i, t);
            const int r = prog.add_var();
            rho_var(i, t) = r;

            int serving = -1;
            for (int m = 0; m < s.M; ++m)
                if (lambda(i, m, t)) serving = m;
            if (serving >= 0 && s.tasks.L(i, t) > 0.0 && ls.r_sec(i, serving, t) <= 0.0)
                throw InfeasibleError("P5: GU " + std::to_string(i) + " slot " +
                                      std::to_string(t) +
                                      " is assigned over a zero-secrecy link");

            // box and assignment coupling: 0 <= rho <= sum_m lambda
            prog.add_nonneg(AffineExpr::var(r));
            if (serving < 0) {
                prog.add_eq(AffineExpr::var(r));  // rho forced to zero
            } else {
                prog.add_nonneg(AffineExpr(1.0) - AffineExpr::var(r));
            }

            // objective: the energy terms affine in rho
            double coef = -p.eps_g * (task.c_bar + task.mu) * task.L * p.f_g * p.f_g;
            if (serving >= 0) {
                coef += p.p0 * task.L / ls.r_sec(i, serving, t);
                coef += p.kappa * p.eps_u * (task.c_bar + task.mu) * task.L * p.f_u * p.f_u;
            }
            prog.add_obj(r, coef);

            // latency constraints
            const double kl = task.c_bar * task.L / p.f_g;
            AffineExpr theta0_local = AffineExpr::var(r, -kl) + AffineExpr(kl - p.tau);
            AffineExpr Theta_local =
                AffineExpr::var(r, -task.L / p.f_g) + AffineExpr(task.L / p.f_g);
            AffineExpr theta0_edge(-p.tau);
            AffineExpr Theta_edge(0.0);
            if (serving >= 0) {
                const double ke =
                    task.c_bar * task.L / p.f_u + task.L / ls.r_sec(i, serving, t);
                theta0_edge += AffineExpr::var(r, ke);
                Theta_edge = AffineExpr::var(r, task.L / p.f_u);
            }
            if (mode == Robustness::robust) {
                aux1_var(i, t) =
                    cvar::emit_cvar_rows(prog, theta0_local, Theta_local, task.mu, task.sigma,
                                         p.alpha);
                aux2_var(i, t) = cvar::emit_cvar_rows(prog, theta0_edge, Theta_edge, task.mu,
                                                      task.sigma, p.alpha);
            } else {
                prog.add_nonneg(-1.0 * theta0_local);  // latency at c_bar within tau
                prog.add_nonneg(-1.0 * theta0_edge);
            }
        }

    const ConicSolution sol = conic::solve(prog, opts);
    if (sol.status == SolveStatus::primal_infeasible || sol.status == SolveStatus::max_iter) {
        // name every task that no ratio can save
        std::ostringstream diag;
        int bad = 0;
        for (int i = 0; i < s.I; ++i)
            for (int t = 0; t < s.T; ++t) {
                const TaskSample task = s.task(i, t);
                int serving = -1;
                for (int m = 0; m < s.M; ++m)
                    if (lambda(i, m, t)) serving = m;
                const double lo = rho_lower_bound(task, p, mode);
                const double hi =
                    serving < 0 ? 0.0 : rho_upper_bound(task, ls.r_sec(i, serving, t), p, mode);
                if (lo > hi + 1e-12) {
                    if (bad++ < 8)
                        diag << " [GU " << i << " slot " << t
                             << ": neither local nor offloaded execution meets tau at level alpha"
                             << (serving < 0 ? " (unassigned)" : "") << "]";
                }
            }
        if (bad > 0)
            throw InfeasibleError("P5 infeasible:" + diag.str() +
                                  (bad > 8 ? " (+" + std::to_string(bad - 8) + " more)" : ""));
        if (sol.status == SolveStatus::primal_infeasible)
            throw InfeasibleError("P5 reported infeasible without a failing task diagnosis");
        throw InternalError("P5 solve hit the iteration limit");
    }
    if (sol.status == SolveStatus::dual_infeasible)
        throw InternalError("P5 unbounded; the objective should be bounded on [0,1]^IT");

    OffloadResult out;
    out.rho = Grid2<double>(s.I, s.T);
    out.aux1 = Grid2<CvarVals>(s.I, s.T);
    out.aux2 = Grid2<CvarVals>(s.I, s.T);
    out.objective = sol.objective;  // replaced below by the full weighted energy
    for (int i = 0; i < s.I; ++i)
        for (int t = 0; t < s.T; ++t) {
            double r = std::clamp(sol.x[rho_var(i, t)], 0.0, 1.0);
            // snap solver noise to an exact zero when the local constraint is slack
            if (r <= kRhoSnap && rho_lower_bound(s.task(i, t), p, mode) == 0.0) r = 0.0;
            out.rho(i, t) = r;
            if (mode == Robustness::robust) {
                auto read = [&sol](const cvar::CvarAuxVars& v) {
                    return CvarVals{sol.x[v.beta], sol.x[v.e], sol.x[v.q], sol.x[v.z],
                                    sol.x[v.s]};
                };
                out.aux1(i, t) = read(aux1_var(i, t));
                out.aux2(i, t) = read(aux2_var(i, t));
            }
        }

    Decision d;
    d.w = w;
    d.lambda = lambda;
    d.rho = out.rho;
    d.aux1 = out.aux1;
    d.aux2 = out.aux2;
    out.objective = total_energy(s, d).gamma;
    return out;
}

// ---------------------------------------------------------------------------
// P4
// ---------------------------------------------------------------------------

namespace {

/// Successive-shortest-path min-cost flow on the tiny slot graph:
/// source -> mandatory GU (cap 1) -> allowed UAV (cap 1, candidate cost)
/// -> sink (cap m_max).
class SlotFlow {
public:
    SlotFlow(int nodes) : head_(nodes, -1) {}

    void add_edge(int a, int b, int cap, double cost) {
        edges_.push_back({b, head_[a], cap, cost});
        head_[a] = static_cast<int>(edges_.size()) - 1;
        edges_.push_back({a, head_[b], 0, -cost});
        head_[b] = static_cast<int>(edges_.size()) - 1;
    }

    /// Returns (units shipped, total cost).
    std::pair<int, double> run(int source, int sink) {
        int shipped = 0;
        double total = 0.0;
        const int n = static_cast<int>(head_.size());
        while (true) {
            // Bellman-Ford; negative residual costs appear after augmenting
            std::vector<double> dist(n, kInf);
            std::vector<int> via(n, -1);
            dist[source] = 0.0;
            for (int round = 0; round < n; ++round) {
                bool relaxed = false;
                for (int u = 0; u < n; ++u) {
                    if (dist[u] == kInf) continue;
                    for (int e = head_[u]; e >= 0; e = edges_[e].next) {
                        if (edges_[e].cap <= 0) continue;
                        const double nd = dist[u] + edges_[e].cost;
                        if (nd < dist[edges_[e].to] - 1e-15) {
                            dist[edges_[e].to] = nd;
                            via[edges_[e].to] = e;
                            relaxed = true;
                        }
                    }
                }
                if (!relaxed) break;
            }
            if (dist[sink] == kInf) break;
            for (int v = sink; v != source; v = edges_[via[v] ^ 1].to) {
                edges_[via[v]].cap -= 1;
                edges_[via[v] ^ 1].cap += 1;
            }
            total += dist[sink];
            ++shipped;
        }
        return {shipped, total};
    }

private:
    struct Edge {
        int to, next, cap;
        double cost;
    };
    std::vector<Edge> edges_;
    std::vector<int> head_;
};

/// Min assignment cost with some GUs pre-assigned (fixed) and the rest of the
/// mandatory set free; +inf when infeasible.
double min_rest_cost(const AssignmentSlot& slot, int I, int M, int m_max,
                     const std::vector<int>& fixed_choice) {
    const int source = 0, sink = 1 + I + M;
    SlotFlow flow(sink + 1);
    std::vector<int> cap_left(M, m_max);
    double fixed_cost = 0.0;
    int need = 0;
    for (int i : slot.mandatory) {
        if (fixed_choice[i] >= 0) {
            cap_left[fixed_choice[i]] -= 1;
            fixed_cost += slot.cost(i, fixed_choice[i]);
            continue;
        }
        ++need;
        flow.add_edge(source, 1 + i, 1, 0.0);
        for (int m = 0; m < M; ++m)
            if (slot.allowed(i, m)) flow.add_edge(1 + i, 1 + I + m, 1, slot.cost(i, m));
    }
    for (int m = 0; m < M; ++m) {
        if (cap_left[m] < 0) return kInf;
        flow.add_edge(1 + I + m, sink, cap_left[m], 0.0);
    }
    const auto [shipped, cost] = flow.run(source, sink);
    if (shipped < need) return kInf;
    return fixed_cost + cost;
}

}  // namespace

AssignmentSlot build_assignment_slot(const Scenario& s, const LinkState& ls,
                                     const Grid2<double>& rho, const Grid2<CvarVals>& aux2,
                                     Robustness mode, int t) {
    const NetworkParams& p = s.params;
    AssignmentSlot slot;
    slot.t = t;
    slot.cost = Grid2<double>(s.I, s.M, kInf);
    slot.allowed = Grid2<uint8_t>(s.I, s.M, 0);
    for (int i = 0; i < s.I; ++i) {
        if (rho(i, t) <= 0.0) continue;  // only GUs that must offload are placed
        slot.mandatory.push_back(i);
        const TaskSample task = s.task(i, t);
        for (int m = 0; m < s.M; ++m) {
            const double rs = ls.r_sec(i, m, t);
            if (rs <= 0.0) continue;
            // admissible if the edge CVaR block stays satisfiable at this rho,
            // either with free auxiliaries (closed form) or with the fixed
            // ones from the latest ratio solve
            double hi = rho_upper_bound(task, rs, p, mode);
            if (mode == Robustness::robust) {
                const CvarVals& a = aux2(i, t);
                const double budget = p.tau + a.e + a.beta + a.q - a.z;
                const double per_rho = task.L * (task.c_bar + task.mu) / p.f_u + task.L / rs;
                if (per_rho > 0.0) hi = std::max(hi, budget / per_rho);
            }
            if (rho(i, t) <= hi) {
                slot.allowed(i, m) = 1;
                slot.cost(i, m) =
                    tx_latency_energy(true, rho(i, t), task.L, rs, p.p0).energy +
                    p.kappa * edge_compute(true, rho(i, t), task, p).energy;
            }
        }
    }
    return slot;
}

SlotAssignment flow_slot_assignment(const AssignmentSlot& slot, int I, int M, int m_max) {
    SlotAssignment out;
    out.uav_of_gu.assign(I, -1);
    std::vector<int> fixed(I, -1);
    const double best = min_rest_cost(slot, I, M, m_max, fixed);
    if (best == kInf) return out;

    // lexicographic refinement: fix each mandatory GU to the smallest UAV
    // index that keeps the optimum (within epsilon)
    const double eps = 1e-9 * (1.0 + std::abs(best));
    for (int i : slot.mandatory) {
        for (int m = 0; m < M; ++m) {
            if (!slot.allowed(i, m)) continue;
            fixed[i] = m;
            if (min_rest_cost(slot, I, M, m_max, fixed) <= best + eps) break;
            fixed[i] = -1;
        }
        if (fixed[i] < 0) return out;  // numerical dead end; flag infeasible
    }
    out.uav_of_gu = fixed;
    out.feasible = true;
    for (int i : slot.mandatory) out.cost += slot.cost(i, fixed[i]);
    return out;
}

SlotAssignment enumerate_slot_assignment(const AssignmentSlot& slot, int I, int M, int m_max) {
    SlotAssignment out;
    out.uav_of_gu.assign(I, -1);
    std::vector<int> cap(M, m_max);

    // exhaustive minimum over mandatory[idx..] with the current capacities
    auto min_completion = [&](auto&& self, size_t idx) -> double {
        if (idx == slot.mandatory.size()) return 0.0;
        const int i = slot.mandatory[idx];
        double best = kInf;
        for (int m = 0; m < M; ++m) {
            if (!slot.allowed(i, m) || cap[m] == 0) continue;
            cap[m] -= 1;
            const double rest = self(self, idx + 1);
            cap[m] += 1;
            if (rest < kInf) best = std::min(best, slot.cost(i, m) + rest);
        }
        return best;
    };

    const double best_cost = min_completion(min_completion, 0);
    if (best_cost == kInf) return out;

    // first lexicographic assignment within epsilon of optimal, mirroring the
    // flow solver's tie rule
    const double eps = 1e-9 * (1.0 + std::abs(best_cost));
    double committed = 0.0;
    for (size_t idx = 0; idx < slot.mandatory.size(); ++idx) {
        const int i = slot.mandatory[idx];
        bool placed = false;
        for (int m = 0; m < M && !placed; ++m) {
            if (!slot.allowed(i, m) || cap[m] == 0) continue;
            cap[m] -= 1;
            const double rest = min_completion(min_completion, idx + 1);
            if (committed + slot.cost(i, m) + rest <= best_cost + eps) {
                out.uav_of_gu[i] = m;
                committed += slot.cost(i, m);
                placed = true;  // keep the capacity decrement
            } else {
                cap[m] += 1;
            }
        }
        if (!placed) return out;
    }
    out.feasible = true;
    out.cost = committed;
    return out;
}

AssignmentOutcome solve_assignment(const Scenario& s, const Trajectory& w,
                                   const Grid2<double>& rho, const Grid2<CvarVals>& aux2,
                                   Robustness mode) {
    const NetworkParams& p = s.params;
    const LinkState ls = link_state(s, w);
    AssignmentOutcome out;
    out.lambda = Assignment(s.I, s.M, s.T, 0);

    for (int t = 0; t < s.T; ++t) {
        const AssignmentSlot slot = build_assignment_slot(s, ls, rho, aux2, mode, t);
        if (static_cast<int>(slot.mandatory.size()) > s.M * p.m_max)
            throw InfeasibleError("P4: slot " + std::to_string(t) + " needs " +
                                  std::to_string(slot.mandatory.size()) +
                                  " assignments but capacity is " +
                                  std::to_string(s.M * p.m_max));
        for (int i : slot.mandatory) {
            bool any = false;
            for (int m = 0; m < s.M; ++m) any = any || slot.allowed(i, m);
            if (!any)
                throw InfeasibleError("P4: slot " + std::to_string(t) + ", GU " +
                                      std::to_string(i) + " has no admissible S-UAV");
        }
        const SlotAssignment sa = flow_slot_assignment(slot, s.I, s.M, p.m_max);
        if (!sa.feasible) {
            int unmatched = slot.mandatory.empty() ? -1 : slot.mandatory.front();
            throw InfeasibleError("P4: slot " + std::to_string(t) + " infeasible (GU " +
                                  std::to_string(unmatched) + " cannot be placed within M_max)");
        }
        out.cost += sa.cost;
        for (int i = 0; i < s.I; ++i)
            if (sa.uav_of_gu[i] >= 0) out.lambda(i, sa.uav_of_gu[i], t) = 1;
    }

    // do the fixed auxiliaries still satisfy the edge rows under the new map?
    if (mode == Robustness::robust) {
        for (int i = 0; i < s.I && out.aux_rows_hold; ++i)
            for (int t = 0; t < s.T; ++t) {
                if (rho(i, t) <= 0.0) continue;
                int m = -1;
                for (int mm = 0; mm < s.M; ++mm)
                    if (out.lambda(i, mm, t)) m = mm;
                if (m < 0) continue;
                const TaskSample task = s.task(i, t);
                const CvarVals& a = aux2(i, t);
                const double theta0 = rho(i, t) * (task.c_bar * task.L / p.f_u +
                                                   task.L / ls.r_sec(i, m, t)) -
                                      p.tau;
                const double Theta = rho(i, t) * task.L / p.f_u;
                if (a.e - theta0 + a.beta + a.q - Theta * task.mu - a.z < 0.0) {
                    out.aux_rows_hold = false;
                    break;
                }
            }
    }
    return out;
}

// ---------------------------------------------------------------------------
// P6
// ---------------------------------------------------------------------------

TaylorCoeffs taylor_coeffs(const Vec2& w_expansion, const Vec2& w_gu, double lambda_rho_L,
                           double r_eav, const NetworkParams& p) {
    TaylorCoeffs tc;
    tc.u_exp = (w_expansion - w_gu).squaredNorm();
    const double v = tc.u_exp + p.h_s * p.h_s;
    const double c = p.p0 * p.g0 / (p.n0 * p.b0);
    const double upsilon = 1.0 + c / v;
    const double r_up = p.b0 * std::log(upsilon) / kLn2;
    const double r_sec = r_up - r_eav;
    if (lambda_rho_L <= 0.0) return tc;  // inactive pair: zero bound
    if (r_sec <= 0.0)
        throw InfeasibleError("SCA expansion point has nonpositive secrecy rate");
    tc.value = lambda_rho_L / r_sec;
    tc.slope = lambda_rho_L * p.p0 * p.g0 / (kLn2 * p.n0 * upsilon * v * v * r_sec * r_sec);
    return tc;
}

double taylor_upper_bound(const Vec2& w_m, const Vec2& w_gu, const Vec2& w_expansion,
                          bool lambda, double rho, double L_bits, double r_eav,
                          const NetworkParams& p) {
    if (!lambda || rho <= 0.0) return 0.0;
    const TaylorCoeffs tc = taylor_coeffs(w_expansion, w_gu, rho * L_bits, r_eav, p);
    return tc.value + tc.slope * ((w_m - w_gu).squaredNorm() - tc.u_exp);
}

namespace {

struct P6Pair {
    int i, m, t;
    TaylorCoeffs tc;
    double theta_const;  // sum_m lambda*rho*c_bar*L/f_u of the deadline row
    double phi;          // deadline budget phi_i(t)
};

}  // namespace

ScaResult solve_trajectory_sca(const Scenario& s, const Assignment& lambda,
                               const Grid2<double>& rho, const Grid2<CvarVals>& aux2,
                               const Trajectory& w_init, Robustness mode,
                               const conic::SolveOptions& opts, int max_iterations) {
    const NetworkParams& p = s.params;
    const double fly_coef = p.kappa * (propulsion_power(p.v0, p) - hover_power(p)) / p.v0;
    const LinkState ls0 = link_state(s, w_init);  // r_eav does not depend on w

    // constant part of the modeled objective: local + kappa*edge energies and
    // the hover baseline
    double const_energy = p.kappa * s.M * s.T * hover_power(p) * p.tau;
    for (int i = 0; i < s.I; ++i)
        for (int t = 0; t < s.T; ++t) {
            const TaskSample task = s.task(i, t);
            const_energy += local_compute(rho(i, t), task, p).energy;
            for (int m = 0; m < s.M; ++m)
                const_energy +=
                    p.kappa * edge_compute(lambda(i, m, t) != 0, rho(i, t), task, p).energy;
        }

    ScaResult out;
    out.w = w_init;
    Trajectory cur = w_init;

    for (int it = 0; it < max_iterations; ++it) {
        ConicProgram prog;
        Grid2<std::pair<int, int>> wvar(s.M, s.T, {-1, -1});
        for (int m = 0; m < s.M; ++m)
            for (int t = 0; t < s.T; ++t)
                wvar(m, t) = {prog.add_var(), prog.add_var()};

        double const_obj = const_energy;
        for (int m = 0; m < s.M; ++m) {
            prog.add_eq(AffineExpr::var(wvar(m, 0).first) + AffineExpr(-s.uav_start[m][0]));
            prog.add_eq(AffineExpr::var(wvar(m, 0).second) + AffineExpr(-s.uav_start[m][1]));
            prog.add_eq(AffineExpr::var(wvar(m, s.T - 1).first) + AffineExpr(-s.uav_end[m][0]));
            prog.add_eq(AffineExpr::var(wvar(m, s.T - 1).second) + AffineExpr(-s.uav_end[m][1]));
            for (int t = 1; t + 1 < s.T; ++t) {
                const auto [vx, vy] = wvar(m, t);
                prog.add_nonneg(AffineExpr::var(vx) + AffineExpr(-p.x_min));
                prog.add_nonneg(AffineExpr::var(vx, -1.0) + AffineExpr(p.x_max));
                prog.add_nonneg(AffineExpr::var(vy) + AffineExpr(-p.y_min));
                prog.add_nonneg(AffineExpr::var(vy, -1.0) + AffineExpr(p.y_max));
            }
            for (int t = 1; t < s.T; ++t) {
                AffineExpr dx = AffineExpr::var(wvar(m, t).first) +
                                AffineExpr::var(wvar(m, t - 1).first, -1.0);
                AffineExpr dy = AffineExpr::var(wvar(m, t).second) +
                                AffineExpr::var(wvar(m, t - 1).second, -1.0);
                if (fly_coef > 0.0) {
                    const int d = prog.add_var();
                    prog.add_obj(d, fly_coef);
                    prog.add_soc({AffineExpr::var(d), dx, dy});
                    prog.add_nonneg(AffineExpr(p.v0 * p.tau) + AffineExpr::var(d, -1.0));
                } else {
                    prog.add_soc({AffineExpr(p.v0 * p.tau), dx, dy});
                }
            }
        }

        // active transmit pairs: epigraph of the squared distance plus the
        // linearized deadline row
        for (int i = 0; i < s.I; ++i)
            for (int t = 0; t < s.T; ++t) {
                if (rho(i, t) <= 0.0) continue;
                int m = -1;
                for (int mm = 0; mm < s.M; ++mm)
                    if (lambda(i, mm, t)) m = mm;
                if (m < 0) continue;
                const TaskSample task = s.task(i, t);
                const TaylorCoeffs tc =
                    taylor_coeffs(cur(m, t), s.gus[i], rho(i, t) * task.L, ls0.r_eav(i, t), p);
                if (tc.slope <= 0.0) continue;

                // the epigraph variable carries ||w - w_i||^2 / beta; dividing
                // by the expansion-point scale keeps the cone well conditioned
                // (the raw squared distances reach 1e6 m^2)
                const double beta = tc.u_exp + p.h_s * p.h_s;
                const double rb = std::sqrt(beta);
                const int u = prog.add_var();
                const auto [vx, vy] = wvar(m, t);
                std::vector<AffineExpr> cone(4);
                cone[0] = AffineExpr::var(u) + AffineExpr(1.0);
                cone[1] = AffineExpr::var(vx, 2.0 / rb) + AffineExpr(-2.0 * s.gus[i][0] / rb);
                cone[2] = AffineExpr::var(vy, 2.0 / rb) + AffineExpr(-2.0 * s.gus[i][1] / rb);
                cone[3] = AffineExpr::var(u) + AffineExpr(-1.0);
                prog.add_soc(std::move(cone));

                prog.add_obj(u, p.p0 * tc.slope * beta);
                const_obj += p.p0 * (tc.value - tc.slope * tc.u_exp);

                const double Theta = rho(i, t) * task.L / p.f_u;
                const double theta_const = rho(i, t) * task.c_bar * task.L / p.f_u;
                const CvarVals& a = aux2(i, t);
                const double phi = mode == Robustness::robust
                                       ? p.tau + a.e + a.beta + a.q - Theta * task.mu - a.z
                                       : p.tau;
                // slope*beta*u <= phi - theta_const - (value - slope*u_exp),
                // cushioned against the ratio solver's residual noise at the
                // expansion point (sub-ppm of the deadline, so the robustness
                // guarantee is unaffected)
                const double cushion = 1e-6 * std::max(1.0, std::abs(phi));
                const double rhs = phi + cushion - theta_const - (tc.value - tc.slope * tc.u_exp);
                prog.add_nonneg(AffineExpr(rhs) + AffineExpr::var(u, -tc.slope * beta));
            }

        const ConicSolution sol = conic::solve(prog, opts);
        if (sol.status == SolveStatus::primal_infeasible) {
            if (it == 0)
                throw InfeasibleError("P6: initial trajectory violates the robust deadline rows");
            throw InternalError("P6 became infeasible after a feasible SCA step");
        }
        if (sol.status != SolveStatus::optimal)
            throw InternalError(std::string("P6 solve failed: ") + conic::to_string(sol.status));

        Trajectory next(s.M, s.T);
        for (int m = 0; m < s.M; ++m) {
            next(m, 0) = s.uav_start[m];
            next(m, s.T - 1) = s.uav_end[m];
            for (int t = 1; t + 1 < s.T; ++t) {
                next(m, t) = Vec2(std::clamp(sol.x[wvar(m, t).first], p.x_min, p.x_max),
                                  std::clamp(sol.x[wvar(m, t).second], p.y_min, p.y_max));
            }
        }

        const double modeled = sol.objective + const_obj;
        if (!out.objective_trace.empty()) {
            const double prev = out.objective_trace.back();
            if (modeled > prev + 1e-8 * std::max(1.0, std::abs(prev)))
                throw InternalError("SCA objective increased beyond tolerance (" +
                                    std::to_string(prev) + " -> " + std::to_string(modeled) +
                                    ")");
        }
        out.objective_trace.push_back(modeled);
        cur = next;
        out.iterations = it + 1;
        if (out.objective_trace.size() >= 2) {
            const auto& tr = out.objective_trace;
            if (std::abs(tr[tr.size() - 2] - tr.back()) <= p.sca_tol) break;
        }
    }
    out.w = cur;
    return out;
}

}  // namespace uavmec

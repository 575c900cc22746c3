// Acceptance suite: one pass/fail line per criterion, exit code 0 only if
// every criterion holds. Run from the repository root (ctest does this).

#include "uavmec/cvar.hpp"
#include "uavmec/decomposition.hpp"
#include "uavmec/driver.hpp"
#include "uavmec/energy_model.hpp"
#include "uavmec/experiment.hpp"
#include "uavmec/link_model.hpp"

#include "support/random_scenario.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace uavmec;

namespace {

int g_failures = 0;

double now_s() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

void report(int id, const char* name, bool pass, const std::string& detail, double secs) {
    std::printf("[%s] criterion %d: %s (%s; %.1f s)\n", pass ? "PASS" : "FAIL", id, name,
                detail.c_str(), secs);
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), f, a, b, c);
    return buf;
}

struct DeskRuns {
    std::vector<OptimizationResult> robust, ideal;
    std::vector<Scenario> scenarios;
};

// --------------------------------------------------------------------------

void criterion_1_cvar_equivalence() {
    const double t0 = now_s();
    std::mt19937_64 eng(20260811);
    auto uni = [&eng](double lo, double hi) {
        return lo + (hi - lo) * static_cast<double>(eng() >> 11) * 0x1.0p-53;
    };
    const double alphas[] = {0.8, 0.9, 0.95, 0.99};
    double max_grid_delta = 0.0, max_conic_delta = 0.0;
    for (int k = 0; k < 100; ++k) {
        cvar::LinearLoss loss;
        loss.Theta = uni(-10.0, 10.0);
        loss.theta0 = uni(-10.0, 10.0);
        loss.mu = uni(-1.0, 1.0);
        loss.sigma = uni(0.0, 2.0);
        const double alpha = alphas[eng() % 4];
        const double closed = cvar::worst_case_cvar_closed_form(loss, alpha);
        max_grid_delta =
            std::max(max_grid_delta, std::abs(closed - cvar::two_point_grid_cvar(loss, alpha)));
        max_conic_delta =
            std::max(max_conic_delta, std::abs(closed - cvar::solve_block_header(loss, alpha)));
    }
    const double secs = now_s() - t0;
    const bool pass = max_grid_delta <= 1e-4 && max_conic_delta <= 1e-5 && secs < 10.0;
    report(1, "CVaR lemma equivalence", pass,
           fmt("conic vs closed form max |delta| = %.2e (gate 1e-5); closed form vs two-point "
               "grid oracle max %.2e (gate 1e-4)",
               max_conic_delta, max_grid_delta),
           secs);
}

void criterion_2_conservativeness(const DeskRuns& runs) {
    const double t0 = now_s();
    const Scenario& s = runs.scenarios[0];
    const OptimizationResult& r = runs.robust[0];
    const int n = 100000;
    const double bound =
        (1.0 - s.params.alpha) + 3.0 * std::sqrt(s.params.alpha * (1.0 - s.params.alpha) / n);
    bool pass = r.status == OptStatus::converged;
    double worst = 0.0;
    std::string worst_name = "-";
    for (const auto& [kind, name] :
         {std::pair{cvar::SamplerKind::gaussian, "gaussian"},
          std::pair{cvar::SamplerKind::uniform, "uniform"},
          std::pair{cvar::SamplerKind::two_point, "two-point"}}) {
        const ViolationReport rep = validate_robustness(s, r, kind, n, 12345);
        if (rep.max_violation > worst) {
            worst = rep.max_violation;
            worst_name = name;
        }
    }
    const double secs = now_s() - t0;
    pass = pass && worst <= bound && secs < 120.0;
    report(2, "worst-case CVaR conservativeness", pass,
           fmt("max empirical violation %.5f vs bound %.5f, n=1e5, ", worst, bound) +
               "worst sampler: " + worst_name,
           secs);
}

void criterion_3_headline(const DeskRuns& runs) {
    const double t0 = now_s();
    double sum_ratio = 0.0;
    int count = 0;
    bool all_solved = true;
    for (size_t k = 0; k < runs.robust.size(); ++k) {
        if (runs.robust[k].status == OptStatus::infeasible ||
            runs.ideal[k].status == OptStatus::infeasible) {
            all_solved = false;
            continue;
        }
        sum_ratio += runs.robust[k].breakdown.gamma / runs.ideal[k].breakdown.gamma;
        ++count;
    }
    const double mean = count > 0 ? sum_ratio / count : 0.0;
    const bool pass = all_solved && count >= 10 && mean >= 1.0 && mean <= 1.10;
    report(3, "headline robustness gap", pass,
           fmt("mean robust/ideal energy ratio %.4f over %g seeds (band [1.00, 1.10], "
               "target 1.02)",
               mean, static_cast<double>(count)),
           now_s() - t0);
}

void criterion_4_bcd_monotonicity(std::vector<OptimizationResult>& collected) {
    const double t0 = now_s();
    const int total = 20;
    int converged = 0, monotone_ok = 0;
    for (int k = 0; k < total; ++k) {
        const uint64_t seed = 4000 + static_cast<uint64_t>(k);
        const Scenario s = testsupport::random_scenario(seed, 4 + k % 5, 1 + k % 3, 6 + k % 5);
        const OptimizationResult r = optimize(s, 30);
        bool mono = r.status != OptStatus::infeasible;
        for (size_t j = 1; j < r.gamma_trace.size(); ++j)
            mono = mono && r.gamma_trace[j] <= r.gamma_trace[j - 1] + 1e-6;
        monotone_ok += mono ? 1 : 0;
        converged += r.status == OptStatus::converged ? 1 : 0;
        collected.push_back(r);
    }
    const double secs = now_s() - t0;
    const bool pass = monotone_ok == total && converged >= 18 && secs < 600.0;
    report(4, "BCD monotone convergence", pass,
           fmt("monotone gamma trace on %g/20 scenarios, converged within 30 rounds on %g/20",
               static_cast<double>(monotone_ok), static_cast<double>(converged)),
           secs);
}

void criterion_5_sca_dominance(const DeskRuns& desk,
                               const std::vector<OptimizationResult>& small_runs) {
    const double t0 = now_s();
    NetworkParams p;
    DetRng rng(5150);
    const Vec2 gu(500.0, 500.0);
    int dominance_violations = 0;
    double worst_tangency = 0.0;
    for (int k = 0; k < 100000; ++k) {
        const Vec2 we(rng.uniform(0.0, 1000.0), rng.uniform(0.0, 1000.0));
        const Vec2 wm(rng.uniform(0.0, 1000.0), rng.uniform(0.0, 1000.0));
        const double r_eav = rng.uniform(1e5, 3e7);
        const double rho_l = rng.uniform(0.05, 1.0) * rng.uniform(1e6, 1e7);
        const TaylorCoeffs tc = taylor_coeffs(we, gu, rho_l, r_eav, p);
        const double up = tc.value + tc.slope * ((wm - gu).squaredNorm() - tc.u_exp);
        const double d3 = std::sqrt((wm - gu).squaredNorm() + p.h_s * p.h_s);
        const double exact = rho_l / (uplink_rate(d3, p) - r_eav);
        if (up < exact - 1e-12) ++dominance_violations;
        const double at_exp = tc.value + tc.slope * (tc.u_exp - tc.u_exp);
        const double d3e = std::sqrt(tc.u_exp + p.h_s * p.h_s);
        const double exact_exp = rho_l / (uplink_rate(d3e, p) - r_eav);
        worst_tangency = std::max(worst_tangency, std::abs(at_exp - exact_exp));
    }
    // per-iteration non-increase of every recorded SCA trace
    int trace_count = 0;
    bool traces_ok = true;
    auto check_traces = [&](const std::vector<OptimizationResult>& runs) {
        for (const auto& r : runs)
            for (const auto& trace : r.sca_traces) {
                ++trace_count;
                for (size_t j = 1; j < trace.size(); ++j)
                    traces_ok = traces_ok &&
                                trace[j] <= trace[j - 1] + 1e-8 * std::max(1.0, std::abs(trace[j - 1]));
            }
    };
    check_traces(desk.robust);
    check_traces(desk.ideal);
    check_traces(small_runs);
    const bool pass = dominance_violations == 0 && worst_tangency <= 1e-9 && traces_ok;
    report(5, "SCA upper-bound dominance and monotonicity", pass,
           fmt("%g dominance violations in 1e5 samples (gate 0); tangency gap %.1e; ",
               static_cast<double>(dominance_violations), worst_tangency) +
               fmt("%g SCA traces non-increasing", static_cast<double>(trace_count)),
           now_s() - t0);
}

void criterion_6_assignment_exactness() {
    const double t0 = now_s();
    std::mt19937_64 eng(606060);
    auto uni = [&eng](double lo, double hi) {
        return lo + (hi - lo) * static_cast<double>(eng() >> 11) * 0x1.0p-53;
    };
    int mismatches = 0, feasible_cases = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int I = 2 + static_cast<int>(eng() % 5);
        const int M = 1 + static_cast<int>(eng() % 3);
        const int m_max = 1 + static_cast<int>(eng() % 3);
        AssignmentSlot slot;
        slot.cost = Grid2<double>(I, M, 0.0);
        slot.allowed = Grid2<uint8_t>(I, M, 0);
        for (int i = 0; i < I; ++i) {
            if (uni(0.0, 1.0) < 0.25) continue;
            slot.mandatory.push_back(i);
            for (int m = 0; m < M; ++m)
                if (uni(0.0, 1.0) < 0.85) {
                    slot.allowed(i, m) = 1;
                    slot.cost(i, m) = uni(0.01, 1.0);
                }
        }
        const SlotAssignment flow = flow_slot_assignment(slot, I, M, m_max);
        const SlotAssignment brute = enumerate_slot_assignment(slot, I, M, m_max);
        if (flow.feasible != brute.feasible) {
            ++mismatches;
            continue;
        }
        if (!flow.feasible) continue;
        ++feasible_cases;
        if (std::abs(flow.cost - brute.cost) > 1e-9 * (1.0 + std::abs(brute.cost)) ||
            flow.uav_of_gu != brute.uav_of_gu)
            ++mismatches;
    }
    const bool pass = mismatches == 0 && feasible_cases >= 40;
    report(6, "assignment exactness vs enumeration", pass,
           fmt("%g mismatches over 100 random slots (%g feasible)",
               static_cast<double>(mismatches), static_cast<double>(feasible_cases)),
           now_s() - t0);
}

void criterion_7_figure_trends(const std::string& base_text) {
    const double t0 = now_s();
    struct Axis {
        SweepAxis axis;
        std::vector<double> values;
        bool gamma_increasing;  // expected direction along the axis
        bool check_bits;
    };
    const std::vector<Axis> axes = {
        {SweepAxis::sigma_multiplier, {0.5, 1.0, 2.0, 4.0}, true, true},
        {SweepAxis::alpha, {0.80, 0.90, 0.95, 0.99}, true, true},
        {SweepAxis::p0, {1.0, 2.0, 4.0}, true, false},
        {SweepAxis::f_g, {0.5e8, 1e8, 2e8}, false, false},
    };
    bool pass = true;
    std::string detail;
    for (const uint64_t seed : {1ULL, 2ULL}) {
        for (const auto& ax : axes) {
            double prev_gamma = ax.gamma_increasing ? -1e300 : 1e300;
            double prev_bits = -1e300;
            for (const double v : ax.values) {
                const Scenario s = scenario_for_run(base_text, ax.axis, v, seed);
                const OptimizationResult r = optimize(s, 30);
                if (r.status == OptStatus::infeasible) {
                    pass = false;
                    detail += std::string(" infeasible@") + to_string(ax.axis);
                    continue;
                }
                const double g = r.breakdown.gamma;
                const double bits = offloaded_bits(s, r.decision);
                const bool ok = ax.gamma_increasing ? g >= prev_gamma - 1e-6
                                                    : g <= prev_gamma + 1e-6;
                if (!ok) {
                    pass = false;
                    detail += std::string(" gamma-trend-break@") + to_string(ax.axis) +
                              fmt("(seed %g, value %g)", static_cast<double>(seed), v);
                }
                if (ax.check_bits && bits < prev_bits - 1e-6) {
                    pass = false;
                    detail += std::string(" bits-trend-break@") + to_string(ax.axis) +
                              fmt("(seed %g, value %g)", static_cast<double>(seed), v);
                }
                prev_gamma = g;
                prev_bits = bits;
            }
        }
    }
    if (detail.empty()) detail = "gamma and offload trends hold on every axis, seeds {1,2}";
    report(7, "figure trend reproduction", pass, detail, now_s() - t0);
}

void criterion_8_solver_certificates() {
    const auto& ledger = conic::CertificateLedger::instance();
    const bool pass = ledger.count() > 0 && ledger.max_gap() <= 1e-7 &&
                      ledger.max_primal_residual() <= 1e-7 &&
                      ledger.max_dual_residual() <= 1e-7;
    report(8, "solver optimality certificates", pass,
           fmt("%g optimal solves; max relative gap %.2e", static_cast<double>(ledger.count()),
               ledger.max_gap()) +
               fmt("; max primal/dual residual %.2e / %.2e", ledger.max_primal_residual(),
                   ledger.max_dual_residual()),
           0.0);
}

void criterion_9_physics_spot_values() {
    const double t0 = now_s();
    NetworkParams p;
    const double p_hov = propulsion_power(0.0, p);
    const double p_fly = propulsion_power(20.0, p);
    const double rate = uplink_rate(100.0, p);
    const bool pass = std::abs(p_hov - 168.48) <= 1e-9 && std::abs(p_fly - 178.29) <= 0.05 &&
                      std::abs(rate - 1.5616e8) <= 0.001 * 1.5616e8;
    report(9, "physics spot values", pass,
           fmt("hover %.4f W (=168.48), cruise %.4f W (178.29 +/- 0.05), ", p_hov, p_fly) +
               fmt("uplink at 100 m %.6g bit/s (1.5616e8 +/- 0.1%%)", rate),
           now_s() - t0);
}

}  // namespace

int main() {
    conic::CertificateLedger::instance().enable(true);
    conic::CertificateLedger::instance().reset();

    const std::string base_text = slurp("data/table2.scenario");

    criterion_1_cvar_equivalence();

    // desk runs shared by criteria 2, 3 and 5
    DeskRuns desk;
    {
        for (uint64_t seed = 1; seed <= 10; ++seed) {
            desk.scenarios.push_back(
                scenario_for_run(base_text, SweepAxis::L_scale, 1.0, seed));
            desk.robust.push_back(optimize(desk.scenarios.back(), 30));
            desk.ideal.push_back(ideal_baseline(desk.scenarios.back(), 30));
        }
    }
    criterion_2_conservativeness(desk);
    criterion_3_headline(desk);

    std::vector<OptimizationResult> small_runs;
    criterion_4_bcd_monotonicity(small_runs);
    criterion_5_sca_dominance(desk, small_runs);
    criterion_6_assignment_exactness();
    criterion_7_figure_trends(base_text);
    criterion_8_solver_certificates();
    criterion_9_physics_spot_values();

    if (g_failures == 0) {
        std::printf("acceptance: all 9 criteria PASS\n");
        return 0;
    }
    std::printf("acceptance: %d criterion(s) FAILED\n", g_failures);
    return 1;
}

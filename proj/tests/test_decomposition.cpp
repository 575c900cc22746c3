#include "uavmec/decomposition.hpp"

#include "uavmec/cvar.hpp"
#include "uavmec/driver.hpp"
#include "uavmec/energy_model.hpp"
#include "support/random_scenario.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace uavmec;

namespace {

const conic::SolveOptions kOpts{1e-8, 100};

AssignmentSlot random_slot(std::mt19937_64& eng, int I, int M, double mandatory_p = 0.75) {
    auto uni = [&eng](double lo, double hi) {
        return lo + (hi - lo) * static_cast<double>(eng() >> 11) * 0x1.0p-53;
    };
    AssignmentSlot slot;
    slot.cost = Grid2<double>(I, M, 0.0);
    slot.allowed = Grid2<uint8_t>(I, M, 0);
    for (int i = 0; i < I; ++i) {
        if (uni(0.0, 1.0) > mandatory_p) continue;
        slot.mandatory.push_back(i);
        for (int m = 0; m < M; ++m)
            if (uni(0.0, 1.0) < 0.85) {
                slot.allowed(i, m) = 1;
                slot.cost(i, m) = uni(0.01, 1.0);
            }
    }
    return slot;
}

}  // namespace

TEST_CASE("assignment flow equals exhaustive enumeration on random slots") {
    std::mt19937_64 eng(2024);
    int checked = 0;
    for (int trial = 0; trial < 120; ++trial) {
        const int I = 2 + static_cast<int>(eng() % 5);  // up to 6
        const int M = 1 + static_cast<int>(eng() % 3);  // up to 3
        const int m_max = 1 + static_cast<int>(eng() % 3);
        const AssignmentSlot slot = random_slot(eng, I, M);
        const SlotAssignment flow = flow_slot_assignment(slot, I, M, m_max);
        const SlotAssignment brute = enumerate_slot_assignment(slot, I, M, m_max);
        REQUIRE(flow.feasible == brute.feasible);
        if (!flow.feasible) continue;
        ++checked;
        CHECK(flow.cost == doctest::Approx(brute.cost).epsilon(1e-9));
        CHECK(flow.uav_of_gu == brute.uav_of_gu);  // identical tie-breaking
    }
    CHECK(checked > 40);
}

TEST_CASE("capacity violations and mandatory logic") {
    Scenario s = testsupport::random_scenario(31, 2, 1, 3);
    s.params.m_max = 1;
    const Decision d = straight_line_init(s);
    Grid2<double> rho(2, 3, 0.0);
    Grid2<CvarVals> aux(2, 3);

    // both GUs must offload in slot 0: a single UAV with M_max = 1 cannot
    rho(0, 0) = 0.4;
    rho(1, 0) = 0.3;
    CHECK_THROWS_AS(solve_assignment(s, d.w, rho, aux, Robustness::ideal), InfeasibleError);

    // only GU 0 requires placement; GU 1 stays unassigned
    rho(1, 0) = 0.0;
    const AssignmentOutcome out = solve_assignment(s, d.w, rho, aux, Robustness::ideal);
    CHECK(out.lambda(0, 0, 0) == 1);
    CHECK(out.lambda(1, 0, 0) == 0);
}

TEST_CASE("offload ratios: no assignment forces rho to zero") {
    Scenario s = testsupport::random_scenario(5, 3, 2, 4);
    // every task locally feasible, so the zero assignment is admissible
    s.tasks.L = Grid2<double>(s.I, s.T, 2e6);
    s.tasks.c_bar = Grid2<double>(s.I, s.T, 40.0);
    s.tasks.mu = Grid2<double>(s.I, s.T, 0.0);
    s.tasks.sigma = Grid2<double>(s.I, s.T, 0.4);
    const Decision d = straight_line_init(s);
    const OffloadResult res =
        solve_offload_ratios(s, d.w, d.lambda, Robustness::robust, kOpts);
    for (int i = 0; i < s.I; ++i)
        for (int t = 0; t < s.T; ++t) CHECK(res.rho(i, t) == 0.0);
}

TEST_CASE("offload ratios: forced offload matches the closed-form window") {
    // one heavy task: local-only infeasible, edge feasible; the optimizer
    // should sit at the least ratio the local constraint tolerates
    Scenario s = testsupport::random_scenario(6, 1, 1, 1);
    s.tasks.L = Grid2<double>(1, 1, 8e6);
    s.tasks.c_bar = Grid2<double>(1, 1, 50.0);
    s.tasks.mu = Grid2<double>(1, 1, 0.0);
    s.tasks.sigma = Grid2<double>(1, 1, 0.5);
    s.uav_start = {s.gus[0]};
    s.uav_end = {s.gus[0]};
    validate_scenario(s);

    Decision d = straight_line_init(s);
    d.lambda(0, 0, 0) = 1;
    const OffloadResult res =
        solve_offload_ratios(s, d.w, d.lambda, Robustness::robust, kOpts);

    // independent bisection oracle: the least rho whose local block is
    // feasible per the closed-form worst-case CVaR
    double lo_bisect = 0.0, hi_bisect = 1.0;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo_bisect + hi_bisect);
        const double wc = cvar::worst_case_cvar_closed_form(
            cvar::loss_local(mid, s.task(0, 0), s.params), s.params.alpha);
        (wc <= 0.0 ? hi_bisect : lo_bisect) = mid;
    }
    REQUIRE(hi_bisect > 1e-3);
    CHECK(res.rho(0, 0) == doctest::Approx(hi_bisect).epsilon(1e-5));

    const double lo = rho_lower_bound(s.task(0, 0), s.params, Robustness::robust);
    REQUIRE(lo > 0.0);
    CHECK(res.rho(0, 0) == doctest::Approx(lo).epsilon(1e-6));

    // bisection-refined oracle on the objective: energy is increasing in rho
    // here, so the window's low end is optimal
    Decision at_oracle = d;
    at_oracle.rho(0, 0) = lo;
    Decision at_solver = d;
    at_solver.rho(0, 0) = res.rho(0, 0);
    CHECK(total_energy(s, at_solver).gamma ==
          doctest::Approx(total_energy(s, at_oracle).gamma).epsilon(1e-6));
}

TEST_CASE("offload ratios: degenerate uncertainty equals the deterministic solve") {
    Scenario s = testsupport::random_scenario(8, 3, 1, 3);
    for (auto& v : s.tasks.sigma) v = 0.0;
    for (auto& v : s.tasks.mu) v = 0.0;
    Decision d = straight_line_init(s);
    const AssignmentOutcome boot = solve_assignment(
        s, d.w, Grid2<double>(s.I, s.T, 0.0), Grid2<CvarVals>(s.I, s.T), Robustness::ideal);
    d.lambda = boot.lambda;
    // assign everyone somewhere to make the comparison non-trivial
    for (int i = 0; i < s.I; ++i)
        for (int t = 0; t < s.T; ++t) {
            bool any = false;
            for (int m = 0; m < s.M; ++m) any = any || d.lambda(i, m, t);
            if (!any) d.lambda(i, 0, t) = 1;
        }
    const OffloadResult robust =
        solve_offload_ratios(s, d.w, d.lambda, Robustness::robust, kOpts);
    const OffloadResult ideal =
        solve_offload_ratios(s, d.w, d.lambda, Robustness::ideal, kOpts);
    CHECK(robust.objective == doctest::Approx(ideal.objective).epsilon(1e-6));
}

TEST_CASE("offload infeasibility carries a per-task diagnosis") {
    Scenario s = testsupport::random_scenario(12, 1, 1, 1);
    s.tasks.L = Grid2<double>(1, 1, 1e7);
    s.tasks.c_bar = Grid2<double>(1, 1, 400.0);  // 4e9 cycles: hopeless everywhere
    s.tasks.mu = Grid2<double>(1, 1, 0.0);
    s.tasks.sigma = Grid2<double>(1, 1, 4.0);
    validate_scenario(s);
    const Decision d = straight_line_init(s);
    Assignment lambda(1, 1, 1, 1);  // assigned, still undeliverable
    CHECK_THROWS_WITH_AS(
        solve_offload_ratios(s, d.w, lambda, Robustness::robust, kOpts),
        doctest::Contains("neither local nor offloaded"), InfeasibleError);
}

TEST_CASE("taylor bound is tangent at the expansion point") {
    NetworkParams p;
    const Vec2 gu(300.0, 400.0), w(500.0, 350.0);
    const double r_eav = 2e6;
    const double direct = taylor_upper_bound(w, gu, w, true, 0.6, 4e6, r_eav, p);
    const double u = (w - gu).squaredNorm();
    const double d3 = std::sqrt(u + p.h_s * p.h_s);
    const double exact = 0.6 * 4e6 / (uplink_rate(d3, p) - r_eav);
    CHECK(direct == doctest::Approx(exact).epsilon(1e-9));
    CHECK(taylor_upper_bound(w, gu, w, false, 0.6, 4e6, r_eav, p) == 0.0);
    CHECK(taylor_upper_bound(w, gu, w, true, 0.0, 4e6, r_eav, p) == 0.0);
}

TEST_CASE("taylor slope matches a central finite difference") {
    NetworkParams p;
    const Vec2 gu(250.0, 250.0);
    DetRng rng(77);
    for (int k = 0; k < 50; ++k) {
        const Vec2 w(rng.uniform(0.0, 1000.0), rng.uniform(0.0, 1000.0));
        const double r_eav = rng.uniform(5e5, 2e7);
        const TaylorCoeffs tc = taylor_coeffs(w, gu, 3e6, r_eav, p);
        const double u = tc.u_exp, du = std::max(1.0, 1e-5 * u);
        auto latency_at = [&](double uu) {
            const double d3 = std::sqrt(uu + p.h_s * p.h_s);
            return 3e6 / (uplink_rate(d3, p) - r_eav);
        };
        const double fd = (latency_at(u + du) - latency_at(u - du)) / (2.0 * du);
        CHECK(tc.slope == doctest::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("taylor bound dominates the true latency on sampled geometry") {
    NetworkParams p;
    DetRng rng(99);
    const Vec2 gu(500.0, 500.0);
    int worst_violations = 0;
    for (int k = 0; k < 1000; ++k) {
        const Vec2 we(rng.uniform(0.0, 1000.0), rng.uniform(0.0, 1000.0));
        const Vec2 wm(rng.uniform(0.0, 1000.0), rng.uniform(0.0, 1000.0));
        const double r_eav = rng.uniform(1e5, 3e7);
        const double up = taylor_upper_bound(wm, gu, we, true, 0.5, 5e6, r_eav, p);
        const double d3 = std::sqrt((wm - gu).squaredNorm() + p.h_s * p.h_s);
        const double exact = 0.5 * 5e6 / (uplink_rate(d3, p) - r_eav);
        if (up < exact - 1e-12) ++worst_violations;
    }
    CHECK(worst_violations == 0);
}

TEST_CASE("taylor bound refuses a nonpositive-secrecy expansion") {
    NetworkParams p;
    const Vec2 gu(0.0, 0.0), w(900.0, 900.0);
    // absurd eavesdropper rate exceeding any uplink in the area
    CHECK_THROWS_AS(taylor_upper_bound(w, gu, w, true, 0.5, 1e6, 1e12, p), InfeasibleError);
}

TEST_CASE("trajectory SCA without assignments shrinks to the shortest path") {
    const Scenario s = testsupport::random_scenario(21, 3, 2, 8);
    const Decision d = straight_line_init(s);
    const ScaResult res = solve_trajectory_sca(s, d.lambda, d.rho, d.aux2, d.w,
                                               Robustness::robust, kOpts);
    for (int m = 0; m < s.M; ++m) {
        double len_opt = 0.0, len_init = 0.0;
        for (int t = 1; t < s.T; ++t) {
            len_opt += (res.w(m, t) - res.w(m, t - 1)).norm();
            len_init += (d.w(m, t) - d.w(m, t - 1)).norm();
        }
        CHECK(len_opt <= len_init + 1e-6);
    }
    // monotone trace
    for (size_t k = 1; k < res.objective_trace.size(); ++k)
        CHECK(res.objective_trace[k] <=
              res.objective_trace[k - 1] + 1e-8 * std::abs(res.objective_trace[k - 1]));
}

TEST_CASE("trajectory SCA bends towards the served GU and cuts transmit energy") {
    // single GU below the path midpoint, generous deadline
    Scenario s = testsupport::random_scenario(22, 1, 1, 11);
    s.gus[0] = Vec2(500.0, 300.0);
    s.uav_start = {Vec2(320.0, 500.0)};
    s.uav_end = {Vec2(680.0, 500.0)};
    s.tasks.L = Grid2<double>(1, 11, 6e6);
    s.tasks.c_bar = Grid2<double>(1, 11, 60.0);
    s.tasks.mu = Grid2<double>(1, 11, 0.0);
    s.tasks.sigma = Grid2<double>(1, 11, 0.6);
    validate_scenario(s);

    Decision d = straight_line_init(s);
    for (int t = 0; t < s.T; ++t) d.lambda(0, 0, t) = 1;
    const OffloadResult p5 = solve_offload_ratios(s, d.w, d.lambda, Robustness::robust, kOpts);
    d.rho = p5.rho;
    d.aux1 = p5.aux1;
    d.aux2 = p5.aux2;
    REQUIRE(d.rho(0, s.T / 2) > 0.3);  // heavy task: substantial forced offload

    const EnergyBreakdown before = total_energy(s, d);
    const ScaResult res = solve_trajectory_sca(s, d.lambda, d.rho, d.aux2, d.w,
                                               Robustness::robust, kOpts);
    Decision after = d;
    after.w = res.w;
    const EnergyBreakdown opt = total_energy(s, after);
    CHECK(opt.sum_tx() < before.sum_tx());
    // the mid-path point moved towards the GU's side
    CHECK(res.w(0, s.T / 2)[1] < 500.0 - 1.0);

    // a second pass from the optimum is a fixed point up to sca_tol
    const ScaResult fixed = solve_trajectory_sca(s, d.lambda, d.rho, d.aux2, res.w,
                                                 Robustness::robust, kOpts);
    CHECK(std::abs(fixed.objective_trace.front() - res.objective_trace.back()) <=
          s.params.sca_tol * (1.0 + std::abs(res.objective_trace.back())));
}

TEST_CASE("trajectory SCA with both endpoints pinned returns the pinned path") {
    // T = 2: every waypoint is an endpoint, the program is constants only
    Scenario s = testsupport::random_scenario(23, 2, 1, 2);
    s.tasks.L = Grid2<double>(2, 2, 2e6);
    s.tasks.c_bar = Grid2<double>(2, 2, 30.0);
    s.tasks.mu = Grid2<double>(2, 2, 0.0);
    s.tasks.sigma = Grid2<double>(2, 2, 0.3);
    validate_scenario(s);
    Decision d = straight_line_init(s);
    d.lambda(0, 0, 0) = 1;
    d.lambda(0, 0, 1) = 1;
    const OffloadResult p5 = solve_offload_ratios(s, d.w, d.lambda, Robustness::robust, kOpts);
    const ScaResult res = solve_trajectory_sca(s, d.lambda, p5.rho, p5.aux2, d.w,
                                               Robustness::robust, kOpts);
    for (int t = 0; t < 2; ++t) CHECK((res.w(0, t) - d.w(0, t)).norm() == doctest::Approx(0.0));
}

TEST_CASE("infeasible initial trajectory is reported at SCA iteration zero") {
    // zeroed auxiliaries shrink the deadline budget to tau; a heavy task at
    // tau = 0.5 s cannot meet it from any position
    Scenario s = testsupport::random_scenario(24, 1, 1, 3);
    s.params.tau = 0.5;
    s.params.zeta = 1e-2;
    s.tasks.L = Grid2<double>(1, 3, 1e7);
    s.tasks.c_bar = Grid2<double>(1, 3, 100.0);
    s.tasks.mu = Grid2<double>(1, 3, 0.0);
    s.tasks.sigma = Grid2<double>(1, 3, 1.0);
    Decision d = straight_line_init(s);
    for (int t = 0; t < 3; ++t) {
        d.lambda(0, 0, t) = 1;
        d.rho(0, t) = 1.0;
    }
    CHECK_THROWS_WITH_AS(solve_trajectory_sca(s, d.lambda, d.rho, d.aux2, d.w,
                                              Robustness::robust, kOpts),
                         doctest::Contains("initial trajectory"), InfeasibleError);
}

TEST_CASE("modeled SCA objective dominates the true energy at each iterate") {
    const Scenario s = testsupport::random_scenario(25, 4, 2, 6);
    Decision d = straight_line_init(s);
    const AssignmentOutcome boot = solve_assignment(
        s, d.w, Grid2<double>(s.I, s.T, 0.25), Grid2<CvarVals>(s.I, s.T), Robustness::ideal);
    d.lambda = boot.lambda;
    const OffloadResult p5 = solve_offload_ratios(s, d.w, d.lambda, Robustness::robust, kOpts);
    d.rho = p5.rho;
    d.aux1 = p5.aux1;
    d.aux2 = p5.aux2;
    const ScaResult res = solve_trajectory_sca(s, d.lambda, d.rho, d.aux2, d.w,
                                               Robustness::robust, kOpts);
    Decision after = d;
    after.w = res.w;
    CHECK(res.objective_trace.back() >=
          total_energy(s, after).gamma - 1e-8 * (1.0 + res.objective_trace.back()));
}

#include "uavmec/conic.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace uavmec;
using namespace uavmec::conic;

namespace {

void check_certificates(const ConicProgram& p, const ConicSolution& sol, double tol = 1e-7) {
    (void)p;
    CHECK(sol.primal_residual <= tol);
    CHECK(sol.dual_residual <= tol);
    CHECK(sol.gap <= tol);
}

}  // namespace

TEST_CASE("euclidean norm epigraph: min t s.t. (t,3,4) in SOC") {
    ConicProgram p;
    const int t = p.add_var();
    p.add_obj(t, 1.0);
    p.add_soc({AffineExpr::var(t), AffineExpr(3.0), AffineExpr(4.0)});
    const ConicSolution sol = solve(p);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK(sol.objective == doctest::Approx(5.0).epsilon(1e-7));
    check_certificates(p, sol);
}

TEST_CASE("degenerate LP face: assert the objective, not the split") {
    ConicProgram p;
    const int x1 = p.add_var(), x2 = p.add_var();
    p.add_obj(x1, 1.0);
    p.add_obj(x2, 1.0);
    p.add_eq(AffineExpr::var(x1) + AffineExpr::var(x2) + AffineExpr(-1.0));
    p.add_nonneg(AffineExpr::var(x1));
    p.add_nonneg(AffineExpr::var(x2));
    const ConicSolution sol = solve(p);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-8));
    check_certificates(p, sol);
}

TEST_CASE("box-constrained projection: min ||x - p|| with x in [0,1]^2") {
    // p = (2, 0.5): the projection is x* = (1, 0.5), distance 1
    ConicProgram prog;
    const int t = prog.add_var(), x = prog.add_var(), y = prog.add_var();
    prog.add_obj(t, 1.0);
    prog.add_soc({AffineExpr::var(t), AffineExpr::var(x) + AffineExpr(-2.0),
                  AffineExpr::var(y) + AffineExpr(-0.5)});
    prog.add_nonneg(AffineExpr::var(x));
    prog.add_nonneg(AffineExpr(1.0) - AffineExpr::var(x));
    prog.add_nonneg(AffineExpr::var(y));
    prog.add_nonneg(AffineExpr(1.0) - AffineExpr::var(y));
    const ConicSolution sol = solve(prog);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(sol.x[x] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(sol.x[y] == doctest::Approx(0.5).epsilon(1e-6));
    check_certificates(prog, sol);
}

TEST_CASE("primal infeasible LP produces a Farkas certificate") {
    ConicProgram p;
    const int x = p.add_var();
    p.add_nonneg(AffineExpr::var(x) + AffineExpr(-1.0));   // x >= 1
    p.add_nonneg(AffineExpr::var(x, -1.0));                // x <= 0
    const ConicSolution sol = solve(p);
    REQUIRE(sol.status == SolveStatus::primal_infeasible);
    // z in K*, G'z ~ 0, h'z < 0
    REQUIRE(sol.z.size() == 2);
    CHECK(sol.z[0] >= -1e-9);
    CHECK(sol.z[1] >= -1e-9);
    const double gtz = -1.0 * sol.z[0] + 1.0 * sol.z[1];  // G = -coef of e(x)
    const double htz = -1.0 * sol.z[0] + 0.0 * sol.z[1];  // h = constants of e(x)
    CHECK(std::abs(gtz) <= 1e-6 * std::max(1.0, sol.z.lpNorm<1>()));
    CHECK(htz < 0.0);
}

TEST_CASE("unbounded LP detected as dual infeasible") {
    ConicProgram p;
    const int x = p.add_var();
    p.add_obj(x, -1.0);
    p.add_nonneg(AffineExpr::var(x));  // x >= 0, min -x unbounded
    const ConicSolution sol = solve(p);
    REQUIRE(sol.status == SolveStatus::dual_infeasible);
    CHECK(sol.x[x] > 0.0);
}

TEST_CASE("presolve: contradictory pinned variable yields infeasibility") {
    ConicProgram p;
    const int x = p.add_var();
    p.add_eq(AffineExpr::var(x) + AffineExpr(-1.0));  // x = 1
    p.add_eq(AffineExpr::var(x) + AffineExpr(-2.0));  // x = 2
    const ConicSolution sol = solve(p);
    REQUIRE(sol.status == SolveStatus::primal_infeasible);
    // A'y = 0 and b'y < 0 for the reconstructed multipliers
    CHECK(std::abs(sol.y[0] + sol.y[1]) <= 1e-9);
    const double bty = 1.0 * sol.y[0] + 2.0 * sol.y[1];
    CHECK(bty < 0.0);
}

TEST_CASE("presolve: fixed variables and independent components") {
    // two disconnected blocks plus a pinned variable feeding one of them
    ConicProgram p;
    const int a = p.add_var(), b = p.add_var(), c = p.add_var();
    p.add_eq(AffineExpr::var(a) + AffineExpr(-3.0));  // a = 3
    p.add_obj(b, 1.0);
    p.add_nonneg(AffineExpr::var(b) + AffineExpr::var(a, -1.0));  // b >= a = 3
    p.add_obj(c, 1.0);
    p.add_nonneg(AffineExpr::var(c) + AffineExpr(-7.0));  // c >= 7
    const ConicSolution sol = solve(p);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK(sol.x[a] == doctest::Approx(3.0));
    CHECK(sol.x[b] == doctest::Approx(3.0).epsilon(1e-7));
    CHECK(sol.x[c] == doctest::Approx(7.0).epsilon(1e-7));
    CHECK(sol.objective == doctest::Approx(10.0).epsilon(1e-7));
    check_certificates(p, sol);
}

TEST_CASE("zero-cone segments behave as equalities") {
    ConicProgram p;
    const int x = p.add_var(), y = p.add_var();
    p.add_obj(y, 1.0);
    p.add_zero(AffineExpr::var(x) + AffineExpr(-2.0));           // x == 2
    p.add_nonneg(AffineExpr::var(y) + AffineExpr::var(x, -2.0));  // y >= 2x
    const ConicSolution sol = solve(p);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK(sol.x[x] == doctest::Approx(2.0));
    CHECK(sol.objective == doctest::Approx(4.0).epsilon(1e-7));
    check_certificates(p, sol);
}

TEST_CASE("random SOCPs with a constructed interior point") {
    std::mt19937_64 eng(7);
    auto uni = [&eng](double lo, double hi) {
        return lo + (hi - lo) * static_cast<double>(eng() >> 11) * 0x1.0p-53;
    };
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 2 + static_cast<int>(eng() % 6);
        const int l = 1 + static_cast<int>(eng() % 4);
        const int n_soc = 1 + static_cast<int>(eng() % 2);

        Eigen::VectorXd x0(n);
        for (int j = 0; j < n; ++j) x0[j] = uni(-2.0, 2.0);

        ConicProgram p;
        std::vector<int> vars = p.add_vars(n);
        for (int j = 0; j < n; ++j) p.add_obj(vars[j], uni(-1.0, 1.0));
        for (int j = 0; j < n; ++j) {
            // box containing x0 keeps every draw bounded
            p.add_nonneg(AffineExpr::var(vars[j]) + AffineExpr(100.0));
            p.add_nonneg(AffineExpr(100.0) - AffineExpr::var(vars[j]));
        }

        auto random_expr = [&](double offset) {
            AffineExpr e;
            double val = 0.0;
            for (int j = 0; j < n; ++j) {
                const double cj = uni(-1.0, 1.0);
                e.add(vars[j], cj);
                val += cj * x0[j];
            }
            e.constant = offset - val;  // e(x0) = offset
            return e;
        };

        for (int r = 0; r < l; ++r) p.add_nonneg(random_expr(uni(0.1, 2.0)));
        for (int k = 0; k < n_soc; ++k) {
            const int dim = 2 + static_cast<int>(eng() % 3);
            std::vector<AffineExpr> cone;
            double tail = 0.0;
            std::vector<double> offs;
            for (int r = 1; r < dim; ++r) {
                offs.push_back(uni(-1.0, 1.0));
                tail += offs.back() * offs.back();
            }
            cone.push_back(random_expr(std::sqrt(tail) + uni(0.1, 1.0)));
            for (int r = 1; r < dim; ++r) cone.push_back(random_expr(offs[r - 1]));
            p.add_soc(std::move(cone));
        }
        if (eng() % 2) {
            AffineExpr e = random_expr(0.0);  // consistent equality through x0
            p.add_eq(e);
        }

        const ConicSolution sol = solve(p);
        REQUIRE(sol.status == SolveStatus::optimal);
        double obj_at_x0 = 0.0;
        for (int j = 0; j < n; ++j) obj_at_x0 += p.objective_coeffs()[vars[j]] * x0[j];
        CHECK(sol.objective <= obj_at_x0 + 1e-6 * (1.0 + std::abs(obj_at_x0)));
        check_certificates(p, sol);
    }
}

TEST_CASE("equality-only programs resolve by row-space membership") {
    // objective in the row space: optimal on the affine set
    ConicProgram p;
    const int x1 = p.add_var(), x2 = p.add_var();
    p.add_obj(x1, 1.0);
    p.add_obj(x2, 1.0);
    p.add_eq(AffineExpr::var(x1) + AffineExpr::var(x2) + AffineExpr(-3.0));
    const ConicSolution sol = solve(p);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK(sol.objective == doctest::Approx(3.0).epsilon(1e-9));

    // objective with a null-space component: unbounded
    ConicProgram q;
    const int y1 = q.add_var(), y2 = q.add_var();
    q.add_obj(y1, 1.0);
    q.add_obj(y2, -1.0);
    q.add_eq(AffineExpr::var(y1) + AffineExpr::var(y2) + AffineExpr(-3.0));
    CHECK(solve(q).status == SolveStatus::dual_infeasible);
}

TEST_CASE("determinism: identical program, identical iterate count") {
    ConicProgram p;
    const int t = p.add_var(), x = p.add_var();
    p.add_obj(t, 1.0);
    p.add_soc({AffineExpr::var(t), AffineExpr::var(x) + AffineExpr(-1.0), AffineExpr(2.0)});
    p.add_nonneg(AffineExpr::var(x));
    const ConicSolution a = solve(p);
    const ConicSolution b = solve(p);
    CHECK(a.status == b.status);
    CHECK(a.iterations == b.iterations);
    CHECK(a.objective == b.objective);  // bitwise: no randomized state anywhere
}

TEST_CASE("malformed programs are rejected before solving") {
    ConicProgram p;
    (void)p.add_var();
    CHECK_THROWS_AS(p.add_soc({AffineExpr(1.0)}), ValidationError);
}

TEST_CASE("dump emits one row per line") {
    ConicProgram p;
    const int x = p.add_var();
    p.add_obj(x, 2.0);
    p.add_nonneg(AffineExpr::var(x) + AffineExpr(-1.0));
    std::ostringstream os;
    p.dump(os);
    const std::string text = os.str();
    CHECK(text.find("conicprogram vars 1") != std::string::npos);
    CHECK(text.find("cone nonneg 1") != std::string::npos);
    CHECK(text.find("obj 0 2") != std::string::npos);
}

#include "uavmec/cvar.hpp"

#include <algorithm>
#include <cmath>

namespace uavmec::cvar {

using conic::AffineExpr;
using conic::ConicProgram;

double cantelli_factor(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0,1)");
    return std::sqrt(alpha / (1.0 - alpha));
}

double worst_case_cvar_closed_form(const LinearLoss& loss, double alpha) {
    return loss.theta0 + loss.Theta * loss.mu +
           std::abs(loss.Theta) * loss.sigma * cantelli_factor(alpha);
}

namespace {

/// CVaR_alpha of a two-point loss distribution: value lo w.p. p_lo, hi w.p.
/// 1-p_lo. The Rockafellar infimum over beta is attained at a breakpoint.
double two_point_cvar(double lo, double hi, double p_lo, double alpha) {
    if (lo > hi) {
        std::swap(lo, hi);
        p_lo = 1.0 - p_lo;
    }
    const double inv = 1.0 / (1.0 - alpha);
    const double at_lo = lo + inv * (1.0 - p_lo) * (hi - lo);
    return std::min(at_lo, hi);
}

}  // namespace

double two_point_grid_cvar(const LinearLoss& loss, double alpha, int grid_points) {
    // two-point distribution with mass p at a, 1-p at b, matching (mu, sigma):
    //   a = mu - sigma*sqrt((1-p)/p),  b = mu + sigma*sqrt(p/(1-p))
    double best = -std::numeric_limits<double>::infinity();
    auto eval = [&](double p) {
        const double a = loss.mu - loss.sigma * std::sqrt((1.0 - p) / p);
        const double b = loss.mu + loss.sigma * std::sqrt(p / (1.0 - p));
        const double la = loss.Theta * a + loss.theta0;
        const double lb = loss.Theta * b + loss.theta0;
        best = std::max(best, two_point_cvar(la, lb, p, alpha));
    };
    const double p_min = 1e-6;
    for (int k = 0; k <= grid_points; ++k)
        eval(p_min + (1.0 - 2.0 * p_min) * k / grid_points);
    eval(alpha);        // the worst two-point law puts mass alpha below the tail
    eval(1.0 - alpha);
    return best;
}

LinearLoss loss_local(double rho, const TaskSample& task, const NetworkParams& p) {
    LinearLoss loss;
    loss.Theta = (1.0 - rho) * task.L / p.f_g;
    loss.theta0 = (1.0 - rho) * task.c_bar * task.L / p.f_g - p.tau;
    loss.mu = task.mu;
    loss.sigma = task.sigma;
    return loss;
}

LinearLoss loss_edge(const std::vector<uint8_t>& lambda_row, double rho, const TaskSample& task,
                     const std::vector<double>& r_sec, const NetworkParams& p) {
    LinearLoss loss;
    loss.theta0 = -p.tau;
    loss.mu = task.mu;
    loss.sigma = task.sigma;
    for (size_t m = 0; m < lambda_row.size(); ++m) {
        if (!lambda_row[m]) continue;
        loss.Theta += rho * task.L / p.f_u;
        loss.theta0 += rho * task.c_bar * task.L / p.f_u;
        if (rho > 0.0 && r_sec[m] <= 0.0)
            throw InfeasibleError("edge loss: assigned link has zero secrecy rate");
        if (rho > 0.0) loss.theta0 += rho * task.L / r_sec[m];
    }
    return loss;
}

CvarAuxVars emit_cvar_rows(ConicProgram& prog, const AffineExpr& theta0, const AffineExpr& Theta,
                           double mu, double sigma, double alpha) {
    const double inv = 1.0 / (1.0 - alpha);
    CvarAuxVars v;
    v.beta = prog.add_var();
    v.e = prog.add_var();
    v.q = prog.add_var();
    v.z = prog.add_var();
    v.s = prog.add_var();

    // header: -(beta + (e+s)/(1-alpha)) >= 0
    AffineExpr header;
    header.add(v.beta, -1.0).add(v.e, -inv).add(v.s, -inv);
    prog.add_nonneg(header);

    // e - theta0 + beta + q - Theta*mu - z >= margin
    AffineExpr lin;
    lin.add(v.e, 1.0).add(v.beta, 1.0).add(v.q, 1.0).add(v.z, -1.0);
    lin += -1.0 * theta0;
    lin += -mu * Theta;
    lin.constant -= kRowMargin;
    prog.add_nonneg(lin);

    prog.add_nonneg(AffineExpr::var(v.e));
    prog.add_nonneg(AffineExpr::var(v.z) + AffineExpr(-kZFloor));

    // || (q, Theta*sigma, z - s) || <= z + s
    std::vector<AffineExpr> cone(4);
    cone[0] = AffineExpr::var(v.z) + AffineExpr::var(v.s);
    cone[1] = AffineExpr::var(v.q);
    cone[2] = sigma * Theta;
    cone[3] = AffineExpr::var(v.z) - AffineExpr::var(v.s);
    prog.add_soc(std::move(cone));
    return v;
}

CvarBlock build_cvar_block(const LinearLoss& loss, double alpha) {
    CvarBlock block;
    block.vars = emit_cvar_rows(block.prog, AffineExpr(loss.theta0), AffineExpr(loss.Theta),
                                loss.mu, loss.sigma, alpha);
    // the header stays a row (feasibility <=> worst-case CVaR <= 0) and is
    // also the objective, so a feasible block solves to the CVaR value
    block.prog.add_obj(block.vars.beta, 1.0);
    block.prog.add_obj(block.vars.e, 1.0 / (1.0 - alpha));
    block.prog.add_obj(block.vars.s, 1.0 / (1.0 - alpha));
    return block;
}

double solve_block_header(const LinearLoss& loss, double alpha, const conic::SolveOptions& opts) {
    // same rows as the embedded block, but minimizing the header instead of
    // constraining it
    ConicProgram prog;
    const double inv = 1.0 / (1.0 - alpha);
    CvarAuxVars v;
    v.beta = prog.add_var();
    v.e = prog.add_var();
    v.q = prog.add_var();
    v.z = prog.add_var();
    v.s = prog.add_var();
    prog.add_obj(v.beta, 1.0);
    prog.add_obj(v.e, inv);
    prog.add_obj(v.s, inv);

    AffineExpr lin;
    lin.add(v.e, 1.0).add(v.beta, 1.0).add(v.q, 1.0).add(v.z, -1.0);
    lin.constant = -loss.theta0 - loss.Theta * loss.mu - kRowMargin;
    prog.add_nonneg(lin);
    prog.add_nonneg(AffineExpr::var(v.e));
    prog.add_nonneg(AffineExpr::var(v.z) + AffineExpr(-kZFloor));
    std::vector<AffineExpr> cone(4);
    cone[0] = AffineExpr::var(v.z) + AffineExpr::var(v.s);
    cone[1] = AffineExpr::var(v.q);
    cone[2] = AffineExpr(loss.Theta * loss.sigma);
    cone[3] = AffineExpr::var(v.z) - AffineExpr::var(v.s);
    prog.add_soc(std::move(cone));

    const conic::ConicSolution sol = conic::solve(prog, opts);
    if (sol.status != conic::SolveStatus::optimal)
        throw InternalError(std::string("cvar block solve did not reach optimality: ") +
                            conic::to_string(sol.status));
    return sol.objective;
}

double sample_error(SamplerKind kind, double mu, double sigma, DetRng& rng) {
    switch (kind) {
        case SamplerKind::gaussian:
            return mu + sigma * rng.normal();
        case SamplerKind::uniform: {
            const double half = std::sqrt(3.0) * sigma;
            return mu + rng.uniform(-half, half);
        }
        case SamplerKind::two_point:
            return rng.unit() < 0.5 ? mu - sigma : mu + sigma;
    }
    return mu;
}

double monte_carlo_violation(const LinearLoss& loss, SamplerKind kind, int n, uint64_t seed) {
    if (n < 10000) throw ValidationError("monte_carlo_violation needs n >= 10^4");
    DetRng rng(seed);
    int hits = 0;
    for (int k = 0; k < n; ++k) {
        const double xi = sample_error(kind, loss.mu, loss.sigma, rng);
        if (loss.Theta * xi + loss.theta0 > 0.0) ++hits;
    }
    return static_cast<double>(hits) / n;
}

}  // namespace uavmec::cvar

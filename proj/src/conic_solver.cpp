#include "uavmec/conic.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>

namespace uavmec::conic {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// iteration tracing for debugging, enabled via UAVMEC_SOLVER_TRACE
bool trace_enabled() {
    static const bool on = std::getenv("UAVMEC_SOLVER_TRACE") != nullptr;
    return on;
}

// ---------------------------------------------------------------------------
// Dense core: min c'x  s.t.  A x = b,  G x + s = h,
// s in (R_+^nn) x SOC(q_0) x SOC(q_1) x ...
// Primal-dual predictor-corrector on the homogeneous self-dual embedding
// with Nesterov-Todd scaling.
// ---------------------------------------------------------------------------

struct DenseProblem {
    Eigen::VectorXd c;
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::MatrixXd G;
    Eigen::VectorXd h;
    int nn = 0;            // leading nonnegative rows
    std::vector<int> soc;  // SOC dims after the nonnegative block
};

struct DenseResult {
    SolveStatus status = SolveStatus::max_iter;
    Eigen::VectorXd x, y, z, s;
    int iters = 0;
};

struct SocScaling {
    double eta = 1.0;
    Eigen::VectorXd wbar;  // NT point, det(wbar) = 1
    Eigen::VectorXd v;     // Jordan square root of wbar
};

struct Scaling {
    Eigen::VectorXd w_nn;  // sqrt(s_i/z_i)
    std::vector<SocScaling> socs;
};

Eigen::VectorXd jmul(const Eigen::VectorXd& u) {  // J u = (u0, -u1)
    Eigen::VectorXd r = -u;
    r[0] = u[0];
    return r;
}

// (2 p p' - J) r, the shared shape of all SOC scaling applications
Eigen::VectorXd reflect_apply(const Eigen::VectorXd& p, const Eigen::VectorXd& r) {
    return 2.0 * p * p.dot(r) - jmul(r);
}

class SegmentOps {
public:
    SegmentOps(int nn, const std::vector<int>& soc) : nn_(nn), soc_(soc) {
        offsets_.resize(soc.size());
        int at = nn;
        for (size_t k = 0; k < soc.size(); ++k) {
            offsets_[k] = at;
            at += soc[k];
        }
        m_ = at;
    }

    int rows() const { return m_; }
    int degree() const { return nn_ + static_cast<int>(soc_.size()); }

    Eigen::VectorXd identity() const {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(m_);
        e.head(nn_).setOnes();
        for (size_t k = 0; k < soc_.size(); ++k) e[offsets_[k]] = 1.0;
        return e;
    }

    double min_eig(const Eigen::VectorXd& u) const {
        double m = kInf;
        for (int i = 0; i < nn_; ++i) m = std::min(m, u[i]);
        for (size_t k = 0; k < soc_.size(); ++k) {
            auto blk = u.segment(offsets_[k], soc_[k]);
            m = std::min(m, blk[0] - blk.tail(soc_[k] - 1).norm());
        }
        return m;
    }

    Scaling nt_scaling(const Eigen::VectorXd& s, const Eigen::VectorXd& z) const {
        Scaling sc;
        sc.w_nn = (s.head(nn_).array() / z.head(nn_).array()).sqrt();
        sc.socs.resize(soc_.size());
        for (size_t k = 0; k < soc_.size(); ++k) {
            const int d = soc_[k];
            Eigen::VectorXd sb = s.segment(offsets_[k], d);
            Eigen::VectorXd zb = z.segment(offsets_[k], d);
            const double sn =
                std::sqrt(std::max(sb[0] * sb[0] - sb.tail(d - 1).squaredNorm(), 1e-300));
            const double zn =
                std::sqrt(std::max(zb[0] * zb[0] - zb.tail(d - 1).squaredNorm(), 1e-300));
            sb /= sn;
            zb /= zn;
            const double gamma = std::sqrt((1.0 + sb.dot(zb)) / 2.0);
            SocScaling& q = sc.socs[k];
            q.eta = std::sqrt(sn / zn);
            q.wbar = (sb + jmul(zb)) / (2.0 * gamma);
            q.v.resize(d);
            q.v[0] = std::sqrt((q.wbar[0] + 1.0) / 2.0);
            q.v.tail(d - 1) = q.wbar.tail(d - 1) / (2.0 * q.v[0]);
        }
        return sc;
    }

    // W u with W = diag(w) on the nonneg block, eta (2 v v' - J) per SOC
    Eigen::VectorXd apply_w(const Scaling& sc, const Eigen::VectorXd& u) const {
        Eigen::VectorXd r(m_);
        r.head(nn_) = sc.w_nn.array() * u.head(nn_).array();
        for (size_t k = 0; k < soc_.size(); ++k)
            r.segment(offsets_[k], soc_[k]) =
                sc.socs[k].eta * reflect_apply(sc.socs[k].v, u.segment(offsets_[k], soc_[k]));
        return r;
    }

    // W^{-1} u; the inverse of (2vv'-J) is (2(Jv)(Jv)'-J)
    Eigen::VectorXd apply_winv(const Scaling& sc, const Eigen::VectorXd& u) const {
        Eigen::VectorXd r(m_);
        r.head(nn_) = u.head(nn_).array() / sc.w_nn.array();
        for (size_t k = 0; k < soc_.size(); ++k)
            r.segment(offsets_[k], soc_[k]) =
                reflect_apply(jmul(sc.socs[k].v), u.segment(offsets_[k], soc_[k])) / sc.socs[k].eta;
        return r;
    }

    // W^2 u = eta^2 (2 wbar wbar' - J) u
    Eigen::VectorXd apply_w2(const Scaling& sc, const Eigen::VectorXd& u) const {
        Eigen::VectorXd r(m_);
        r.head(nn_) = sc.w_nn.array().square() * u.head(nn_).array();
        for (size_t k = 0; k < soc_.size(); ++k)
            r.segment(offsets_[k], soc_[k]) =
                sc.socs[k].eta * sc.socs[k].eta *
                reflect_apply(sc.socs[k].wbar, u.segment(offsets_[k], soc_[k]));
        return r;
    }

    Eigen::VectorXd apply_w2inv(const Scaling& sc, const Eigen::VectorXd& u) const {
        Eigen::VectorXd r(m_);
        r.head(nn_) = u.head(nn_).array() / sc.w_nn.array().square();
        for (size_t k = 0; k < soc_.size(); ++k)
            r.segment(offsets_[k], soc_[k]) =
                reflect_apply(jmul(sc.socs[k].wbar), u.segment(offsets_[k], soc_[k])) /
                (sc.socs[k].eta * sc.socs[k].eta);
        return r;
    }

    Eigen::VectorXd jprod(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
        Eigen::VectorXd r(m_);
        r.head(nn_) = u.head(nn_).array() * v.head(nn_).array();
        for (size_t k = 0; k < soc_.size(); ++k) {
            const int d = soc_[k], o = offsets_[k];
            auto ub = u.segment(o, d);
            auto vb = v.segment(o, d);
            r[o] = ub.dot(vb);
            r.segment(o + 1, d - 1) = ub[0] * vb.tail(d - 1) + vb[0] * ub.tail(d - 1);
        }
        return r;
    }

    // Jordan division lambda \ r  (solve lambda o u = r)
    Eigen::VectorXd jdiv(const Eigen::VectorXd& lambda, const Eigen::VectorXd& r) const {
        Eigen::VectorXd u(m_);
        u.head(nn_) = r.head(nn_).array() / lambda.head(nn_).array();
        for (size_t k = 0; k < soc_.size(); ++k) {
            const int d = soc_[k], o = offsets_[k];
            auto lb = lambda.segment(o, d);
            auto rb = r.segment(o, d);
            const double det = lb[0] * lb[0] - lb.tail(d - 1).squaredNorm();
            const double u0 = (lb[0] * rb[0] - lb.tail(d - 1).dot(rb.tail(d - 1))) / det;
            u[o] = u0;
            u.segment(o + 1, d - 1) = (rb.tail(d - 1) - u0 * lb.tail(d - 1)) / lb[0];
        }
        return u;
    }

    // largest step t with u + t du staying in the cone (u strictly interior)
    double max_step(const Eigen::VectorXd& u, const Eigen::VectorXd& du) const {
        double t = kInf;
        for (int i = 0; i < nn_; ++i)
            if (du[i] < 0.0) t = std::min(t, -u[i] / du[i]);
        for (size_t k = 0; k < soc_.size(); ++k) {
            const int d = soc_[k], o = offsets_[k];
            auto ub = u.segment(o, d);
            auto db = du.segment(o, d);
            const double a = db[0] * db[0] - db.tail(d - 1).squaredNorm();
            const double b = 2.0 * (ub[0] * db[0] - ub.tail(d - 1).dot(db.tail(d - 1)));
            const double c = std::max(ub[0] * ub[0] - ub.tail(d - 1).squaredNorm(), 0.0);
            double root = kInf;
            if (std::abs(a) < 1e-300) {
                if (b < 0.0) root = -c / b;
            } else {
                const double disc = b * b - 4.0 * a * c;
                if (disc >= 0.0) {
                    const double sq = std::sqrt(disc);
                    const double q = -0.5 * (b + (b >= 0.0 ? sq : -sq));
                    double r1 = q / a;
                    double r2 = (q != 0.0) ? c / q : kInf;
                    if (r1 > r2) std::swap(r1, r2);
                    if (r1 > 0.0)
                        root = r1;
                    else if (r2 > 0.0)
                        root = r2;
                }
            }
            t = std::min(t, root);
        }
        return t;
    }

private:
    int nn_ = 0, m_ = 0;
    std::vector<int> soc_;
    std::vector<int> offsets_;
};

// Factorization of the scaled KKT system
//   [ 0   A'   G' ] [ux]   [bx]
//   [ A   0    0  ] [uy] = [by]
//   [ G   0  -W^2 ] [uz]   [bz]
// via H = G' W^{-2} G elimination with static regularization and one
// refinement pass.
class KktSolver {
public:
    KktSolver(const DenseProblem& pb, const SegmentOps& ops) : pb_(pb), ops_(ops) {}

    bool factor(const Scaling& sc) {
        sc_ = &sc;
        const int n = static_cast<int>(pb_.c.size());
        Eigen::MatrixXd GW(pb_.G.rows(), n);
        for (int j = 0; j < n; ++j) GW.col(j) = ops_.apply_w2inv(sc, pb_.G.col(j));
        Eigen::MatrixXd H = pb_.G.transpose() * GW;
        // static regularization; the data is equilibrated to unit scale, and
        // tying delta to H's diagonal would blow it up as the complementarity
        // vanishes (the scaled diagonal grows like 1/mu)
        delta_ = 1e-10;
        for (int attempt = 0; attempt < 4; ++attempt) {
            Eigen::MatrixXd Hr = H;
            Hr.diagonal().array() += delta_;
            hllt_.compute(Hr);
            if (hllt_.info() == Eigen::Success) {
                if (pb_.A.rows() == 0) return true;
                Eigen::MatrixXd S = pb_.A * hllt_.solve(Eigen::MatrixXd(pb_.A.transpose()));
                S.diagonal().array() += delta_;
                sllt_.compute(S);
                if (sllt_.info() == Eigen::Success) return true;
            }
            delta_ *= 1e3;
        }
        if (trace_enabled())
            std::fprintf(stderr, "[kkt] factorization failed (n=%d, delta=%g)\n",
                         static_cast<int>(pb_.c.size()), delta_);
        return false;
    }

    void solve(const Eigen::VectorXd& bx, const Eigen::VectorXd& by, const Eigen::VectorXd& bz,
               Eigen::VectorXd& ux, Eigen::VectorXd& uy, Eigen::VectorXd& uz) const {
        solve_once(bx, by, bz, ux, uy, uz);
        for (int pass = 0; pass < 2; ++pass) {  // soak up the regularization
            Eigen::VectorXd r1 = bx - pb_.G.transpose() * uz;
            if (pb_.A.rows() > 0) r1 -= pb_.A.transpose() * uy;
            Eigen::VectorXd r2 = pb_.A.rows() > 0 ? Eigen::VectorXd(by - pb_.A * ux) : by;
            Eigen::VectorXd r3 = bz - (pb_.G * ux - ops_.apply_w2(*sc_, uz));
            Eigen::VectorXd cx, cy, cz;
            solve_once(r1, r2, r3, cx, cy, cz);
            ux += cx;
            if (uy.size() > 0) uy += cy;
            uz += cz;
        }
    }

private:
    void solve_once(const Eigen::VectorXd& bx, const Eigen::VectorXd& by,
                    const Eigen::VectorXd& bz, Eigen::VectorXd& ux, Eigen::VectorXd& uy,
                    Eigen::VectorXd& uz) const {
        Eigen::VectorXd t = bx + pb_.G.transpose() * ops_.apply_w2inv(*sc_, bz);
        if (pb_.A.rows() > 0) {
            uy = sllt_.solve(pb_.A * hllt_.solve(t) - by);
            ux = hllt_.solve(t - pb_.A.transpose() * uy);
        } else {
            uy.resize(0);
            ux = hllt_.solve(t);
        }
        uz = ops_.apply_w2inv(*sc_, pb_.G * ux - bz);
    }

    const DenseProblem& pb_;
    const SegmentOps& ops_;
    const Scaling* sc_ = nullptr;
    Eigen::LLT<Eigen::MatrixXd> hllt_;
    Eigen::LLT<Eigen::MatrixXd> sllt_;
    double delta_ = 0.0;
};

Eigen::VectorXd into_interior(const SegmentOps& ops, Eigen::VectorXd u) {
    const double me = ops.min_eig(u);
    if (me <= 1e-8) u += (1.0 - me) * ops.identity();
    return u;
}

DenseResult solve_dense(const DenseProblem& pb, const SolveOptions& opts) {
    const int n = static_cast<int>(pb.c.size());
    const int p = static_cast<int>(pb.A.rows());
    SegmentOps ops(pb.nn, pb.soc);
    const int m = ops.rows();

    DenseResult res;
    if (m == 0) {
        // equality-only program: optimal iff c lies in the row space of A,
        // otherwise the null-space component is an unbounded ray
        res.z.resize(0);
        res.s.resize(0);
        if (p == 0) {
            res.x = Eigen::VectorXd::Zero(n);
            res.y.resize(0);
            res.status = pb.c.isZero(0.0) ? SolveStatus::optimal : SolveStatus::dual_infeasible;
            if (res.status == SolveStatus::dual_infeasible) res.x = -pb.c;
            return res;
        }
        const auto qr = Eigen::MatrixXd(pb.A.transpose()).colPivHouseholderQr();
        res.y = qr.solve(-pb.c);  // least-squares multipliers
        const Eigen::VectorXd ray = -(pb.c + pb.A.transpose() * res.y);
        if (ray.norm() > 1e-10 * (1.0 + pb.c.norm())) {
            res.x = ray;  // A ray = 0 and c'ray < 0
            res.status = SolveStatus::dual_infeasible;
            return res;
        }
        res.x = pb.A.colPivHouseholderQr().solve(pb.b);
        const Eigen::VectorXd resid = pb.A * res.x - pb.b;
        if (resid.norm() <= 1e-8 * (1.0 + pb.b.norm())) {
            res.status = SolveStatus::optimal;
        } else {
            // least-squares residual is a Farkas direction: A'r = 0 by the
            // normal equations and b'r = -||r||^2 < 0
            res.status = SolveStatus::primal_infeasible;
            res.y = resid;
            res.x.setZero();
        }
        return res;
    }

    KktSolver kkt(pb, ops);

    Eigen::VectorXd ones = Eigen::VectorXd::Ones(m);
    Scaling sc = ops.nt_scaling(ones, ones);
    res.x = Eigen::VectorXd::Zero(n);
    res.y = Eigen::VectorXd::Zero(p);
    res.z = ones;
    res.s = ones;
    if (!kkt.factor(sc)) return res;

    Eigen::VectorXd x, y0, zt, xd, yd, zd;
    kkt.solve(Eigen::VectorXd::Zero(n), pb.b, pb.h, x, y0, zt);
    Eigen::VectorXd s = into_interior(ops, -zt);
    kkt.solve(-pb.c, Eigen::VectorXd::Zero(p), Eigen::VectorXd::Zero(m), xd, yd, zd);
    Eigen::VectorXd y = yd;
    Eigen::VectorXd z = into_interior(ops, zd);
    double tau = 1.0, kap = 1.0;

    const double tol = opts.tol;
    const double tol_inacc = 10.0 * tol;  // graceful exit when mu outruns the residuals
    const double feastol = std::max(tol, 1e-9) * 10.0;
    const double degree = ops.degree() + 1;
    const double bnorm = pb.b.norm(), hnorm = pb.h.norm(), cnorm = pb.c.norm();

    double best_merit = kInf;
    DenseResult best = res;

    int stall = 0;
    for (int iter = 0; iter <= opts.max_iter; ++iter) {
        Eigen::VectorXd atygz = pb.G.transpose() * z;
        if (p > 0) atygz += pb.A.transpose() * y;
        Eigen::VectorXd rx = atygz + pb.c * tau;
        Eigen::VectorXd ry = p > 0 ? Eigen::VectorXd(pb.A * x - pb.b * tau) : Eigen::VectorXd();
        Eigen::VectorXd rz = pb.G * x + s - pb.h * tau;
        const double cx = pb.c.dot(x);
        const double by = p > 0 ? pb.b.dot(y) : 0.0;
        const double hz = pb.h.dot(z);
        const double rt = kap + cx + by + hz;

        const double gap = s.dot(z);
        const double mu = (gap + tau * kap) / degree;
        const double pcost = cx / tau;
        const double dcost = -(by + hz) / tau;
        const double relgap =
            (gap / (tau * tau)) / std::max({1.0, std::abs(pcost), std::abs(dcost)});
        const double pres =
            std::max(p > 0 ? ry.norm() / (1.0 + bnorm) : 0.0, rz.norm() / (1.0 + hnorm)) / tau;
        const double dres = rx.norm() / (1.0 + cnorm) / tau;

        if (trace_enabled())
            std::fprintf(stderr,
                         "[ipm n=%d m=%d] it=%2d pres=%9.2e dres=%9.2e relgap=%9.2e "
                         "tau=%9.2e kap=%9.2e mu=%9.2e\n",
                         n, m, iter, pres, dres, relgap, tau, kap, mu);

        if (!std::isfinite(mu) || !std::isfinite(pres) || !std::isfinite(dres)) break;
        // tau and kappa both collapsing means the embedding found no direction
        // worth certifying; stop on the best iterate instead of dividing by it
        if (tau < 1e-11 && kap < 1e-11) break;

        const double merit = std::max({pres, dres, relgap});
        if (merit < best_merit) {
            best_merit = merit;
            best.x = x / tau;
            best.y = y / tau;
            best.z = z / tau;
            best.s = s / tau;
            best.iters = iter;
        }

        if (pres <= tol && dres <= tol && relgap <= tol) {
            res.status = SolveStatus::optimal;
            res.x = x / tau;
            res.y = y / tau;
            res.z = z / tau;
            res.s = s / tau;
            res.iters = iter;
            return res;
        }
        const double ncert = std::max(1.0, y.norm() + z.norm());
        if ((by + hz) / ncert < -1e-10) {
            const double pinfres = atygz.norm() / ncert;
            if (pinfres <= feastol && tau < kap) {
                res.status = SolveStatus::primal_infeasible;
                const double scale = -(by + hz);
                res.x = Eigen::VectorXd::Zero(n);
                res.y = y / scale;
                res.z = z / scale;
                res.s = Eigen::VectorXd::Zero(m);
                res.iters = iter;
                return res;
            }
        }
        const double nray = std::max(1.0, x.norm());
        if (cx / nray < -1e-10) {
            const double hresy = p > 0 ? (pb.A * x).norm() : 0.0;
            const double hresz = (pb.G * x + s).norm();
            const double dinfres =
                std::max(hresy / nray, hresz / std::max(1.0, x.norm() + s.norm()));
            if (dinfres <= feastol && tau < kap) {
                res.status = SolveStatus::dual_infeasible;
                res.x = x / (-cx);
                res.y = Eigen::VectorXd::Zero(p);
                res.z = Eigen::VectorXd::Zero(m);
                res.s = s / (-cx);
                res.iters = iter;
                return res;
            }
        }
        if (iter == opts.max_iter || stall >= 4) break;
        if (mu < 1e-13 && best_merit <= tol_inacc) break;  // centrality exhausted
        if (mu < 1e-16 * degree) break;  // products below double precision

        sc = ops.nt_scaling(s, z);
        Eigen::VectorXd lambda = ops.apply_w(sc, z);
        if (!kkt.factor(sc)) break;

        Eigen::VectorXd vx, vy, vz;
        kkt.solve(-pb.c, pb.b, pb.h, vx, vy, vz);
        const double denom =
            pb.c.dot(vx) + (p > 0 ? pb.b.dot(vy) : 0.0) + pb.h.dot(vz) - kap / tau;

        auto direction = [&](const Eigen::VectorXd& bxr, const Eigen::VectorXd& byr,
                             const Eigen::VectorXd& bzr, double btau, double bkap,
                             const Eigen::VectorXd& bs_lambda, Eigen::VectorXd& dx,
                             Eigen::VectorXd& dy, Eigen::VectorXd& dz, Eigen::VectorXd& ds,
                             double& dtau, double& dkap) {
            Eigen::VectorXd wr = ops.apply_w(sc, ops.jdiv(lambda, bs_lambda));
            Eigen::VectorXd ux, uy, uz;
            kkt.solve(bxr, byr, bzr - wr, ux, uy, uz);
            dtau = (btau - bkap / tau -
                    (pb.c.dot(ux) + (p > 0 ? pb.b.dot(uy) : 0.0) + pb.h.dot(uz))) /
                   denom;
            dx = ux + dtau * vx;
            dy = p > 0 ? Eigen::VectorXd(uy + dtau * vy) : Eigen::VectorXd();
            dz = uz + dtau * vz;
            ds = wr - ops.apply_w2(sc, dz);
            dkap = (bkap - kap * dtau) / tau;
        };

        auto step_bound = [&](const Eigen::VectorXd& ds, const Eigen::VectorXd& dz, double dtau,
                              double dkap) {
            double t = std::min(ops.max_step(s, ds), ops.max_step(z, dz));
            if (dtau < 0.0) t = std::min(t, -tau / dtau);
            if (dkap < 0.0) t = std::min(t, -kap / dkap);
            return t;
        };

        // predictor
        Eigen::VectorXd dxa, dya, dza, dsa;
        double dtaua, dkapa;
        direction(-rx, p > 0 ? Eigen::VectorXd(-ry) : Eigen::VectorXd(), -rz, -rt, -tau * kap,
                  -ops.jprod(lambda, lambda), dxa, dya, dza, dsa, dtaua, dkapa);
        const double alpha_aff = std::min(1.0, step_bound(dsa, dza, dtaua, dkapa));
        const double sigma = std::clamp(std::pow(1.0 - alpha_aff, 3.0), 0.0, 1.0);

        // combined corrector step
        Eigen::VectorXd bs = -ops.jprod(lambda, lambda) -
                             ops.jprod(ops.apply_winv(sc, dsa), ops.apply_w(sc, dza)) +
                             sigma * mu * ops.identity();
        Eigen::VectorXd dx, dy, dz, ds;
        double dtau, dkap;
        direction(-(1.0 - sigma) * rx,
                  p > 0 ? Eigen::VectorXd(-(1.0 - sigma) * ry) : Eigen::VectorXd(),
                  -(1.0 - sigma) * rz, -(1.0 - sigma) * rt,
                  -tau * kap - dtaua * dkapa + sigma * mu, bs, dx, dy, dz, ds, dtau, dkap);

        const double alpha = std::min(1.0, 0.99 * step_bound(ds, dz, dtau, dkap));
        if (trace_enabled())
            std::fprintf(stderr, "        alpha_aff=%9.2e sigma=%9.2e alpha=%9.2e dtau=%9.2e\n",
                         alpha_aff, sigma, alpha, dtau);
        stall = alpha < 1e-8 ? stall + 1 : 0;
        x += alpha * dx;
        if (p > 0) y += alpha * dy;
        z += alpha * dz;
        s += alpha * ds;
        tau += alpha * dtau;
        kap += alpha * dkap;
    }

    res = best;
    res.status = best_merit <= tol_inacc ? SolveStatus::optimal : SolveStatus::max_iter;
    if (res.status == SolveStatus::max_iter && trace_enabled()) {
        std::fprintf(stderr, "[ipm dump] c:");
        for (int j = 0; j < n; ++j) std::fprintf(stderr, " %.17g", pb.c[j]);
        std::fprintf(stderr, "\n[ipm dump] G|h (nn=%d):\n", pb.nn);
        for (int r = 0; r < m; ++r) {
            for (int j = 0; j < n; ++j) std::fprintf(stderr, " %.17g", pb.G(r, j));
            std::fprintf(stderr, " | %.17g\n", pb.h[r]);
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Presolve
// ---------------------------------------------------------------------------

struct WorkRow {
    std::vector<std::pair<int, double>> terms;
    double constant = 0.0;
    int orig_index = -1;  // equality index, or slack-row index for cone rows
    bool from_zero_segment = false;
    double scale = 1.0;
};

struct WorkSegment {
    ConeKind kind;
    std::vector<WorkRow> rows;
};

struct Elimination {
    int var;
    int def_index;       // original row index of the defining equality
    bool def_zero_seg;   // defining row came in as a zero-cone slack row
    double value;
};

enum class Contradiction { none, eq_row, nonneg_row, soc_segment };

struct PresolveState {
    std::vector<WorkRow> eq;
    std::vector<WorkSegment> segs;
    std::vector<std::optional<double>> fixed;
    std::vector<Elimination> elims;
    std::vector<std::pair<int, double>> dropped_slack;  // orig slack idx -> slack value
    std::vector<double> col_scale;                      // x = col_scale .* x_scaled
    double obj_scale = 1.0;                             // c_scaled = obj_scale * c
    Contradiction contradiction = Contradiction::none;
    WorkRow bad_row;
    WorkSegment bad_seg;
};

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

double pow2_scale(double maxabs) {
    if (maxabs <= 0.0) return 1.0;
    int e;
    std::frexp(maxabs, &e);
    return std::ldexp(1.0, -e + 1);  // keeps coefficients in [~1, 2)
}

void substitute(WorkRow& row, int var, double value) {
    double add = 0.0;
    std::erase_if(row.terms, [&](const auto& t) {
        if (t.first == var) {
            add += t.second * value;
            return true;
        }
        return false;
    });
    row.constant += add;
}

PresolveState run_presolve(const ConicProgram& p) {
    PresolveState st;
    st.fixed.assign(p.num_vars(), std::nullopt);

    const auto& eq_rows = p.eq_rows();
    const auto& slack_rows = p.slack_rows();
    for (size_t r = 0; r < eq_rows.size(); ++r)
        st.eq.push_back({eq_rows[r].terms, eq_rows[r].constant, static_cast<int>(r), false, 1.0});
    size_t at = 0;
    for (const auto& seg : p.segments()) {
        if (seg.kind == ConeKind::Zero) {
            st.eq.push_back(
                {slack_rows[at].terms, slack_rows[at].constant, static_cast<int>(at), true, 1.0});
            ++at;
            continue;
        }
        WorkSegment ws{seg.kind, {}};
        for (int k = 0; k < seg.dim; ++k) {
            ws.rows.push_back(
                {slack_rows[at].terms, slack_rows[at].constant, static_cast<int>(at), false, 1.0});
            ++at;
        }
        st.segs.push_back(std::move(ws));
    }


    // substitute variables pinned by singleton equalities
    bool changed = true;
    while (changed) {
        changed = false;
        for (auto& row : st.eq) {
            if (row.orig_index < 0) continue;  // consumed
            if (row.terms.size() == 1 && std::abs(row.terms[0].second) > 1e-12) {
                const int v = row.terms[0].first;
                const double value = -row.constant / row.terms[0].second;
                st.elims.push_back({v, row.orig_index, row.from_zero_segment, value});
                st.fixed[v] = value;
                row.orig_index = -1;
                row.terms.clear();
                for (auto& r2 : st.eq)
                    if (r2.orig_index >= 0) substitute(r2, v, value);
                for (auto& seg : st.segs)
                    for (auto& r2 : seg.rows) substitute(r2, v, value);
                changed = true;
            } else if (row.terms.empty()) {
                if (std::abs(row.constant) > 1e-8) {
                    st.contradiction = Contradiction::eq_row;
                    st.bad_row = row;
                    return st;
                }
                row.orig_index = -1;  // redundant 0 = 0
            }
        }
    }
    std::erase_if(st.eq, [](const WorkRow& r) { return r.orig_index < 0; });

    // constant slack rows: verify membership and drop
    std::vector<WorkSegment> kept;
    for (auto& seg : st.segs) {
        const bool all_const = std::all_of(seg.rows.begin(), seg.rows.end(),
                                           [](const WorkRow& r) { return r.terms.empty(); });
        if (!all_const) {
            kept.push_back(std::move(seg));
            continue;
        }
        if (seg.kind == ConeKind::NonNeg) {
            if (seg.rows[0].constant < -1e-8) {
                st.contradiction = Contradiction::nonneg_row;
                st.bad_row = seg.rows[0];
                return st;
            }
        } else {
            double tail2 = 0.0;
            for (size_t k = 1; k < seg.rows.size(); ++k)
                tail2 += seg.rows[k].constant * seg.rows[k].constant;
            if (seg.rows[0].constant < std::sqrt(tail2) - 1e-8) {
                st.contradiction = Contradiction::soc_segment;
                st.bad_seg = seg;
                return st;
            }
        }
        for (const auto& r : seg.rows) st.dropped_slack.emplace_back(r.orig_index, r.constant);
    }
    st.segs = std::move(kept);

    // Ruiz-style equilibration with power-of-two factors (lossless in
    // floating point). Rows scale by their largest entry including the
    // constant; SOC segments share one factor so the cone geometry is
    // preserved; columns rescale the variables themselves.
    st.col_scale.assign(st.fixed.size(), 1.0);
    auto maxabs = [](const WorkRow& r) {
        double m = std::abs(r.constant);
        for (const auto& [v, c] : r.terms) {
            (void)v;
            m = std::max(m, std::abs(c));
        }
        return m;
    };
    for (int round = 0; round < 3; ++round) {
        for (auto& row : st.eq) {
            const double g = pow2_scale(maxabs(row));
            row.scale *= g;
            for (auto& t : row.terms) t.second *= g;
            row.constant *= g;
        }
        for (auto& seg : st.segs) {
            double m = 0.0;
            for (const auto& r : seg.rows) m = std::max(m, maxabs(r));
            const double g = pow2_scale(m);
            for (auto& r : seg.rows) {
                r.scale *= g;
                for (auto& t : r.terms) t.second *= g;
                r.constant *= g;
            }
        }
        std::vector<double> colmax(st.fixed.size(), 0.0);
        auto observe = [&colmax](const WorkRow& r) {
            for (const auto& [v, c] : r.terms) colmax[v] = std::max(colmax[v], std::abs(c));
        };
        for (const auto& row : st.eq) observe(row);
        for (const auto& seg : st.segs)
            for (const auto& r : seg.rows) observe(r);
        std::vector<double> d(st.fixed.size(), 1.0);
        for (size_t v = 0; v < d.size(); ++v)
            if (colmax[v] > 0.0) d[v] = pow2_scale(colmax[v]);
        auto rescale = [&d](WorkRow& r) {
            for (auto& [v, c] : r.terms) c *= d[v];
        };
        for (auto& row : st.eq) rescale(row);
        for (auto& seg : st.segs)
            for (auto& r : seg.rows) rescale(r);
        for (size_t v = 0; v < d.size(); ++v) st.col_scale[v] *= d[v];
    }
    return st;
}

struct Component {
    std::vector<int> vars;  // original var ids, ascending
    std::vector<const WorkRow*> eq;
    std::vector<const WorkRow*> nn_rows;
    std::vector<const WorkSegment*> socs;
};

}  // namespace

ConicSolution solve(const ConicProgram& p, const SolveOptions& opts) {
    p.validate();
    const int n = p.num_vars();
    const auto& obj = p.objective_coeffs();

    ConicSolution out;
    out.x = Eigen::VectorXd::Zero(n);
    out.y = Eigen::VectorXd::Zero(p.num_eq_rows());
    out.z = Eigen::VectorXd::Zero(p.num_slack_rows());
    out.s = Eigen::VectorXd::Zero(p.num_slack_rows());

    PresolveState st = run_presolve(p);

    // original columns, used for dual reconstruction and final certificates
    std::vector<std::vector<std::pair<int, double>>> eq_cols(n), slack_cols(n);
    for (int r = 0; r < p.num_eq_rows(); ++r)
        for (const auto& [v, c] : p.eq_rows()[r].terms) eq_cols[v].emplace_back(r, c);
    for (int k = 0; k < p.num_slack_rows(); ++k)
        for (const auto& [v, c] : p.slack_rows()[k].terms)
            slack_cols[v].emplace_back(k, -c);  // G = -coef since s = e(x)

    // duals of eliminated defining rows, in reverse elimination order; for
    // Farkas certificates the objective column is treated as zero
    auto reconstruct_elim_duals = [&](bool with_obj) {
        for (auto it = st.elims.rbegin(); it != st.elims.rend(); ++it) {
            const int v = it->var;
            double acc = with_obj ? obj[v] : 0.0;
            double def_coef = 0.0;
            for (const auto& [r, c] : eq_cols[v]) {
                if (!it->def_zero_seg && r == it->def_index) {
                    def_coef = c;
                    continue;
                }
                acc += c * out.y[r];
            }
            for (const auto& [k, g] : slack_cols[v]) {
                if (it->def_zero_seg && k == it->def_index) {
                    def_coef = g;
                    continue;
                }
                acc += g * out.z[k];
            }
            const double mult = -acc / def_coef;
            if (it->def_zero_seg)
                out.z[it->def_index] = mult;
            else
                out.y[it->def_index] = mult;
        }
    };

    if (st.contradiction != Contradiction::none) {
        // reduced row is an inconsistent constant; chain the Farkas multiplier
        // through the eliminated rows
        switch (st.contradiction) {
            case Contradiction::eq_row: {
                const double mult = st.bad_row.constant > 0.0 ? 1.0 : -1.0;
                if (st.bad_row.from_zero_segment)
                    out.z[st.bad_row.orig_index] = mult;
                else
                    out.y[st.bad_row.orig_index] = mult;
                break;
            }
            case Contradiction::nonneg_row:
                out.z[st.bad_row.orig_index] = 1.0;
                break;
            case Contradiction::soc_segment: {
                const auto& rows = st.bad_seg.rows;
                double tail2 = 0.0;
                for (size_t k = 1; k < rows.size(); ++k)
                    tail2 += rows[k].constant * rows[k].constant;
                const double tn = std::sqrt(tail2);
                out.z[rows[0].orig_index] = 1.0;
                for (size_t k = 1; k < rows.size(); ++k)
                    out.z[rows[k].orig_index] = tn > 0.0 ? -rows[k].constant / tn : 0.0;
                break;
            }
            default: break;
        }
        reconstruct_elim_duals(false);
        out.status = SolveStatus::primal_infeasible;
        return out;
    }

    // variables untouched by any remaining row
    std::vector<char> in_row(n, 0);
    for (const auto& r : st.eq)
        for (const auto& [v, c] : r.terms) {
            (void)c;
            in_row[v] = 1;
        }
    for (const auto& seg : st.segs)
        for (const auto& r : seg.rows)
            for (const auto& [v, c] : r.terms) {
                (void)c;
                in_row[v] = 1;
            }
    for (int v = 0; v < n; ++v) {
        if (st.fixed[v] || in_row[v]) continue;
        if (obj[v] != 0.0) {
            out.status = SolveStatus::dual_infeasible;
            out.x.setZero();
            out.x[v] = obj[v] > 0.0 ? -1.0 : 1.0;  // unbounded ray
            out.objective = -kInf;
            return out;
        }
        st.fixed[v] = 0.0;
    }

    // connected components over the remaining variables
    UnionFind uf(n);
    for (const auto& r : st.eq)
        for (size_t k = 1; k < r.terms.size(); ++k) uf.unite(r.terms[0].first, r.terms[k].first);
    for (const auto& seg : st.segs) {
        int anchor = -1;
        for (const auto& r : seg.rows)
            for (const auto& [v, c] : r.terms) {
                (void)c;
                if (anchor < 0)
                    anchor = v;
                else
                    uf.unite(anchor, v);
            }
    }

    std::vector<Component> comps;
    std::vector<int> comp_of(n, -1);
    for (int v = 0; v < n; ++v) {
        if (st.fixed[v]) continue;
        const int root = uf.find(v);
        if (comp_of[root] < 0) {
            comp_of[root] = static_cast<int>(comps.size());
            comps.emplace_back();
        }
        comp_of[v] = comp_of[root];
        comps[comp_of[v]].vars.push_back(v);
    }
    for (const auto& r : st.eq) comps[comp_of[r.terms[0].first]].eq.push_back(&r);
    for (const auto& seg : st.segs) {
        int c = -1;
        for (const auto& r : seg.rows) {
            if (!r.terms.empty()) {
                c = comp_of[r.terms[0].first];
                break;
            }
        }
        if (seg.kind == ConeKind::NonNeg)
            comps[c].nn_rows.push_back(&seg.rows[0]);
        else
            comps[c].socs.push_back(&seg);
    }

    for (const auto& [idx, val] : st.dropped_slack) out.s[idx] = val;

    // objective left in its natural units: the convergence measures are
    // relative, and rescaling c would detune them from the certificates
    // verified on the original program below
    st.obj_scale = 1.0;

    bool any_max_iter = false;
    SolveStatus cert_status = SolveStatus::optimal;
    int total_iters = 0;

    // component gaps add up in the stitched certificate, so each part has to
    // clear a proportionally tighter bar
    SolveOptions comp_opts = opts;
    comp_opts.tol =
        std::max(1e-12, opts.tol / static_cast<double>(std::max<size_t>(1, comps.size())));

    for (const auto& comp : comps) {
        const int nc = static_cast<int>(comp.vars.size());
        std::vector<int> local(n, -1);
        for (int j = 0; j < nc; ++j) local[comp.vars[j]] = j;

        DenseProblem pb;
        pb.c.resize(nc);
        for (int j = 0; j < nc; ++j)
            pb.c[j] = obj[comp.vars[j]] * st.col_scale[comp.vars[j]] * st.obj_scale;
        pb.A = Eigen::MatrixXd::Zero(static_cast<int>(comp.eq.size()), nc);
        pb.b.resize(static_cast<int>(comp.eq.size()));
        for (size_t r = 0; r < comp.eq.size(); ++r) {
            for (const auto& [v, c] : comp.eq[r]->terms) pb.A(static_cast<int>(r), local[v]) = c;
            pb.b[static_cast<int>(r)] = -comp.eq[r]->constant;
        }
        int mrows = static_cast<int>(comp.nn_rows.size());
        for (const auto* seg : comp.socs) mrows += static_cast<int>(seg->rows.size());
        pb.G = Eigen::MatrixXd::Zero(mrows, nc);
        pb.h.resize(mrows);
        pb.nn = static_cast<int>(comp.nn_rows.size());
        int at = 0;
        auto emit = [&](const WorkRow& r) {
            for (const auto& [v, c] : r.terms) pb.G(at, local[v]) = -c;
            pb.h[at] = r.constant;
            ++at;
        };
        for (const auto* r : comp.nn_rows) emit(*r);
        for (const auto* seg : comp.socs) {
            pb.soc.push_back(static_cast<int>(seg->rows.size()));
            for (const auto& r : seg->rows) emit(r);
        }

        DenseResult dr = solve_dense(pb, comp_opts);
        total_iters += dr.iters;

        if (dr.status == SolveStatus::primal_infeasible ||
            dr.status == SolveStatus::dual_infeasible) {
            // report this component's certificate alone; mixing in other
            // components' optimal duals would not certify anything
            out.x.setZero();
            out.y.setZero();
            out.z.setZero();
            out.s.setZero();
            cert_status = dr.status;
        } else if (dr.status == SolveStatus::max_iter) {
            any_max_iter = true;
        }

        for (int j = 0; j < nc; ++j)
            out.x[comp.vars[j]] = dr.x[j] * st.col_scale[comp.vars[j]];
        for (size_t r = 0; r < comp.eq.size(); ++r) {
            const double yval = dr.y[static_cast<int>(r)] * comp.eq[r]->scale / st.obj_scale;
            if (comp.eq[r]->from_zero_segment)
                out.z[comp.eq[r]->orig_index] = yval;
            else
                out.y[comp.eq[r]->orig_index] = yval;
        }
        at = 0;
        for (const auto* r : comp.nn_rows) {
            out.s[r->orig_index] = dr.s[at] / r->scale;
            out.z[r->orig_index] = dr.z[at] * r->scale / st.obj_scale;
            ++at;
        }
        for (const auto* seg : comp.socs)
            for (const auto& r : seg->rows) {
                out.s[r.orig_index] = dr.s[at] / r.scale;
                out.z[r.orig_index] = dr.z[at] * r.scale / st.obj_scale;
                ++at;
            }

        if (cert_status != SolveStatus::optimal) break;
    }

    out.iterations = total_iters;
    const bool infeasible = cert_status != SolveStatus::optimal;

    if (!infeasible)
        for (const auto& e : st.elims) out.x[e.var] = e.value;
    reconstruct_elim_duals(!infeasible);

    if (infeasible)
        out.status = cert_status;
    else if (any_max_iter)
        out.status = SolveStatus::max_iter;
    else
        out.status = SolveStatus::optimal;

    // certificates on the original, unscaled program
    double eq_res2 = 0.0, b2 = 0.0;
    for (const auto& row : p.eq_rows()) {
        const double r = row.eval(out.x);
        eq_res2 += r * r;
        b2 += row.constant * row.constant;
    }
    double slack_res2 = 0.0, h2 = 0.0;
    for (int k = 0; k < p.num_slack_rows(); ++k) {
        const double r = out.s[k] - p.slack_rows()[k].eval(out.x);
        slack_res2 += r * r;
        h2 += p.slack_rows()[k].constant * p.slack_rows()[k].constant;
    }
    out.primal_residual = std::max(std::sqrt(eq_res2) / (1.0 + std::sqrt(b2)),
                                   std::sqrt(slack_res2) / (1.0 + std::sqrt(h2)));
    double dual_res2 = 0.0, c2 = 0.0;
    for (int v = 0; v < n; ++v) {
        double acc = obj[v];
        for (const auto& [r, c] : eq_cols[v]) acc += c * out.y[r];
        for (const auto& [k, g] : slack_cols[v]) acc += g * out.z[k];
        dual_res2 += acc * acc;
        c2 += obj[v] * obj[v];
    }
    out.dual_residual = std::sqrt(dual_res2) / (1.0 + std::sqrt(c2));

    out.objective = p.objective_constant();
    for (int v = 0; v < n; ++v) out.objective += obj[v] * out.x[v];
    double dobj = p.objective_constant();
    for (int r = 0; r < p.num_eq_rows(); ++r) dobj += p.eq_rows()[r].constant * out.y[r];
    for (int k = 0; k < p.num_slack_rows(); ++k) dobj -= p.slack_rows()[k].constant * out.z[k];
    out.gap = std::abs(out.s.dot(out.z)) / std::max({1.0, std::abs(out.objective), std::abs(dobj)});

    if (out.status == SolveStatus::optimal) {
        const double loose = 10.0 * std::max(opts.tol, 1e-9);
        if (out.primal_residual > loose || out.dual_residual > loose || out.gap > loose) {
            if (trace_enabled())
                std::fprintf(stderr,
                             "[solve] downgrade: pres=%9.2e dres=%9.2e gap=%9.2e loose=%9.2e\n",
                             out.primal_residual, out.dual_residual, out.gap, loose);
            out.status = SolveStatus::max_iter;  // do not report certificates we cannot back
        } else {
            CertificateLedger::instance().record(out.gap, out.primal_residual, out.dual_residual);
        }
    }

    // optional dump for cross-checking against external solvers
    if (const char* dir = std::getenv("UAVMEC_DUMP_DIR")) {
        static std::atomic<int> counter{0};
        std::ofstream f(std::string(dir) + "/prog_" + std::to_string(counter.fetch_add(1)) +
                        ".conic");
        p.dump(f);
        char buf[96];
        std::snprintf(buf, sizeof(buf), "solution %s %.17g\n", to_string(out.status),
                      out.objective);
        f << buf;
        f << "primal";
        for (int v = 0; v < n; ++v) {
            std::snprintf(buf, sizeof(buf), " %.17g", out.x[v]);
            f << buf;
        }
        f << "\n";
    }
    return out;
}

}  // namespace uavmec::conic

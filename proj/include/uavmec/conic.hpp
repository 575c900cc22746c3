#pragma once

#include "uavmec/common.hpp"

#include <Eigen/Core>

#include <iosfwd>
#include <mutex>
#include <vector>

namespace uavmec::conic {

enum class ConeKind { Zero, NonNeg, Soc };

struct ConeSegment {
    ConeKind kind;
    int dim;
};

/// Affine expression sum_i coef_i * x_i + constant.
struct AffineExpr {
    std::vector<std::pair<int, double>> terms;
    double constant = 0.0;

    AffineExpr() = default;
    /* implicit */ AffineExpr(double c) : constant(c) {}

    static AffineExpr var(int v, double coef = 1.0) {
        AffineExpr e;
        e.terms.emplace_back(v, coef);
        return e;
    }

    AffineExpr& add(int v, double coef) {
        terms.emplace_back(v, coef);
        return *this;
    }
    AffineExpr& operator+=(const AffineExpr& o) {
        terms.insert(terms.end(), o.terms.begin(), o.terms.end());
        constant += o.constant;
        return *this;
    }
    AffineExpr& operator*=(double a) {
        for (auto& t : terms) t.second *= a;
        constant *= a;
        return *this;
    }
    friend AffineExpr operator+(AffineExpr a, const AffineExpr& b) { return a += b; }
    friend AffineExpr operator-(AffineExpr a, AffineExpr b) {
        b *= -1.0;
        return a += b;
    }
    friend AffineExpr operator*(double a, AffineExpr e) {
        e *= a;
        return e;
    }

    double eval(const Eigen::VectorXd& x) const {
        double v = constant;
        for (const auto& [i, c] : terms) v += c * x[i];
        return v;
    }
};

/// Standard-form cone program
///
///   min  c'x + c0
///   s.t. a_r'x = b_r                      (equality rows)
///        s = e_k(x),  s in K              (slack rows, grouped into ordered
///                                          zero / nonnegative / second-order
///                                          cone segments)
///
/// Slack rows are stored as the affine expressions e_k; in matrix form
/// G x + s = h with G = -coeffs, h = constants.
class ConicProgram {
public:
    int add_var() {
        obj_.push_back(0.0);
        return n_++;
    }
    std::vector<int> add_vars(int count) {
        std::vector<int> ids(count);
        for (int& v : ids) v = add_var();
        return ids;
    }

    void add_obj(int v, double coef) { obj_[v] += coef; }
    void add_obj_constant(double c) { obj_const_ += c; }

    /// e(x) == 0
    void add_eq(AffineExpr e) { eq_.push_back(canonical(std::move(e))); }

    /// e(x) >= 0
    void add_nonneg(AffineExpr e) {
        rows_.push_back(canonical(std::move(e)));
        segments_.push_back({ConeKind::NonNeg, 1});
    }

    /// e[0](x) >= || (e[1](x), ..., e[k-1](x)) ||_2
    void add_soc(std::vector<AffineExpr> e) {
        if (e.size() < 2) throw ValidationError("conic: SOC segment length must be >= 2");
        for (auto& row : e) rows_.push_back(canonical(std::move(row)));
        segments_.push_back({ConeKind::Soc, static_cast<int>(e.size())});
    }

    /// e(x) == 0 recorded as a zero-cone slack segment.
    void add_zero(AffineExpr e) {
        rows_.push_back(canonical(std::move(e)));
        segments_.push_back({ConeKind::Zero, 1});
    }

    int num_vars() const { return n_; }
    int num_eq_rows() const { return static_cast<int>(eq_.size()); }
    int num_slack_rows() const { return static_cast<int>(rows_.size()); }
    const std::vector<double>& objective_coeffs() const { return obj_; }
    double objective_constant() const { return obj_const_; }
    const std::vector<AffineExpr>& eq_rows() const { return eq_; }
    const std::vector<AffineExpr>& slack_rows() const { return rows_; }
    const std::vector<ConeSegment>& segments() const { return segments_; }

    /// Throws ValidationError on inconsistent dimensions or malformed cones.
    void validate() const;

    /// Plain-text dump for cross-checking against external solvers.
    /// One row per line: kind, indices, coefficients.
    void dump(std::ostream& os) const;

private:
    AffineExpr canonical(AffineExpr e) const;

    int n_ = 0;
    std::vector<double> obj_;
    double obj_const_ = 0.0;
    std::vector<AffineExpr> eq_;
    std::vector<AffineExpr> rows_;       // slack rows in segment order
    std::vector<ConeSegment> segments_;  // partition of rows_
};

enum class SolveStatus { optimal, primal_infeasible, dual_infeasible, max_iter };

const char* to_string(SolveStatus s);

struct ConicSolution {
    SolveStatus status = SolveStatus::max_iter;
    Eigen::VectorXd x;  // primal values (num_vars)
    Eigen::VectorXd y;  // equality duals (num_eq_rows)
    Eigen::VectorXd z;  // slack-cone duals (num_slack_rows)
    Eigen::VectorXd s;  // slacks (num_slack_rows)
    double objective = 0.0;       // c'x + c0
    double gap = 0.0;             // relative duality gap
    double primal_residual = 0.0; // ||Ax-b|| and cone-row residual, scaled
    double dual_residual = 0.0;
    int iterations = 0;
};

struct SolveOptions {
    double tol = 1e-8;
    int max_iter = 100;
};

/// Primal-dual interior-point solve via a homogeneous self-dual embedding.
/// Deterministic for identical inputs. Presolve removes fixed variables and
/// constant rows, applies power-of-two row equilibration, and splits the
/// program into independent connected components before the dense core runs.
ConicSolution solve(const ConicProgram& p, const SolveOptions& opts = {});

/// Records certificate quality of every optimal solve while enabled; the
/// acceptance suite uses it to bound gap/KKT residuals across a whole run.
class CertificateLedger {
public:
    static CertificateLedger& instance();
    void enable(bool on);
    void record(double gap, double pres, double dres);
    void reset();
    int count() const;
    double max_gap() const;
    double max_primal_residual() const;
    double max_dual_residual() const;

private:
    mutable std::mutex mu_;
    bool enabled_ = false;
    int count_ = 0;
    double max_gap_ = 0.0, max_pres_ = 0.0, max_dres_ = 0.0;
};

}  // namespace uavmec::conic

#include "uavmec/conic.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace uavmec::conic {

AffineExpr ConicProgram::canonical(AffineExpr e) const {
    for (const auto& [v, c] : e.terms) {
        (void)c;
        if (v < 0 || v >= n_) throw ValidationError("conic: row references unknown variable");
    }
    std::sort(e.terms.begin(), e.terms.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    // merge duplicate variable indices, drop exact zeros
    std::vector<std::pair<int, double>> merged;
    merged.reserve(e.terms.size());
    for (const auto& t : e.terms) {
        if (!merged.empty() && merged.back().first == t.first) {
            merged.back().second += t.second;
        } else {
            merged.push_back(t);
        }
    }
    std::erase_if(merged, [](const auto& t) { return t.second == 0.0; });
    e.terms = std::move(merged);
    return e;
}

void ConicProgram::validate() const {
    size_t total = 0;
    for (const auto& seg : segments_) {
        if (seg.kind == ConeKind::Soc && seg.dim < 2)
            throw ValidationError("conic: SOC segment length must be >= 2");
        if (seg.kind != ConeKind::Soc && seg.dim != 1)
            throw ValidationError("conic: zero/nonneg segments must have dim 1");
        total += static_cast<size_t>(seg.dim);
    }
    if (total != rows_.size())
        throw ValidationError("conic: cone segments do not partition the slack rows");
    for (const auto& row : rows_)
        for (const auto& [v, c] : row.terms) {
            (void)c;
            if (v < 0 || v >= n_) throw ValidationError("conic: row references unknown variable");
        }
    for (const auto& row : eq_)
        for (const auto& [v, c] : row.terms) {
            (void)c;
            if (v < 0 || v >= n_) throw ValidationError("conic: row references unknown variable");
        }
    if (static_cast<int>(obj_.size()) != n_)
        throw ValidationError("conic: objective length mismatch");
}

void ConicProgram::dump(std::ostream& os) const {
    os << std::setprecision(17);  // round-trips doubles exactly
    os << "conicprogram vars " << n_ << "\n";
    os << "objconst " << obj_const_ << "\n";
    for (int i = 0; i < n_; ++i)
        if (obj_[i] != 0.0) os << "obj " << i << " " << obj_[i] << "\n";
    auto put_row = [&os](const char* kind, const AffineExpr& e) {
        os << kind << " " << e.constant << " " << e.terms.size();
        for (const auto& [v, c] : e.terms) os << " " << v << ":" << c;
        os << "\n";
    };
    for (const auto& row : eq_) put_row("eq", row);
    size_t at = 0;
    for (const auto& seg : segments_) {
        const char* kind = seg.kind == ConeKind::Zero      ? "zero"
                           : seg.kind == ConeKind::NonNeg ? "nonneg"
                                                          : "soc";
        os << "cone " << kind << " " << seg.dim << "\n";
        for (int k = 0; k < seg.dim; ++k) put_row("row", rows_[at++]);
    }
}

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::primal_infeasible: return "primal_infeasible";
        case SolveStatus::dual_infeasible: return "dual_infeasible";
        case SolveStatus::max_iter: return "max_iter";
    }
    return "unknown";
}

CertificateLedger& CertificateLedger::instance() {
    static CertificateLedger ledger;
    return ledger;
}

void CertificateLedger::enable(bool on) {
    std::lock_guard lock(mu_);
    enabled_ = on;
}

void CertificateLedger::record(double gap, double pres, double dres) {
    std::lock_guard lock(mu_);
    if (!enabled_) return;
    ++count_;
    max_gap_ = std::max(max_gap_, gap);
    max_pres_ = std::max(max_pres_, pres);
    max_dres_ = std::max(max_dres_, dres);
}

void CertificateLedger::reset() {
    std::lock_guard lock(mu_);
    count_ = 0;
    max_gap_ = max_pres_ = max_dres_ = 0.0;
}

int CertificateLedger::count() const {
    std::lock_guard lock(mu_);
    return count_;
}
double CertificateLedger::max_gap() const {
    std::lock_guard lock(mu_);
    return max_gap_;
}
double CertificateLedger::max_primal_residual() const {
    std::lock_guard lock(mu_);
    return max_pres_;
}
double CertificateLedger::max_dual_residual() const {
    std::lock_guard lock(mu_);
    return max_dres_;
}

}  // namespace uavmec::conic

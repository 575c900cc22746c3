#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace uavmec {

using Vec2 = Eigen::Vector2d;

/// Malformed config text.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A scenario or decision violates a documented invariant.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A subproblem has no feasible point; the message names the slot/GU.
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Internal consistency check failed (solver or linearization bug).
class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Dense row-major (rows x cols) grid.
template <class T>
class Grid2 {
public:
    Grid2() = default;
    Grid2(int rows, int cols, const T& fill = T{})
        : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {}

    T& operator()(int i, int j) { return data_[static_cast<size_t>(i) * cols_ + j]; }
    const T& operator()(int i, int j) const { return data_[static_cast<size_t>(i) * cols_ + j]; }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    auto begin() { return data_.begin(); }
    auto end() { return data_.end(); }
    auto begin() const { return data_.begin(); }
    auto end() const { return data_.end(); }

    friend bool operator==(const Grid2& a, const Grid2& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    int rows_ = 0, cols_ = 0;
    std::vector<T> data_;
};

/// Dense (d0 x d1 x d2) grid, last index fastest.
template <class T>
class Grid3 {
public:
    Grid3() = default;
    Grid3(int d0, int d1, int d2, const T& fill = T{})
        : d0_(d0), d1_(d1), d2_(d2), data_(static_cast<size_t>(d0) * d1 * d2, fill) {}

    T& operator()(int i, int j, int k) {
        return data_[(static_cast<size_t>(i) * d1_ + j) * d2_ + k];
    }
    const T& operator()(int i, int j, int k) const {
        return data_[(static_cast<size_t>(i) * d1_ + j) * d2_ + k];
    }

    int dim0() const { return d0_; }
    int dim1() const { return d1_; }
    int dim2() const { return d2_; }

    friend bool operator==(const Grid3& a, const Grid3& b) {
        return a.d0_ == b.d0_ && a.d1_ == b.d1_ && a.d2_ == b.d2_ && a.data_ == b.data_;
    }

private:
    int d0_ = 0, d1_ = 0, d2_ = 0;
    std::vector<T> data_;
};

/// Seeded RNG with platform-independent real draws (mt19937_64 is bit-exact
/// across implementations; the uniform mapping below avoids the
/// implementation-defined std::uniform_real_distribution).
class DetRng {
public:
    explicit DetRng(uint64_t seed) : eng_(seed) {}

    /// Uniform in [0, 1).
    double unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + unit() * (hi - lo); }

    /// Standard normal via Box-Muller (no cached spare: keeps draws positional).
    double normal() {
        double u1 = unit(), u2 = unit();
        while (u1 <= 0.0) u1 = unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    uint64_t raw() { return eng_(); }

private:
    std::mt19937_64 eng_;
};

}  // namespace uavmec

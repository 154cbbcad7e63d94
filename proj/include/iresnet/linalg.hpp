#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace iresnet {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles. Doubles as the linear-operator type
/// throughout the library.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, Vector data);

    static Matrix identity(std::size_t n);
    static Matrix diagonal(std::span<const double> diag);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* row_ptr(std::size_t r) { return data_.data() + r * cols_; }
    const double* row_ptr(std::size_t r) const { return data_.data() + r * cols_; }

    Vector& data() { return data_; }
    const Vector& data() const { return data_; }

    bool all_finite() const;
    double max_abs() const;
    double frobenius_norm() const;

    /// y = A x
    Vector apply(std::span<const double> x) const;
    /// y = A^T x
    Vector apply_transpose(std::span<const double> x) const;
    /// A^T A, exploiting symmetry of the result.
    Matrix gram() const;
    Matrix transpose() const;

    void scale(double s);

    /// Column c as a vector (used for eigenvector extraction).
    Vector col(std::size_t c) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Vector data_;
};

// --- vector helpers -------------------------------------------------------

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double norm2_diff(std::span<const double> a, std::span<const double> b);
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void scale_inplace(std::span<double> x, double s);

// --- deterministic RNG ----------------------------------------------------

/// splitmix64; used to derive independent child seeds from a master seed.
std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream);

/// Minimal xoshiro256** generator. Self-contained so that sampled values are
/// bit-identical across standard libraries and platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();
    /// Uniform in [0, 1).
    double uniform01();
    /// Uniform in [lo, hi).
    double uniform(double lo, double hi);
    /// Standard normal via Box-Muller (caches the second draw).
    double normal();
    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n);

private:
    std::uint64_t s_[4];
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace iresnet

#pragma once

#include <cstdint>
#include <memory>

#include "iresnet/linalg.hpp"

namespace iresnet {

/// Eigenpairs (sigma_j^2, v_j) of the normalized normal operator A = Atilde^T Atilde,
/// together with the left vectors u_j = Atilde v_j / sigma_j.
///
/// Modes are sorted by descending sigma_sq; near-zero modes (sigma^2 below the
/// build threshold) are dropped and counted in null_dim.
struct SingularSystem {
    std::size_t n = 0;       // retained modes
    Vector sigma_sq;         // eigenvalues of A, descending, in (0, 1] after normalization
    Matrix v;                // cols x n: right singular vectors (columns)
    Matrix u;                // rows x n: left singular vectors (columns)
    std::size_t null_dim = 0;

    std::size_t image_dim() const { return v.rows(); }
    std::size_t data_dim() const { return u.rows(); }

    /// Coefficients c_j = <x, v_j>.
    Vector project(std::span<const double> x) const;
    /// Sum_j c_j v_j.
    Vector assemble(std::span<const double> coeffs) const;
    /// A x = Sum_j sigma_j^2 <x, v_j> v_j.
    Vector apply_normal(std::span<const double> x) const;
    /// Atilde^* y = Sum_j sigma_j <y, u_j> v_j expressed in coefficients:
    /// returns the vector (sigma_j <y, u_j>)_j.
    Vector adjoint_coefficients(std::span<const double> y) const;
};

struct NoiseModel {
    double delta = 0.0;       // per-coordinate standard deviation of the Gaussian
    std::uint64_t seed = 0;   // reproducibility seed
};

struct EigenDecomposition {
    Vector eigenvalues;  // descending
    Matrix eigenvectors; // columns, orthonormal
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
/// Stops once the off-diagonal Frobenius norm falls below tol * ||M||_F.
/// Eigenvector sign convention: the first component with |entry| > 1e-12 is
/// made positive so that downstream filter extraction sees a fixed basis.
EigenDecomposition jacobi_eigh(const Matrix& m, double tol = 1e-14, int max_sweeps = 100);

/// Spectral norm of A via power iteration on A^T A.
double spectral_norm(const Matrix& a, int max_iters = 500, double rel_tol = 1e-14);

struct NormalizedOperator {
    Matrix op;
    double scale = 1.0;  // divisor applied to the input operator
};

/// Rescale so that ||A|| = 1 (within 1e-10). Idempotent.
NormalizedOperator normalize_operator(const Matrix& a_tilde);

/// Eigendecompose Atilde^T Atilde, drop modes with sigma^2 <= zero_threshold,
/// compose u_j = Atilde v_j / sigma_j.
SingularSystem build_singular_system(const Matrix& a_tilde, double zero_threshold = 1e-10);

/// Discretized parallel-beam Radon transform: (n_angles*n_detectors) x img_side^2.
/// Angles theta_a = a*pi/n_angles; detector array centered on the image with
/// spacing img_side*sqrt(2)/n_detectors; entries are exact ray-pixel
/// intersection lengths (unit pixel side).
Matrix radon_matrix(std::size_t img_side = 28, std::size_t n_angles = 30,
                    std::size_t n_detectors = 41);

/// dim i.i.d. draws N(0, delta^2); the same model always yields the same vector.
Vector sample_noise(const NoiseModel& model, std::size_t dim);

/// Stateful variant: successive calls continue one deterministic stream.
class NoiseStream {
public:
    explicit NoiseStream(const NoiseModel& model);
    Vector sample(std::size_t dim);
    double sample_one() { return delta_ == 0.0 ? 0.0 : delta_ * rng_.normal(); }

private:
    double delta_;
    Rng rng_;
};

}  // namespace iresnet

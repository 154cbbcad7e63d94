#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "iresnet/linalg.hpp"
#include "iresnet/operator_core.hpp"

namespace iresnet {

/// Linear layer whose weight is reparameterized to respect a spectral-norm
/// budget: weight = budget * raw / max(sigma_max(raw), budget). The weight is
/// untouched while raw is already within budget and scaled down otherwise.
///
/// pi_u / pi_v are the persistent power-iteration vectors; during training one
/// iteration per optimizer step keeps the estimate warm, certify() runs the
/// iteration to convergence and re-clips from the converged estimate.
struct LipschitzLayer {
    Matrix raw;
    Vector bias;
    double budget = 1.0;

    Matrix weight;            // cached: clip_scale * raw
    double clip_scale = 1.0;  // budget / max(sigma_hat, budget)
    double sigma_hat = 0.0;   // current spectral-norm estimate of raw
    Vector pi_u, pi_v;

    LipschitzLayer() = default;
    LipschitzLayer(std::size_t out_dim, std::size_t in_dim, double budget, Rng& init_rng);

    std::size_t out_dim() const { return raw.rows(); }
    std::size_t in_dim() const { return raw.cols(); }

    /// One (or more) power-iteration updates on raw, then re-clip.
    void refresh(int pi_iters = 1);
    /// Power iteration to convergence (max_iters or rel-change < rel_tol),
    /// re-clip, and return the certified spectral norm of the clipped weight.
    double certify(int max_iters = 100, double rel_tol = 1e-12);
    /// Re-clip from the current pi_u/pi_v without advancing them; restores the
    /// exact clipped weight a checkpoint was saved with.
    void reclip_from_state();

    Vector apply(std::span<const double> x) const;
};

/// Scalar subnetwork f_{theta,j}: R -> R, layers 1 -> 35 -> 35 -> 1 with ReLU
/// after the first two layers and layerwise budgets (1, 1, L).
struct Subnetwork {
    static constexpr std::size_t kHidden = 35;
    std::array<LipschitzLayer, 3> layers;

    Subnetwork() = default;
    Subnetwork(double lip_budget, Rng& init_rng);

    double eval(double t) const;
    double budget() const;
    std::size_t param_count() const;  // 1366 for the default shape

    void refresh(int pi_iters = 1);
    /// Certify all layers; returns the product of certified layer norms.
    double certify(int max_iters = 100, double rel_tol = 1e-12);
};

/// Residual function f of an invertible residual map phi = Id - f with a
/// certified Lipschitz budget.
class ResidualMap {
public:
    virtual ~ResidualMap() = default;
    virtual std::size_t dim() const = 0;
    virtual double lipschitz_budget() const = 0;
    virtual Vector apply(std::span<const double> x) const = 0;
};

/// Residual function acting per singular mode: f(x) = sum_j g_j(<x,v_j>) v_j
/// plus an optional linear passthrough on the orthogonal complement
/// (null_gain * (x - P_range x); nonzero only for the one-parameter family).
class DiagonalResidualMap : public ResidualMap {
public:
    explicit DiagonalResidualMap(std::shared_ptr<const SingularSystem> basis)
        : basis_(std::move(basis)) {}

    const SingularSystem& basis() const { return *basis_; }
    std::shared_ptr<const SingularSystem> basis_ptr() const { return basis_; }
    std::size_t n_modes() const { return basis_->n; }
    std::size_t dim() const override { return basis_->image_dim(); }

    virtual double mode_value(std::size_t j, double t) const = 0;
    virtual double null_gain() const { return 0.0; }

    Vector apply(std::span<const double> x) const override;

    /// phi restricted to mode j: t - g_j(t).
    double forward_mode(std::size_t j, double t) const { return t - mode_value(j, t); }
    /// Scalar Banach iteration for (Id - g_j)^{-1}(z).
    double invert_mode(std::size_t j, double z, int k_max = 30, double tol = 1e-10) const;

private:
    std::shared_ptr<const SingularSystem> basis_;
};

/// Trained diagonal architecture: one Subnetwork per retained singular mode.
class DiagonalResidualNet : public DiagonalResidualMap {
public:
    DiagonalResidualNet(std::shared_ptr<const SingularSystem> basis, double lip_budget,
                        std::uint64_t init_seed);

    double lipschitz_budget() const override { return lip_budget_; }
    double mode_value(std::size_t j, double t) const override { return subnets_[j].eval(t); }

    Subnetwork& subnet(std::size_t j) { return subnets_[j]; }
    const Subnetwork& subnet(std::size_t j) const { return subnets_[j]; }

    /// Product of certified layer norms, maximized over modes.
    double certify(int max_iters = 100, double rel_tol = 1e-12);

private:
    std::vector<Subnetwork> subnets_;
    double lip_budget_;
};

/// Dense residual function: an MLP on the full vector with layerwise budgets
/// multiplying to the overall budget; ReLU between layers.
class DenseResidualNet : public ResidualMap {
public:
    DenseResidualNet(std::vector<std::size_t> layer_dims, std::vector<double> budgets,
                     std::uint64_t init_seed);

    std::size_t dim() const override;
    double lipschitz_budget() const override;
    Vector apply(std::span<const double> x) const override;

    LipschitzLayer& layer(std::size_t i) { return layers_[i]; }
    std::size_t layer_count() const { return layers_.size(); }
    double certify(int max_iters = 100, double rel_tol = 1e-12);

private:
    std::vector<LipschitzLayer> layers_;
};

/// f(x) = M x + c with caller-asserted budget; covers f == 0 and scalar maps
/// used as references in tests.
class LinearResidual : public ResidualMap {
public:
    LinearResidual(Matrix m, Vector c, double budget);

    std::size_t dim() const override { return m_.cols(); }
    double lipschitz_budget() const override { return budget_; }
    Vector apply(std::span<const double> x) const override;

private:
    Matrix m_;
    Vector c_;
    double budget_;
};

// --- forward / inversion ----------------------------------------------------

/// phi(x) = x - f(x).
Vector forward(const ResidualMap& f, std::span<const double> x);

struct InvertResult {
    Vector x;
    int iters = 0;
    double residual = 0.0;  // ||phi(x) - z||
};

/// Banach fixed-point inversion x^{k+1} = f(x^k) + z, started at x^0 = z.
/// Stops after k_max iterations or once the step norm drops below
/// tol * (1 - L). Throws BudgetNotContractive when the budget is >= 1.
InvertResult invert(const ResidualMap& f, std::span<const double> z, int k_max = 30,
                    double tol = 1e-10);

/// T_L = phi^{-1} ( Atilde^* y ).
Vector reconstruct(const ResidualMap& f, const Matrix& a_tilde, std::span<const double> y,
                   int k_max = 30, double tol = 1e-10);

/// Diagonal fast path of invert(): per-mode scalar iterations in coefficient
/// space. The component of z orthogonal to the retained modes gets the exact
/// fixed point z_perp / (1 - null_gain); for z in the range of Atilde^T that
/// component vanishes and the result matches the generic iteration.
InvertResult invert_diagonal(const DiagonalResidualMap& f, std::span<const double> z,
                             int k_max = 30, double tol = 1e-10);

/// Per-mode inversion given coefficients z_j = <z, v_j>; returns coefficients.
Vector invert_mode_coefficients(const DiagonalResidualMap& f, std::span<const double> z_coeffs,
                                int k_max = 30, double tol = 1e-10);

// --- diagnostics ------------------------------------------------------------

struct FilterSample {
    double r = 1.0;
    double bias = 0.0;
};

/// Learned filter value of subnetwork j at coefficient s:
///   bias_j = (Id - g_j)^{-1}(0),  r = ((Id - g_j)^{-1}(s) - bias_j) / s.
/// At s = 0 the limit convention r = 1 is returned.
FilterSample extract_filter(const DiagonalResidualMap& net, std::size_t j, double s,
                            int k_max = 30, double tol = 1e-12);

/// Max over sampled pairs of ||f(x1)-f(x2)|| / ||x1-x2||; a lower bound on the
/// true Lipschitz constant. Pairs are drawn uniformly from [-box, box]^dim.
double empirical_lipschitz(const ResidualMap& f, std::size_t n_pairs, Rng& rng,
                           double box = 5.0);

/// Scalar variant for a single mode of a diagonal net.
double empirical_lipschitz_mode(const DiagonalResidualMap& f, std::size_t j,
                                std::size_t n_pairs, Rng& rng, double box = 5.0);

// --- checkpoints -------------------------------------------------------------

inline constexpr const char* kCheckpointMagic = "IRESNET-CKPT-v1\n";

void save_checkpoint(const DiagonalResidualNet& net, const std::string& path);
DiagonalResidualNet load_checkpoint(const std::string& path,
                                    std::shared_ptr<const SingularSystem> basis);

}  // namespace iresnet

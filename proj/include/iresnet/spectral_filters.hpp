#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "iresnet/iresnet_core.hpp"
#include "iresnet/linalg.hpp"
#include "iresnet/operator_core.hpp"

namespace iresnet {

enum class FilterFamily { Tikhonov, SquaredSoftTsvd, Relu, SoftThreshold };

std::string to_string(FilterFamily f);
FilterFamily filter_family_from_string(const std::string& name);

/// Parameters of one analytic filter family r_L(sigma^2, s).
/// alpha / mu / p are per-mode arrays; only the families that use them read
/// them (mu: SquaredSoftTsvd bias; alpha, p: SoftThreshold).
struct FilterSpec {
    FilterFamily family = FilterFamily::Tikhonov;
    double lip = 0.0;  // L in [0,1)
    Vector alpha;      // soft-threshold parameters alpha_j >= 0
    Vector mu;         // per-mode training means mu_j
    Vector p;          // per-mode p_{L,j}

    double eval(double sigma_sq_j, double s, std::size_t j) const;
};

// --- closed-form filter values ------------------------------------------------

/// r_L = 1/(1 - L + L sigma^2); equals (1/L) / (alpha + sigma^2), alpha = (1-L)/L.
double tikhonov_filter(double sigma_sq, double s, double lip);

/// r_hat_L = 1 / max{sigma^2, 1-L}.
double squared_soft_tsvd_filter(double sigma_sq, double lip);

/// Bias b_hat_L = sum_{sigma_j^2 < 1-L} (1-L-sigma_j^2)/(1-L) mu_j v_j,
/// returned as per-mode coefficients.
Vector tsvd_bias_coefficients(double lip, std::span<const double> sigma_sq,
                              std::span<const double> mu);

/// 1/max{sigma^2, 1-L} for s >= 0, and 1 for s < 0.
double relu_filter(double sigma_sq, double s, double lip);

/// Data-dependent soft-threshold filter; 1 for |s| <= alpha/w with
/// w = min{alpha/p + 1 - sigma^2, L}. Throws DegenerateMode when w <= 0.
double soft_threshold_filter(double sigma_sq, double s, double lip, double alpha, double p);

/// Soft-threshold filter evaluated on the training ray s = gamma * p(sigma^2) * sigma^2.
/// For gamma = 1 this equals the three-branch closed form exactly.
double eval_on_training_ray(double sigma_sq, double lip,
                            const std::function<double(double)>& alpha_fn,
                            const std::function<double(double)>& p_fn, double gamma);

/// Three-branch closed form of the gamma = 1 ray (regimes split at
/// sigma^2 = alpha/(L p) and sigma^2 = alpha/p + 1 - L).
double training_ray_closed_form(double sigma_sq, double lip, double alpha, double p);

/// F_L(sigma, s) = sigma^2 * r_L(sigma^2, sigma * s).
double big_f_from_r(double sigma, double s,
                    const std::function<double(double, double)>& r_fn);

// --- closed-form trained networks ----------------------------------------------

/// Per-mode residual functions realizing the analytically known training
/// optima of the four shallow architectures.
class ClosedFormNet : public DiagonalResidualMap {
public:
    FilterFamily family() const { return family_; }
    double lipschitz_budget() const override { return lip_; }
    double null_gain() const override {
        return family_ == FilterFamily::Tikhonov ? k_ : 0.0;
    }
    double mode_value(std::size_t j, double t) const override;

    double k() const { return k_; }
    const Vector& w() const { return w_; }
    const Vector& b() const { return b_; }
    const Vector& alpha() const { return alpha_; }
    const Vector& p() const { return p_; }

    friend ClosedFormNet closed_form_one_param(std::shared_ptr<const SingularSystem> basis,
                                               double lip);
    friend ClosedFormNet closed_form_affine(std::shared_ptr<const SingularSystem> basis,
                                            double lip, std::span<const double> mu);
    friend ClosedFormNet closed_form_relu(std::shared_ptr<const SingularSystem> basis,
                                          double lip);
    friend ClosedFormNet closed_form_soft_threshold(std::shared_ptr<const SingularSystem> basis,
                                                    double lip, std::span<const double> alpha,
                                                    const Matrix& coefficients);

private:
    ClosedFormNet(std::shared_ptr<const SingularSystem> basis, FilterFamily family, double lip)
        : DiagonalResidualMap(std::move(basis)), family_(family), lip_(lip) {}

    FilterFamily family_;
    double lip_;
    double k_ = 0.0;  // one-parameter family
    Vector w_, b_;    // per-mode weight / bias
    Vector alpha_, p_;
};

/// Training optimum of the one-parameter architecture: f = k (Id - A), k = L.
ClosedFormNet closed_form_one_param(std::shared_ptr<const SingularSystem> basis, double lip);

/// Training optimum of the affine architecture:
/// w_j = min{1 - sigma_j^2, L}, b_j = max{0, 1 - L - sigma_j^2} mu_j.
ClosedFormNet closed_form_affine(std::shared_ptr<const SingularSystem> basis, double lip,
                                 std::span<const double> mu);

/// Training optimum of the ReLU architecture: w_j = min{1 - sigma_j^2, L}, no bias.
ClosedFormNet closed_form_relu(std::shared_ptr<const SingularSystem> basis, double lip);

struct SoftThresholdStats {
    Vector p;                       // p_{L,j}
    std::vector<std::size_t> i_sizes;  // |I_j(L)|
};

/// Training optimum of the soft-threshold architecture:
/// w_j = min{alpha_j/p_{L,j} + 1 - sigma_j^2, L} with
/// p_{L,j} built from the dataset coefficients (n x N matrix). Throws
/// DatasetAssumptionViolated when some I_j(L) is empty.
ClosedFormNet closed_form_soft_threshold(std::shared_ptr<const SingularSystem> basis, double lip,
                                         std::span<const double> alpha,
                                         const Matrix& coefficients);
SoftThresholdStats soft_threshold_stats(double lip, std::span<const double> alpha,
                                        const Matrix& coefficients);

// --- filter-based reconstruction -------------------------------------------------

/// T_L(y) = sum_j r_L(sigma_j^2, sigma_j <y,u_j>) sigma_j <y,u_j> v_j, plus the
/// bias b_hat_L for the SquaredSoftTsvd family.
Vector filter_reconstruction(std::span<const double> y, const SingularSystem& system,
                             const FilterSpec& filter);

// --- regularization conditions -----------------------------------------------

struct BiasRegularizationReport {
    bool pointwise_limit_ok = false;   // r_hat_L(sigma_j^2) -> 1/sigma_j^2
    bool uniform_bound_ok = false;     // sigma^2 |r_hat_L| <= C
    bool bias_vanishes_ok = false;     // ||b_hat_L|| strictly decreasing to ~0
    double c_bound = 0.0;              // measured sup of sigma^2 |r_hat_L|
    Vector bias_norms;                 // per grid point
    Vector worst_pointwise_gap;        // per grid point: max_j |sigma^2 r - 1|
    bool all_ok() const { return pointwise_limit_ok && uniform_bound_ok && bias_vanishes_ok; }
};

/// Checks the three conditions under which a filter family with bias is a
/// convergent regularization, for the squared-soft-TSVD family on a monotone
/// grid L -> 1.
BiasRegularizationReport bias_regularization_check(std::span<const double> lip_grid,
                                                   std::span<const double> sigma_sq,
                                                   std::span<const double> mu);

/// Piecewise-linear interpolation in sigma^2 between per-mode values with
/// constant extrapolation outside the mode range. Continuous extension used
/// for filter curves.
class PiecewiseLinear {
public:
    PiecewiseLinear(Vector x_ascending, Vector y);
    double operator()(double x) const;

private:
    Vector x_, y_;
};

}  // namespace iresnet

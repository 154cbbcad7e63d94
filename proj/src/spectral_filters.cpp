#include "iresnet/spectral_filters.hpp"

#include <algorithm>
#include <cmath>

#include "iresnet/errors.hpp"

namespace iresnet {

std::string to_string(FilterFamily f) {
    switch (f) {
        case FilterFamily::Tikhonov: return "tikhonov";
        case FilterFamily::SquaredSoftTsvd: return "squared_soft_tsvd";
        case FilterFamily::Relu: return "relu";
        case FilterFamily::SoftThreshold: return "soft_threshold";
    }
    return "?";
}

FilterFamily filter_family_from_string(const std::string& name) {
    if (name == "tikhonov") return FilterFamily::Tikhonov;
    if (name == "squared_soft_tsvd" || name == "tsvd") return FilterFamily::SquaredSoftTsvd;
    if (name == "relu") return FilterFamily::Relu;
    if (name == "soft_threshold" || name == "soft-threshold") return FilterFamily::SoftThreshold;
    throw ConfigError("unknown filter family '" + name + "'");
}

double tikhonov_filter(double sigma_sq, double /*s*/, double lip) {
    return 1.0 / (1.0 - lip + lip * sigma_sq);
}

double squared_soft_tsvd_filter(double sigma_sq, double lip) {
    return 1.0 / std::max(sigma_sq, 1.0 - lip);
}

Vector tsvd_bias_coefficients(double lip, std::span<const double> sigma_sq,
                              std::span<const double> mu) {
    Vector b(sigma_sq.size(), 0.0);
    const double cutoff = 1.0 - lip;
    for (std::size_t j = 0; j < sigma_sq.size(); ++j) {
        if (sigma_sq[j] < cutoff) b[j] = (cutoff - sigma_sq[j]) / cutoff * mu[j];
    }
    return b;
}

double relu_filter(double sigma_sq, double s, double lip) {
    if (s < 0.0) return 1.0;
    return 1.0 / std::max(sigma_sq, 1.0 - lip);
}

double soft_threshold_filter(double sigma_sq, double s, double lip, double alpha, double p) {
    const double w = std::min(alpha / p + 1.0 - sigma_sq, lip);
    if (w <= 0.0) throw DegenerateMode("soft_threshold_filter: w <= 0");
    if (std::fabs(s) <= alpha / w) return 1.0;
    return (std::fabs(s) - alpha) / std::fabs(s) /
           std::max(sigma_sq - alpha / p, 1.0 - lip);
}

double eval_on_training_ray(double sigma_sq, double lip,
                            const std::function<double(double)>& alpha_fn,
                            const std::function<double(double)>& p_fn, double gamma) {
    const double alpha = alpha_fn(sigma_sq);
    const double p = p_fn(sigma_sq);
    const double s = gamma * p * sigma_sq;
    return soft_threshold_filter(sigma_sq, s, lip, alpha, p);
}

double training_ray_closed_form(double sigma_sq, double lip, double alpha, double p) {
    if (sigma_sq <= alpha / (lip * p)) return 1.0;
    if (sigma_sq <= alpha / p + 1.0 - lip)
        return (1.0 - alpha / (p * sigma_sq)) / (1.0 - lip);
    return 1.0 / sigma_sq;
}

double big_f_from_r(double sigma, double s,
                    const std::function<double(double, double)>& r_fn) {
    return sigma * sigma * r_fn(sigma * sigma, sigma * s);
}

double FilterSpec::eval(double sigma_sq_j, double s, std::size_t j) const {
    switch (family) {
        case FilterFamily::Tikhonov:
            return tikhonov_filter(sigma_sq_j, s, lip);
        case FilterFamily::SquaredSoftTsvd:
            return squared_soft_tsvd_filter(sigma_sq_j, lip);
        case FilterFamily::Relu:
            return relu_filter(sigma_sq_j, s, lip);
        case FilterFamily::SoftThreshold:
            return soft_threshold_filter(sigma_sq_j, s, lip, alpha.at(j), p.at(j));
    }
    return 1.0;
}

double ClosedFormNet::mode_value(std::size_t j, double t) const {
    switch (family_) {
        case FilterFamily::Tikhonov:
            return k_ * (1.0 - basis().sigma_sq[j]) * t;
        case FilterFamily::SquaredSoftTsvd:
            return w_[j] * t + b_[j];
        case FilterFamily::Relu:
            return std::max(0.0, w_[j] * t);
        case FilterFamily::SoftThreshold: {
            const double u = w_[j] * t;
            const double mag = std::max(0.0, std::fabs(u) - alpha_[j]);
            return u >= 0.0 ? mag : -mag;
        }
    }
    return 0.0;
}

ClosedFormNet closed_form_one_param(std::shared_ptr<const SingularSystem> basis, double lip) {
    ClosedFormNet net(std::move(basis), FilterFamily::Tikhonov, lip);
    net.k_ = lip;  // training optimum of the one-parameter architecture
    return net;
}

ClosedFormNet closed_form_affine(std::shared_ptr<const SingularSystem> basis, double lip,
                                 std::span<const double> mu) {
    ClosedFormNet net(std::move(basis), FilterFamily::SquaredSoftTsvd, lip);
    const auto& sig = net.basis().sigma_sq;
    net.w_.resize(sig.size());
    net.b_.resize(sig.size());
    for (std::size_t j = 0; j < sig.size(); ++j) {
        net.w_[j] = std::min(1.0 - sig[j], lip);
        net.b_[j] = std::max(0.0, 1.0 - lip - sig[j]) * mu[j];
    }
    return net;
}

ClosedFormNet closed_form_relu(std::shared_ptr<const SingularSystem> basis, double lip) {
    ClosedFormNet net(std::move(basis), FilterFamily::Relu, lip);
    const auto& sig = net.basis().sigma_sq;
    net.w_.resize(sig.size());
    for (std::size_t j = 0; j < sig.size(); ++j) net.w_[j] = std::min(1.0 - sig[j], lip);
    return net;
}

SoftThresholdStats soft_threshold_stats(double lip, std::span<const double> alpha,
                                        const Matrix& coefficients) {
    const std::size_t n = coefficients.rows();
    const std::size_t n_samples = coefficients.cols();
    SoftThresholdStats stats;
    stats.p.assign(n, 0.0);
    stats.i_sizes.assign(n, 0);
    for (std::size_t j = 0; j < n; ++j) {
        const double threshold = alpha[j] == 0.0 ? 0.0 : alpha[j] / lip;
        double sum_sq = 0.0, sum_abs = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < n_samples; ++i) {
            const double c = std::fabs(coefficients(j, i));
            if (c > threshold) {
                sum_sq += c * c;
                sum_abs += c;
                ++count;
            }
        }
        if (count == 0)
            throw DatasetAssumptionViolated("soft threshold: I_" + std::to_string(j) +
                                            "(L) is empty");
        stats.p[j] = sum_sq / sum_abs;
        stats.i_sizes[j] = count;
    }
    return stats;
}

ClosedFormNet closed_form_soft_threshold(std::shared_ptr<const SingularSystem> basis, double lip,
                                         std::span<const double> alpha,
                                         const Matrix& coefficients) {
    ClosedFormNet net(std::move(basis), FilterFamily::SoftThreshold, lip);
    const auto& sig = net.basis().sigma_sq;
    if (coefficients.rows() != sig.size())
        throw DimMismatch("soft threshold: coefficient rows != modes");
    SoftThresholdStats stats = soft_threshold_stats(lip, alpha, coefficients);
    net.alpha_.assign(alpha.begin(), alpha.end());
    net.p_ = stats.p;
    net.w_.resize(sig.size());
    for (std::size_t j = 0; j < sig.size(); ++j)
        net.w_[j] = std::min(alpha[j] / stats.p[j] + 1.0 - sig[j], lip);
    return net;
}

Vector filter_reconstruction(std::span<const double> y, const SingularSystem& system,
                             const FilterSpec& filter) {
    if (y.size() != system.data_dim()) throw DimMismatch("filter_reconstruction");
    Vector s = system.adjoint_coefficients(y);
    Vector coeffs(system.n);
    for (std::size_t j = 0; j < system.n; ++j)
        coeffs[j] = filter.eval(system.sigma_sq[j], s[j], j) * s[j];
    if (filter.family == FilterFamily::SquaredSoftTsvd) {
        Vector b = tsvd_bias_coefficients(filter.lip, system.sigma_sq, filter.mu);
        for (std::size_t j = 0; j < system.n; ++j) coeffs[j] += b[j];
    }
    return system.assemble(coeffs);
}

BiasRegularizationReport bias_regularization_check(std::span<const double> lip_grid,
                                                   std::span<const double> sigma_sq,
                                                   std::span<const double> mu) {
    BiasRegularizationReport rep;
    rep.bias_norms.reserve(lip_grid.size());
    rep.worst_pointwise_gap.reserve(lip_grid.size());
    rep.c_bound = 0.0;
    for (double lip : lip_grid) {
        double worst_gap = 0.0;
        for (double ss : sigma_sq) {
            const double r = squared_soft_tsvd_filter(ss, lip);
            worst_gap = std::max(worst_gap, std::fabs(ss * r - 1.0));
            rep.c_bound = std::max(rep.c_bound, ss * std::fabs(r));
        }
        rep.worst_pointwise_gap.push_back(worst_gap);
        Vector b = tsvd_bias_coefficients(lip, sigma_sq, mu);
        rep.bias_norms.push_back(norm2(b));
    }

    rep.uniform_bound_ok = rep.c_bound <= 1.0 + 1e-12;

    rep.pointwise_limit_ok = true;
    for (std::size_t i = 1; i < rep.worst_pointwise_gap.size(); ++i)
        if (rep.worst_pointwise_gap[i] > rep.worst_pointwise_gap[i - 1] + 1e-15)
            rep.pointwise_limit_ok = false;
    if (!rep.worst_pointwise_gap.empty() && rep.worst_pointwise_gap.back() > 1e-9)
        rep.pointwise_limit_ok = false;

    // Strict decrease while nonzero; once the bias support empties the norm is
    // exactly zero and may stay there.
    rep.bias_vanishes_ok = !rep.bias_norms.empty();
    for (std::size_t i = 1; i < rep.bias_norms.size(); ++i) {
        const double prev = rep.bias_norms[i - 1];
        const double cur = rep.bias_norms[i];
        if (cur == 0.0 && prev >= 0.0) continue;
        if (!(cur < prev)) rep.bias_vanishes_ok = false;
    }
    if (!rep.bias_norms.empty()) {
        const double first = rep.bias_norms.front();
        const double last = rep.bias_norms.back();
        if (first > 0.0 && !(last == 0.0 || last < 1e-3 * first)) rep.bias_vanishes_ok = false;
    }
    return rep;
}

PiecewiseLinear::PiecewiseLinear(Vector x_ascending, Vector y)
    : x_(std::move(x_ascending)), y_(std::move(y)) {
    if (x_.size() != y_.size() || x_.empty())
        throw DimMismatch("PiecewiseLinear: need matching nonempty arrays");
    for (std::size_t i = 1; i < x_.size(); ++i)
        if (x_[i] < x_[i - 1]) throw Error("PiecewiseLinear: x not ascending");
}

double PiecewiseLinear::operator()(double x) const {
    if (x <= x_.front()) return y_.front();
    if (x >= x_.back()) return y_.back();
    const auto it = std::upper_bound(x_.begin(), x_.end(), x);
    const std::size_t hi = static_cast<std::size_t>(it - x_.begin());
    const std::size_t lo = hi - 1;
    const double span = x_[hi] - x_[lo];
    if (span <= 0.0) return y_[lo];
    const double t = (x - x_[lo]) / span;
    return (1.0 - t) * y_[lo] + t * y_[hi];
}

}  // namespace iresnet

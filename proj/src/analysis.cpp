#include "iresnet/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "iresnet/errors.hpp"
#include "iresnet/parallel.hpp"

namespace iresnet {

double local_approx_error(const ResidualMap& net, const SingularSystem& system,
                          std::span<const double> x) {
    if (x.size() != system.image_dim() || x.size() != net.dim())
        throw DimMismatch("local_approx_error");
    Vector phi = forward(net, x);
    Vector ax = system.apply_normal(x);
    return norm2_diff(phi, ax);
}

DecayFit loglog_decay_fit(std::span<const double> lip_grid, std::span<const double> errors) {
    if (lip_grid.size() != errors.size()) throw DimMismatch("loglog_decay_fit");
    if (lip_grid.size() < 3) throw DegenerateGrid("need at least 3 grid points");

    std::vector<double> xs, ys;
    bool any_positive = false;
    for (std::size_t i = 0; i < lip_grid.size(); ++i) {
        if (errors[i] > 0.0) any_positive = true;
        if (errors[i] > 1e-13) {  // keep clear of log of numerical zero
            xs.push_back(std::log(1.0 - lip_grid[i]));
            ys.push_back(std::log(errors[i]));
        }
    }
    if (xs.empty() || !any_positive) {
        DecayFit fit;
        fit.zero_error = true;
        fit.slope = std::numeric_limits<double>::infinity();
        return fit;
    }
    if (xs.size() < 3) throw DegenerateGrid("fewer than 3 usable (error > 1e-13) points");

    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
        syy += ys[i] * ys[i];
    }
    const double denom = n * sxx - sx * sx;
    if (std::fabs(denom) < 1e-30) throw DegenerateGrid("grid has no spread in log(1-L)");
    DecayFit fit;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    const double ss_tot = syy - sy * sy / n;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double pred = fit.intercept + fit.slope * xs[i];
        ss_res += (ys[i] - pred) * (ys[i] - pred);
    }
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

double source_tail(std::span<const double> x, const SingularSystem& system, double beta) {
    if (x.size() != system.image_dim()) throw DimMismatch("source_tail");
    Vector c = system.project(x);
    double s = 0.0;
    for (std::size_t j = 0; j < system.n; ++j)
        if (system.sigma_sq[j] <= beta) s += c[j] * c[j];
    return s;
}

ParamChoice param_choice_rule(double delta, double eps, double c) {
    if (eps <= 0.0 || c <= 0.0) throw Error("param_choice_rule: eps and c must be positive");
    if (delta < 0.0) throw Error("param_choice_rule: delta must be >= 0");
    const double raw = c * std::pow(delta, 1.0 / (1.0 + eps));
    const double clamped = std::min(std::max(raw, 1e-6), 0.999999);
    ParamChoice out;
    out.lip = 1.0 - clamped;
    out.clamped = clamped != raw;
    return out;
}

namespace {

// Reconstruction error of one sample through the per-mode fixed-point inverse,
// bit-identical to invert_diagonal() on Atilde^T (Atilde x + eta).
double sample_reco_error_sq(const DiagonalResidualMap& net, const Matrix& a_tilde,
                            const Vector& x, const NoiseModel& sample_noise_model, int k_max) {
    const SingularSystem& sys = net.basis();
    Vector y = a_tilde.apply(x);
    if (sample_noise_model.delta > 0.0) {
        NoiseStream stream(sample_noise_model);
        Vector eta = stream.sample(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += eta[i];
    }
    Vector z = a_tilde.apply_transpose(y);
    Vector zc = sys.project(z);
    Vector xc = invert_mode_coefficients(net, zc, k_max, /*tol=*/0.0);

    // Error split: retained modes in coefficient space, remainder in image
    // space (the iteration passes the out-of-span part of z through scaled by
    // 1/(1 - null_gain)).
    Vector cx = sys.project(x);
    double err_sq = 0.0;
    for (std::size_t j = 0; j < sys.n; ++j) {
        const double d = xc[j] - cx[j];
        err_sq += d * d;
    }
    Vector z_range = sys.assemble(zc);
    Vector x_range = sys.assemble(cx);
    const double gain = net.null_gain();
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double reco_perp = (z[i] - z_range[i]) / (1.0 - gain);
        const double x_perp = x[i] - x_range[i];
        const double d = reco_perp - x_perp;
        err_sq += d * d;
    }
    return err_sq;
}

}  // namespace

double mse_reco(const DiagonalResidualMap& net, const Matrix& a_tilde,
                std::span<const Vector> test_set, const NoiseModel& noise, int k_max) {
    if (test_set.empty()) return 0.0;
    Vector errors(test_set.size(), 0.0);
    parallel_for(test_set.size(), [&](std::size_t i) {
        NoiseModel per_sample{noise.delta, split_seed(noise.seed, i)};
        errors[i] = sample_reco_error_sq(net, a_tilde, test_set[i], per_sample, k_max);
    });
    double total = 0.0;
    for (double e : errors) total += e;
    return total / static_cast<double>(test_set.size());
}

double mse_reco_filter(const FilterSpec& filter, const SingularSystem& system,
                       const Matrix& a_tilde, std::span<const Vector> test_set,
                       const NoiseModel& noise) {
    if (test_set.empty()) return 0.0;
    Vector errors(test_set.size(), 0.0);
    parallel_for(test_set.size(), [&](std::size_t i) {
        Vector y = a_tilde.apply(test_set[i]);
        NoiseModel per_sample{noise.delta, split_seed(noise.seed, i)};
        if (per_sample.delta > 0.0) {
            NoiseStream stream(per_sample);
            Vector eta = stream.sample(y.size());
            for (std::size_t k = 0; k < y.size(); ++k) y[k] += eta[k];
        }
        Vector reco = filter_reconstruction(y, system, filter);
        double err_sq = 0.0;
        for (std::size_t k = 0; k < reco.size(); ++k) {
            const double d = reco[k] - test_set[i][k];
            err_sq += d * d;
        }
        errors[i] = err_sq;
    });
    double total = 0.0;
    for (double e : errors) total += e;
    return total / static_cast<double>(test_set.size());
}

double std_mnist(const Matrix& coefficients) {
    const std::size_t n = coefficients.rows();
    const std::size_t n_samples = coefficients.cols();
    if (n_samples < 2) throw TooFewSamples("std_mnist needs N >= 2");
    double mean_of_stds = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n_samples; ++i) mean += coefficients(j, i);
        mean /= static_cast<double>(n_samples);
        double var = 0.0;
        for (std::size_t i = 0; i < n_samples; ++i) {
            const double d = coefficients(j, i) - mean;
            var += d * d;
        }
        var /= static_cast<double>(n_samples - 1);  // sample std
        mean_of_stds += std::sqrt(var);
    }
    return mean_of_stds / static_cast<double>(n);
}

void StudyResult::append(double lip, double delta, const std::string& metric, double value) {
    if (!std::isfinite(value)) throw Error("StudyResult: non-finite value for " + metric);
    rows.push_back(StudyRow{lip, delta, metric, value});
}

ConvergenceStudyOutput convergence_study(const ConvergenceStudyInput& in, PairingMode pairing) {
    if (in.lip_grid.empty() || in.delta_grid.empty())
        throw DegenerateGrid("convergence_study: empty grid");
    if (in.nets_clean.size() != in.lip_grid.size())
        throw DimMismatch("convergence_study: one clean net per L required");
    if (pairing == PairingMode::NoiseMatched &&
        (in.nets_matched.size() != in.lip_grid.size() ||
         (!in.nets_matched.empty() && in.nets_matched.front().size() != in.delta_grid.size())))
        throw DimMismatch("convergence_study: matched nets grid mismatch");
    if (in.a_tilde == nullptr) throw Error("convergence_study: operator required");

    ConvergenceStudyOutput out;
    out.argmin_lip_per_delta.resize(in.delta_grid.size());
    const std::string metric =
        pairing == PairingMode::TrainedClean ? "mse_reco_clean_trained" : "mse_reco_matched";

    for (std::size_t ell = 0; ell < in.delta_grid.size(); ++ell) {
        const double delta = in.delta_grid[ell];
        // Noise stream depends on (level, sample) only, so every L sees the
        // same noisy measurements.
        NoiseModel level_noise{delta, split_seed(in.noise_seed, 40009ULL + ell)};
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_m = 0;
        for (std::size_t m = 0; m < in.lip_grid.size(); ++m) {
            const DiagonalResidualMap* net = pairing == PairingMode::TrainedClean
                                                 ? in.nets_clean[m]
                                                 : in.nets_matched[m][ell];
            const double mse = mse_reco(*net, *in.a_tilde, in.test_set, level_noise, in.k_max);
            out.table.append(in.lip_grid[m], delta, metric, mse);
            if (mse < best) {
                best = mse;
                best_m = m;
            }
        }
        out.argmin_lip_per_delta[ell] = best_m;
    }
    return out;
}

bool monotone_non_increasing(std::span<const std::size_t> seq, std::size_t allowed) {
    std::size_t violations = 0;
    for (std::size_t i = 1; i < seq.size(); ++i)
        if (seq[i] > seq[i - 1]) ++violations;
    return violations <= allowed;
}

}  // namespace iresnet

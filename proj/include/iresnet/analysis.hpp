#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "iresnet/iresnet_core.hpp"
#include "iresnet/linalg.hpp"
#include "iresnet/operator_core.hpp"
#include "iresnet/spectral_filters.hpp"

namespace iresnet {

/// Local approximation error ||phi(x) - Ax|| with A applied through the
/// singular system.
double local_approx_error(const ResidualMap& net, const SingularSystem& system,
                          std::span<const double> x);

struct ApproxErrorRecord {
    double lip = 0.0;
    double e_mean = 0.0;   // dataset mean of ||phi(x_i) - A x_i||
    Vector e_x;            // per-sample errors
};

struct DecayFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    bool zero_error = false;  // all errors at numerical zero: slope = +inf sentinel
};

/// Least squares line on (log(1-L), log error). Grid points with
/// error <= 1e-13 are excluded; throws DegenerateGrid when fewer than 3
/// usable points remain.
DecayFit loglog_decay_fit(std::span<const double> lip_grid, std::span<const double> errors);

/// Tail sum sum_{j: sigma_j^2 <= beta} <x, v_j>^2.
double source_tail(std::span<const double> x, const SingularSystem& system, double beta);

struct ParamChoice {
    double lip = 0.0;
    bool clamped = false;
};

/// A-priori rule 1 - L(delta) ~ c * delta^{1/(1+eps)}, clamped into
/// [1e-6, 0.999999] so that L stays in (0, 1).
ParamChoice param_choice_rule(double delta, double eps, double c);

/// MSE_reco = (1/N) sum_i ||x_i - phi^{-1}(A x_i + eta_i)||^2 with fresh noise
/// per sample from the model seed and the fixed-point inverse run for k_max
/// iterations. Noise is added in data space (dim = rows of Atilde); inversion
/// of diagonal nets runs per mode.
double mse_reco(const DiagonalResidualMap& net, const Matrix& a_tilde,
                std::span<const Vector> test_set, const NoiseModel& noise, int k_max = 30);

/// Same metric through a filter-spec reconstruction instead of inversion.
double mse_reco_filter(const FilterSpec& filter, const SingularSystem& system,
                       const Matrix& a_tilde, std::span<const Vector> test_set,
                       const NoiseModel& noise);

/// Averaged standard deviation of the coefficients: per-mode sample std
/// ((N-1) divisor) over samples, then mean over modes.
double std_mnist(const Matrix& coefficients);

// --- study results ---------------------------------------------------------

struct StudyRow {
    double lip = 0.0;
    double delta = 0.0;
    std::string metric;
    double value = 0.0;
};

struct StudyResult {
    std::vector<StudyRow> rows;
    std::map<std::string, std::string> metadata;

    void append(double lip, double delta, const std::string& metric, double value);
};

enum class PairingMode { TrainedClean, NoiseMatched };

struct ConvergenceStudyInput {
    // One trained net per Lipschitz budget. For NoiseMatched pairing, nets
    // keyed additionally by noise level index.
    std::vector<double> lip_grid;
    std::vector<double> delta_grid;          // absolute noise std per level
    std::vector<const DiagonalResidualMap*> nets_clean;            // size = lip_grid
    std::vector<std::vector<const DiagonalResidualMap*>> nets_matched;  // [lip][delta]
    const Matrix* a_tilde = nullptr;
    std::span<const Vector> test_set;
    std::uint64_t noise_seed = 0;
    int k_max = 30;
};

struct ConvergenceStudyOutput {
    StudyResult table;
    // argmin over the L grid per delta level (index into lip_grid).
    std::vector<std::size_t> argmin_lip_per_delta;
};

ConvergenceStudyOutput convergence_study(const ConvergenceStudyInput& in, PairingMode pairing);

/// True when the sequence is non-increasing with at most `allowed` violations.
bool monotone_non_increasing(std::span<const std::size_t> seq, std::size_t allowed = 1);

}  // namespace iresnet

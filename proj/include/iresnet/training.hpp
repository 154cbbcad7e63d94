#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "iresnet/iresnet_core.hpp"
#include "iresnet/linalg.hpp"
#include "iresnet/operator_core.hpp"

namespace iresnet {

struct AdamParams {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct TrainConfig {
    double lip = 0.9;            // Lipschitz budget L
    std::size_t epochs = 40;
    std::size_t batch_size = 128;
    AdamParams adam;
    double lr_decay = 0.5;       // multiplicative factor
    std::size_t lr_interval = 0; // epochs between decays; 0 -> epochs/5
    std::uint64_t seed = 0;
    double noise_delta = 0.0;    // target noise level; 0 for clean targets

    std::size_t decay_interval() const {
        if (lr_interval > 0) return lr_interval;
        return std::max<std::size_t>(1, epochs / 5);
    }
};

/// Dataset projected into the singular basis: coefficients(j, i) = <x_i, v_j>.
/// Targets (sigma_j^2 * c + noise) are built once per training run.
struct TrainSet {
    Matrix coefficients;             // n x N
    std::optional<Matrix> targets;   // n x N

    std::size_t n_modes() const { return coefficients.rows(); }
    std::size_t n_samples() const { return coefficients.cols(); }
};

/// targets(j, i) = sigma_j^2 * coefficients(j, i) + eta, eta ~ N(0, delta^2)
/// drawn per sample per mode from the model seed. delta = 0 gives exact
/// A-images.
Matrix make_targets(const SingularSystem& system, const Matrix& coefficients,
                    const NoiseModel& noise);

/// Mean over the batch of ||phi(x_i) - target_i||^2.
double approx_loss(const ResidualMap& net, std::span<const Vector> xs,
                   std::span<const Vector> targets);

/// Scalar per-mode loss of a diagonal net: (1/N) sum_i (t_i - g_j(t_i) - y_i)^2.
double approx_loss_mode(const DiagonalResidualMap& net, std::size_t j,
                        std::span<const double> ts, std::span<const double> ys);

// --- Adam ------------------------------------------------------------------

struct AdamState {
    Vector m, v;
    std::uint64_t step = 0;

    explicit AdamState(std::size_t size = 0) : m(size, 0.0), v(size, 0.0) {}
    void write(std::ostream& os) const;
    static AdamState read(std::istream& is);
};

/// One in-place Adam update with bias correction; deterministic.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamParams& hp, double lr);

// --- backprop through a subnetwork ------------------------------------------

struct SubnetForwardCache {
    double input = 0.0;
    Vector a1, h1, a2, h2;  // pre/post activation of the two hidden layers
    double out = 0.0;
};

struct SubnetGrads {
    // Gradients w.r.t. the raw (unconstrained) weights and biases, layer order
    // matching Subnetwork::layers. The clip scale is treated as a constant
    // within the step (straight-through).
    std::array<Vector, 3> w;
    std::array<Vector, 3> b;

    explicit SubnetGrads(const Subnetwork& s);
    void reset();
    void scale(double f);
};

double subnet_forward_cached(const Subnetwork& s, double t, SubnetForwardCache& cache);

/// Accumulates gradients of (upstream * out) into grads.
void backprop_subnetwork(const Subnetwork& s, const SubnetForwardCache& cache, double upstream,
                         SubnetGrads& grads);

// --- trainers ----------------------------------------------------------------

struct LossTrace {
    // per_mode[j][e] = mean loss of mode j at epoch e; aggregate = sum over modes.
    std::vector<Vector> per_mode;
    Vector aggregate() const;
};

/// Fits every subnetwork of a diagonal net independently (in parallel across
/// modes) to the 1-D regression t -> t - target. The spectral
/// reparameterization is refreshed after every optimizer step and certified
/// (converged power iteration, re-clip) at exit. Throws NonFiniteLoss when a
/// mode diverges. A zero-epoch call returns the net untouched.
LossTrace train_diagonal(DiagonalResidualNet& net, const TrainSet& set, const TrainConfig& cfg);

struct OneParamFit {
    double k = 0.0;
    Vector loss_per_epoch;
};

/// Trains f = k (Id - A) with |k| <= L by projected Adam.
OneParamFit train_one_param(const SingularSystem& system, const TrainSet& set,
                            const TrainConfig& cfg);

struct AffineFit {
    Vector w, b;
    Vector loss_per_epoch;
};

/// Trains the affine diagonal architecture f_j(t) = w_j t + b_j with |w_j| <= L.
AffineFit train_affine(const SingularSystem& system, const TrainSet& set,
                       const TrainConfig& cfg);

}  // namespace iresnet

#include "iresnet/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <istream>
#include <mutex>
#include <numeric>
#include <ostream>

#include "iresnet/errors.hpp"
#include "iresnet/parallel.hpp"

namespace iresnet {

namespace {

void check_train_config(const TrainConfig& cfg) {
    if (cfg.lip < 0.0 || cfg.lip >= 1.0) throw Error("TrainConfig: L must be in [0,1)");
    if (cfg.adam.lr <= 0.0) throw Error("TrainConfig: lr must be positive");
    if (cfg.adam.beta1 <= 0.0 || cfg.adam.beta1 >= 1.0 || cfg.adam.beta2 <= 0.0 ||
        cfg.adam.beta2 >= 1.0)
        throw Error("TrainConfig: betas must be in (0,1)");
}

}  // namespace

Matrix make_targets(const SingularSystem& system, const Matrix& coefficients,
                    const NoiseModel& noise) {
    if (coefficients.rows() != system.n)
        throw DimMismatch("make_targets: coefficient rows != modes");
    Matrix targets(coefficients.rows(), coefficients.cols());
    NoiseStream stream(noise);
    for (std::size_t j = 0; j < coefficients.rows(); ++j) {
        const double ss = system.sigma_sq[j];
        for (std::size_t i = 0; i < coefficients.cols(); ++i)
            targets(j, i) = ss * coefficients(j, i) + stream.sample_one();
    }
    return targets;
}

double approx_loss(const ResidualMap& net, std::span<const Vector> xs,
                   std::span<const Vector> targets) {
    if (xs.size() != targets.size()) throw DimMismatch("approx_loss: batch sizes differ");
    if (xs.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        Vector phi = forward(net, xs[i]);
        if (phi.size() != targets[i].size()) throw DimMismatch("approx_loss: target size");
        double s = 0.0;
        for (std::size_t k = 0; k < phi.size(); ++k) {
            const double d = phi[k] - targets[i][k];
            s += d * d;
        }
        total += s;
    }
    return total / static_cast<double>(xs.size());
}

double approx_loss_mode(const DiagonalResidualMap& net, std::size_t j,
                        std::span<const double> ts, std::span<const double> ys) {
    if (ts.size() != ys.size()) throw DimMismatch("approx_loss_mode");
    if (ts.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double d = net.forward_mode(j, ts[i]) - ys[i];
        total += d * d;
    }
    return total / static_cast<double>(ts.size());
}

void AdamState::write(std::ostream& os) const {
    const std::uint64_t size = m.size();
    os.write(reinterpret_cast<const char*>(&size), sizeof size);
    os.write(reinterpret_cast<const char*>(&step), sizeof step);
    os.write(reinterpret_cast<const char*>(m.data()),
             static_cast<std::streamsize>(m.size() * sizeof(double)));
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
}

AdamState AdamState::read(std::istream& is) {
    std::uint64_t size = 0;
    if (!is.read(reinterpret_cast<char*>(&size), sizeof size)) throw TruncatedFile("adam state");
    AdamState st(size);
    if (!is.read(reinterpret_cast<char*>(&st.step), sizeof st.step))
        throw TruncatedFile("adam state");
    if (!is.read(reinterpret_cast<char*>(st.m.data()),
                 static_cast<std::streamsize>(size * sizeof(double))))
        throw TruncatedFile("adam state");
    if (!is.read(reinterpret_cast<char*>(st.v.data()),
                 static_cast<std::streamsize>(size * sizeof(double))))
        throw TruncatedFile("adam state");
    return st;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamParams& hp, double lr) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw DimMismatch("adam_step");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = hp.beta1 * state.m[i] + (1.0 - hp.beta1) * grads[i];
        state.v[i] = hp.beta2 * state.v[i] + (1.0 - hp.beta2) * grads[i] * grads[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + hp.eps);
    }
}

SubnetGrads::SubnetGrads(const Subnetwork& s) {
    for (std::size_t l = 0; l < 3; ++l) {
        w[l].assign(s.layers[l].raw.data().size(), 0.0);
        b[l].assign(s.layers[l].bias.size(), 0.0);
    }
}

void SubnetGrads::reset() {
    for (auto& g : w) std::fill(g.begin(), g.end(), 0.0);
    for (auto& g : b) std::fill(g.begin(), g.end(), 0.0);
}

void SubnetGrads::scale(double f) {
    for (auto& g : w) scale_inplace(g, f);
    for (auto& g : b) scale_inplace(g, f);
}

double subnet_forward_cached(const Subnetwork& s, double t, SubnetForwardCache& cache) {
    constexpr std::size_t h = Subnetwork::kHidden;
    cache.input = t;
    cache.a1.resize(h);
    cache.h1.resize(h);
    cache.a2.resize(h);
    cache.h2.resize(h);

    const Matrix& w1 = s.layers[0].weight;
    for (std::size_t i = 0; i < h; ++i) {
        cache.a1[i] = w1(i, 0) * t + s.layers[0].bias[i];
        cache.h1[i] = cache.a1[i] > 0.0 ? cache.a1[i] : 0.0;
    }
    const Matrix& w2 = s.layers[1].weight;
    for (std::size_t i = 0; i < h; ++i) {
        const double* row = w2.row_ptr(i);
        double acc = s.layers[1].bias[i];
        for (std::size_t k = 0; k < h; ++k) acc += row[k] * cache.h1[k];
        cache.a2[i] = acc;
        cache.h2[i] = acc > 0.0 ? acc : 0.0;
    }
    const Matrix& w3 = s.layers[2].weight;
    double out = s.layers[2].bias[0];
    for (std::size_t k = 0; k < h; ++k) out += w3(0, k) * cache.h2[k];
    cache.out = out;
    return out;
}

void backprop_subnetwork(const Subnetwork& s, const SubnetForwardCache& cache, double upstream,
                         SubnetGrads& grads) {
    constexpr std::size_t h = Subnetwork::kHidden;
    const double s3 = s.layers[2].clip_scale;
    const double s2 = s.layers[1].clip_scale;
    const double s1 = s.layers[0].clip_scale;

    // layer 3: out = w3 . h2 + b3
    grads.b[2][0] += upstream;
    Vector dh2(h);
    const Matrix& w3 = s.layers[2].weight;
    for (std::size_t k = 0; k < h; ++k) {
        grads.w[2][k] += s3 * upstream * cache.h2[k];
        dh2[k] = w3(0, k) * upstream;
    }

    // layer 2
    Vector da2(h);
    for (std::size_t i = 0; i < h; ++i) da2[i] = cache.a2[i] > 0.0 ? dh2[i] : 0.0;
    const Matrix& w2 = s.layers[1].weight;
    Vector dh1(h, 0.0);
    for (std::size_t i = 0; i < h; ++i) {
        if (da2[i] == 0.0) continue;
        grads.b[1][i] += da2[i];
        const double* row = w2.row_ptr(i);
        double* grow = grads.w[1].data() + i * h;
        for (std::size_t k = 0; k < h; ++k) {
            grow[k] += s2 * da2[i] * cache.h1[k];
            dh1[k] += row[k] * da2[i];
        }
    }

    // layer 1: a1 = w1 * t + b1
    for (std::size_t i = 0; i < h; ++i) {
        const double da1 = cache.a1[i] > 0.0 ? dh1[i] : 0.0;
        grads.b[0][i] += da1;
        grads.w[0][i] += s1 * da1 * cache.input;
    }
}

namespace {

struct ModeTrainer {
    Subnetwork* subnet;
    const double* ts;
    const double* ys;
    std::size_t n_samples;
    const TrainConfig* cfg;
    std::uint64_t mode_seed;
    Vector* epoch_losses;

    void run() {
        Subnetwork& s = *subnet;
        Rng rng(mode_seed);
        std::array<AdamState, 3> st_w{AdamState(s.layers[0].raw.data().size()),
                                      AdamState(s.layers[1].raw.data().size()),
                                      AdamState(s.layers[2].raw.data().size())};
        std::array<AdamState, 3> st_b{AdamState(s.layers[0].bias.size()),
                                      AdamState(s.layers[1].bias.size()),
                                      AdamState(s.layers[2].bias.size())};
        SubnetGrads grads(s);
        SubnetForwardCache cache;
        std::vector<std::size_t> order(n_samples);
        std::iota(order.begin(), order.end(), 0);

        const std::size_t bs = std::max<std::size_t>(1, cfg->batch_size);
        const std::size_t interval = cfg->decay_interval();
        double lr = cfg->adam.lr;

        for (std::size_t e = 0; e < cfg->epochs; ++e) {
            if (e > 0 && e % interval == 0) lr *= cfg->lr_decay;
            // Fisher-Yates from this mode's stream.
            for (std::size_t i = n_samples; i > 1; --i) {
                const std::size_t k = rng.index(i);
                std::swap(order[i - 1], order[k]);
            }
            double loss_sum = 0.0;
            for (std::size_t start = 0; start < n_samples; start += bs) {
                const std::size_t stop = std::min(n_samples, start + bs);
                grads.reset();
                double batch_loss = 0.0;
                for (std::size_t b = start; b < stop; ++b) {
                    const std::size_t i = order[b];
                    const double out = subnet_forward_cached(s, ts[i], cache);
                    const double resid = ts[i] - out - ys[i];  // phi(t) - target
                    batch_loss += resid * resid;
                    // d/d out of resid^2 = -2 resid
                    backprop_subnetwork(s, cache, -2.0 * resid, grads);
                }
                const double inv = 1.0 / static_cast<double>(stop - start);
                grads.scale(inv);
                loss_sum += batch_loss;
                for (std::size_t l = 0; l < 3; ++l) {
                    adam_step(s.layers[l].raw.data(), grads.w[l], st_w[l], cfg->adam, lr);
                    adam_step(s.layers[l].bias, grads.b[l], st_b[l], cfg->adam, lr);
                    s.layers[l].refresh(1);
                }
            }
            const double epoch_loss = loss_sum / static_cast<double>(n_samples);
            (*epoch_losses)[e] = epoch_loss;
            if (!std::isfinite(epoch_loss) || epoch_loss > 1e6)
                throw NonFiniteLoss("mode diverged at epoch " + std::to_string(e));
        }
        s.certify();
    }
};

}  // namespace

Vector LossTrace::aggregate() const {
    if (per_mode.empty()) return {};
    Vector agg(per_mode.front().size(), 0.0);
    for (const auto& m : per_mode)
        for (std::size_t e = 0; e < m.size(); ++e) agg[e] += m[e];
    return agg;
}

LossTrace train_diagonal(DiagonalResidualNet& net, const TrainSet& set, const TrainConfig& cfg) {
    check_train_config(cfg);
    const std::size_t n = net.n_modes();
    if (set.coefficients.rows() != n) throw DimMismatch("train_diagonal: modes");
    if (!set.targets || set.targets->rows() != n ||
        set.targets->cols() != set.coefficients.cols())
        throw DimMismatch("train_diagonal: targets missing or mismatched");

    LossTrace trace;
    trace.per_mode.assign(n, Vector(cfg.epochs, 0.0));
    if (cfg.epochs == 0) return trace;

    std::atomic<bool> failed{false};
    std::string first_error;
    std::mutex err_mutex;

    parallel_for(n, [&](std::size_t j) {
        if (failed.load(std::memory_order_relaxed)) return;
        ModeTrainer t;
        t.subnet = &net.subnet(j);
        t.ts = set.coefficients.row_ptr(j);
        t.ys = set.targets->row_ptr(j);
        t.n_samples = set.coefficients.cols();
        t.cfg = &cfg;
        t.mode_seed = split_seed(cfg.seed, 1000003ULL + j);
        t.epoch_losses = &trace.per_mode[j];
        try {
            t.run();
        } catch (const std::exception& e) {
            std::lock_guard<std::mutex> lock(err_mutex);
            if (!failed.exchange(true)) first_error = e.what();
        }
    });
    if (failed.load()) throw NonFiniteLoss("train_diagonal: " + first_error);
    return trace;
}

OneParamFit train_one_param(const SingularSystem& system, const TrainSet& set,
                            const TrainConfig& cfg) {
    check_train_config(cfg);
    if (set.coefficients.rows() != system.n) throw DimMismatch("train_one_param");
    if (!set.targets) throw DimMismatch("train_one_param: targets missing");
    const Matrix& c = set.coefficients;
    const Matrix& y = *set.targets;
    const std::size_t n_samples = c.cols();
    const std::size_t n = system.n;

    OneParamFit fit;
    fit.loss_per_epoch.assign(cfg.epochs, 0.0);
    double k = 0.0;
    AdamState st(1);
    Rng rng(split_seed(cfg.seed, 7));
    std::vector<std::size_t> order(n_samples);
    std::iota(order.begin(), order.end(), 0);
    const std::size_t bs = std::max<std::size_t>(1, cfg.batch_size);
    const std::size_t interval = cfg.decay_interval();
    double lr = cfg.adam.lr;

    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        if (e > 0 && e % interval == 0) lr *= cfg.lr_decay;
        for (std::size_t i = n_samples; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < n_samples; start += bs) {
            const std::size_t stop = std::min(n_samples, start + bs);
            double grad = 0.0, batch_loss = 0.0;
            for (std::size_t b = start; b < stop; ++b) {
                const std::size_t i = order[b];
                for (std::size_t j = 0; j < n; ++j) {
                    const double decay = 1.0 - system.sigma_sq[j];
                    const double resid = c(j, i) - k * decay * c(j, i) - y(j, i);
                    batch_loss += resid * resid;
                    grad += -2.0 * resid * decay * c(j, i);
                }
            }
            const double inv = 1.0 / static_cast<double>(stop - start);
            grad *= inv;
            loss_sum += batch_loss;
            double params[1] = {k};
            double grads[1] = {grad};
            adam_step(std::span<double>(params, 1), std::span<const double>(grads, 1), st,
                      cfg.adam, lr);
            k = std::clamp(params[0], -cfg.lip, cfg.lip);
        }
        fit.loss_per_epoch[e] = loss_sum / static_cast<double>(n_samples);
        if (!std::isfinite(fit.loss_per_epoch[e]) || fit.loss_per_epoch[e] > 1e6)
            throw NonFiniteLoss("train_one_param diverged");
    }
    fit.k = k;
    return fit;
}

AffineFit train_affine(const SingularSystem& system, const TrainSet& set,
                       const TrainConfig& cfg) {
    check_train_config(cfg);
    if (set.coefficients.rows() != system.n) throw DimMismatch("train_affine");
    if (!set.targets) throw DimMismatch("train_affine: targets missing");
    const Matrix& c = set.coefficients;
    const Matrix& y = *set.targets;
    const std::size_t n_samples = c.cols();
    const std::size_t n = system.n;

    AffineFit fit;
    fit.w.assign(n, 0.0);
    fit.b.assign(n, 0.0);
    fit.loss_per_epoch.assign(cfg.epochs, 0.0);

    std::vector<AdamState> st(n, AdamState(2));
    Rng rng(split_seed(cfg.seed, 11));
    std::vector<std::size_t> order(n_samples);
    std::iota(order.begin(), order.end(), 0);
    const std::size_t bs = std::max<std::size_t>(1, cfg.batch_size);
    const std::size_t interval = cfg.decay_interval();
    double lr = cfg.adam.lr;

    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        if (e > 0 && e % interval == 0) lr *= cfg.lr_decay;
        for (std::size_t i = n_samples; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < n_samples; start += bs) {
            const std::size_t stop = std::min(n_samples, start + bs);
            const double inv = 1.0 / static_cast<double>(stop - start);
            for (std::size_t j = 0; j < n; ++j) {
                double gw = 0.0, gb = 0.0, batch_loss = 0.0;
                for (std::size_t bi = start; bi < stop; ++bi) {
                    const std::size_t i = order[bi];
                    const double t = c(j, i);
                    const double resid = t - fit.w[j] * t - fit.b[j] - y(j, i);
                    batch_loss += resid * resid;
                    gw += -2.0 * resid * t;
                    gb += -2.0 * resid;
                }
                double params[2] = {fit.w[j], fit.b[j]};
                double grads[2] = {gw * inv, gb * inv};
                adam_step(std::span<double>(params, 2), std::span<const double>(grads, 2), st[j],
                          cfg.adam, lr);
                fit.w[j] = std::clamp(params[0], -cfg.lip, cfg.lip);
                fit.b[j] = params[1];
                loss_sum += batch_loss;
            }
        }
        fit.loss_per_epoch[e] = loss_sum / static_cast<double>(n_samples);
        if (!std::isfinite(fit.loss_per_epoch[e]) || fit.loss_per_epoch[e] > 1e6)
            throw NonFiniteLoss("train_affine diverged");
    }
    return fit;
}

}  // namespace iresnet

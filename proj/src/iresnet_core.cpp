#include "iresnet/iresnet_core.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "iresnet/errors.hpp"

namespace iresnet {

LipschitzLayer::LipschitzLayer(std::size_t out_dim, std::size_t in_dim, double lip_budget,
                               Rng& init_rng)
    : raw(out_dim, in_dim), bias(out_dim, 0.0), budget(lip_budget) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
    for (double& w : raw.data()) w = init_rng.uniform(-bound, bound);
    pi_u.resize(out_dim);
    pi_v.resize(in_dim);
    for (double& x : pi_u) x = init_rng.normal();
    for (double& x : pi_v) x = init_rng.normal();
    const double nu = norm2(pi_u), nv = norm2(pi_v);
    if (nu > 0) scale_inplace(pi_u, 1.0 / nu);
    if (nv > 0) scale_inplace(pi_v, 1.0 / nv);
    certify();
}

void LipschitzLayer::refresh(int pi_iters) {
    for (int it = 0; it < pi_iters; ++it) {
        Vector v = raw.apply_transpose(pi_u);
        double nv = norm2(v);
        if (nv > 0) {
            scale_inplace(v, 1.0 / nv);
            pi_v = std::move(v);
        }
        Vector u = raw.apply(pi_v);
        double nu = norm2(u);
        if (nu > 0) {
            scale_inplace(u, 1.0 / nu);
            pi_u = std::move(u);
        }
    }
    sigma_hat = dot(pi_u, raw.apply(pi_v));
    clip_scale = budget / std::max(sigma_hat, budget);
    weight = raw;
    weight.scale(clip_scale);
}

namespace {
// Certified clips inflate the power-iteration estimate by this relative margin
// so that the true spectral norm stays within budget even when the iteration
// stops a few ulps short of sigma_max.
constexpr double kCertifyMargin = 3e-8;
}  // namespace

double LipschitzLayer::certify(int max_iters, double rel_tol) {
    double prev = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        Vector v = raw.apply_transpose(pi_u);
        double nv = norm2(v);
        if (nv > 0) {
            scale_inplace(v, 1.0 / nv);
            pi_v = std::move(v);
        }
        Vector u = raw.apply(pi_v);
        double nu = norm2(u);
        if (nu > 0) {
            scale_inplace(u, 1.0 / nu);
            pi_u = std::move(u);
        }
        const double sigma = dot(pi_u, raw.apply(pi_v));
        if (it > 0 && std::fabs(sigma - prev) <= rel_tol * std::max(sigma, 1e-300)) {
            prev = sigma;
            break;
        }
        prev = sigma;
    }
    sigma_hat = prev;
    clip_scale = budget / std::max(sigma_hat * (1.0 + kCertifyMargin), budget);
    weight = raw;
    weight.scale(clip_scale);
    return sigma_hat * clip_scale;
}

void LipschitzLayer::reclip_from_state() {
    sigma_hat = dot(pi_u, raw.apply(pi_v));
    clip_scale = budget / std::max(sigma_hat * (1.0 + kCertifyMargin), budget);
    weight = raw;
    weight.scale(clip_scale);
}

Vector LipschitzLayer::apply(std::span<const double> x) const {
    Vector y = weight.apply(x);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += bias[i];
    return y;
}

Subnetwork::Subnetwork(double lip_budget, Rng& init_rng) {
    layers[0] = LipschitzLayer(kHidden, 1, 1.0, init_rng);
    layers[1] = LipschitzLayer(kHidden, kHidden, 1.0, init_rng);
    layers[2] = LipschitzLayer(1, kHidden, lip_budget, init_rng);
}

double Subnetwork::eval(double t) const {
    const double in[1] = {t};
    Vector h = layers[0].apply(std::span<const double>(in, 1));
    for (double& x : h) x = x > 0.0 ? x : 0.0;
    h = layers[1].apply(h);
    for (double& x : h) x = x > 0.0 ? x : 0.0;
    h = layers[2].apply(h);
    return h[0];
}

double Subnetwork::budget() const {
    return layers[0].budget * layers[1].budget * layers[2].budget;
}

std::size_t Subnetwork::param_count() const {
    std::size_t count = 0;
    for (const auto& l : layers) count += l.raw.data().size() + l.bias.size();
    return count;
}

void Subnetwork::refresh(int pi_iters) {
    for (auto& l : layers) l.refresh(pi_iters);
}

double Subnetwork::certify(int max_iters, double rel_tol) {
    double prod = 1.0;
    for (auto& l : layers) prod *= l.certify(max_iters, rel_tol);
    return prod;
}

Vector DiagonalResidualMap::apply(std::span<const double> x) const {
    if (x.size() != dim()) throw DimMismatch("DiagonalResidualMap::apply");
    const auto& sys = basis();
    Vector c = sys.project(x);
    Vector g(c.size());
    for (std::size_t j = 0; j < c.size(); ++j) g[j] = mode_value(j, c[j]);
    Vector out = sys.assemble(g);
    const double gain = null_gain();
    if (gain != 0.0) {
        Vector range_part = sys.assemble(c);
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] += gain * (x[i] - range_part[i]);
    }
    return out;
}

double DiagonalResidualMap::invert_mode(std::size_t j, double z, int k_max, double tol) const {
    const double lip = lipschitz_budget();
    if (lip >= 1.0) throw BudgetNotContractive("invert_mode: L >= 1");
    double x = z;
    const double stop = tol * (1.0 - lip);
    for (int k = 0; k < k_max; ++k) {
        const double next = mode_value(j, x) + z;
        const double step = std::fabs(next - x);
        x = next;
        if (step < stop) break;
    }
    return x;
}

DiagonalResidualNet::DiagonalResidualNet(std::shared_ptr<const SingularSystem> basis,
                                         double lip_budget, std::uint64_t init_seed)
    : DiagonalResidualMap(std::move(basis)), lip_budget_(lip_budget) {
    subnets_.reserve(n_modes());
    for (std::size_t j = 0; j < n_modes(); ++j) {
        Rng rng(split_seed(init_seed, j));
        subnets_.emplace_back(lip_budget_, rng);
    }
}

double DiagonalResidualNet::certify(int max_iters, double rel_tol) {
    double worst = 0.0;
    for (auto& s : subnets_) worst = std::max(worst, s.certify(max_iters, rel_tol));
    return worst;
}

DenseResidualNet::DenseResidualNet(std::vector<std::size_t> layer_dims,
                                   std::vector<double> budgets, std::uint64_t init_seed) {
    if (layer_dims.size() < 2 || budgets.size() != layer_dims.size() - 1)
        throw DimMismatch("DenseResidualNet: dims/budgets");
    if (layer_dims.front() != layer_dims.back())
        throw DimMismatch("DenseResidualNet: residual function must map dim -> dim");
    Rng rng(init_seed);
    for (std::size_t i = 0; i + 1 < layer_dims.size(); ++i)
        layers_.emplace_back(layer_dims[i + 1], layer_dims[i], budgets[i], rng);
}

std::size_t DenseResidualNet::dim() const { return layers_.front().in_dim(); }

double DenseResidualNet::lipschitz_budget() const {
    double prod = 1.0;
    for (const auto& l : layers_) prod *= l.budget;
    return prod;
}

Vector DenseResidualNet::apply(std::span<const double> x) const {
    if (x.size() != dim()) throw DimMismatch("DenseResidualNet::apply");
    Vector h(x.begin(), x.end());
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        h = layers_[i].apply(h);
        if (i + 1 < layers_.size())
            for (double& v : h) v = v > 0.0 ? v : 0.0;
    }
    return h;
}

double DenseResidualNet::certify(int max_iters, double rel_tol) {
    double prod = 1.0;
    for (auto& l : layers_) prod *= l.certify(max_iters, rel_tol);
    return prod;
}

LinearResidual::LinearResidual(Matrix m, Vector c, double budget)
    : m_(std::move(m)), c_(std::move(c)), budget_(budget) {
    if (m_.rows() != m_.cols() || c_.size() != m_.rows())
        throw DimMismatch("LinearResidual: square matrix and matching offset required");
}

Vector LinearResidual::apply(std::span<const double> x) const {
    if (x.size() != dim()) throw DimMismatch("LinearResidual::apply");
    Vector y = m_.apply(x);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += c_[i];
    return y;
}

Vector forward(const ResidualMap& f, std::span<const double> x) {
    if (x.size() != f.dim()) throw DimMismatch("forward");
    Vector fx = f.apply(x);
    for (std::size_t i = 0; i < fx.size(); ++i) fx[i] = x[i] - fx[i];
    return fx;
}

InvertResult invert(const ResidualMap& f, std::span<const double> z, int k_max, double tol) {
    if (z.size() != f.dim()) throw DimMismatch("invert");
    const double lip = f.lipschitz_budget();
    if (lip >= 1.0)
        throw BudgetNotContractive("invert: budget " + std::to_string(lip) + " >= 1");

    InvertResult res;
    res.x.assign(z.begin(), z.end());
    const double stop = tol * (1.0 - lip);
    for (int k = 0; k < k_max; ++k) {
        Vector next = f.apply(res.x);
        for (std::size_t i = 0; i < next.size(); ++i) next[i] += z[i];
        const double step = norm2_diff(next, res.x);
        res.x = std::move(next);
        ++res.iters;
        if (step < stop) break;
    }
    res.residual = norm2_diff(forward(f, res.x), z);
    return res;
}

Vector reconstruct(const ResidualMap& f, const Matrix& a_tilde, std::span<const double> y,
                   int k_max, double tol) {
    Vector z = a_tilde.apply_transpose(y);
    return invert(f, z, k_max, tol).x;
}

Vector invert_mode_coefficients(const DiagonalResidualMap& f, std::span<const double> z_coeffs,
                                int k_max, double tol) {
    if (z_coeffs.size() != f.n_modes()) throw DimMismatch("invert_mode_coefficients");
    const double lip = f.lipschitz_budget();
    if (lip >= 1.0) throw BudgetNotContractive("invert_mode_coefficients: L >= 1");
    Vector x(z_coeffs.size());
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = f.invert_mode(j, z_coeffs[j], k_max, tol);
    return x;
}

InvertResult invert_diagonal(const DiagonalResidualMap& f, std::span<const double> z, int k_max,
                             double tol) {
    if (z.size() != f.dim()) throw DimMismatch("invert_diagonal");
    const auto& sys = f.basis();
    Vector zc = sys.project(z);
    Vector xc = invert_mode_coefficients(f, zc, k_max, tol);

    InvertResult res;
    res.x = sys.assemble(xc);
    // Orthogonal-complement part of z: fixed point there is z/(1-null_gain).
    Vector z_range = sys.assemble(zc);
    const double gain = f.null_gain();
    for (std::size_t i = 0; i < res.x.size(); ++i)
        res.x[i] += (z[i] - z_range[i]) / (1.0 - gain);
    res.iters = k_max;
    res.residual = norm2_diff(forward(f, res.x), z);
    return res;
}

FilterSample extract_filter(const DiagonalResidualMap& net, std::size_t j, double s, int k_max,
                            double tol) {
    if (j >= net.n_modes()) throw DimMismatch("extract_filter: mode index out of range");
    FilterSample out;
    out.bias = net.invert_mode(j, 0.0, k_max, tol);
    if (s == 0.0) {
        out.r = 1.0;  // limit convention; any continuous extension agrees after bias removal
        return out;
    }
    out.r = (net.invert_mode(j, s, k_max, tol) - out.bias) / s;
    return out;
}

double empirical_lipschitz(const ResidualMap& f, std::size_t n_pairs, Rng& rng, double box) {
    const std::size_t d = f.dim();
    double worst = 0.0;
    Vector x1(d), x2(d);
    for (std::size_t p = 0; p < n_pairs; ++p) {
        for (std::size_t i = 0; i < d; ++i) {
            x1[i] = rng.uniform(-box, box);
            x2[i] = rng.uniform(-box, box);
        }
        const double dist = norm2_diff(x1, x2);
        if (dist < 1e-12) continue;
        const double ratio = norm2_diff(f.apply(x1), f.apply(x2)) / dist;
        worst = std::max(worst, ratio);
    }
    return worst;
}

double empirical_lipschitz_mode(const DiagonalResidualMap& f, std::size_t j, std::size_t n_pairs,
                                Rng& rng, double box) {
    double worst = 0.0;
    for (std::size_t p = 0; p < n_pairs; ++p) {
        const double t1 = rng.uniform(-box, box);
        const double t2 = rng.uniform(-box, box);
        if (std::fabs(t1 - t2) < 1e-12) continue;
        const double ratio =
            std::fabs(f.mode_value(j, t1) - f.mode_value(j, t2)) / std::fabs(t1 - t2);
        worst = std::max(worst, ratio);
    }
    return worst;
}

// --- checkpoint io ------------------------------------------------------------

namespace {

void write_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_u64(std::ostream& os, std::uint64_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_f64(std::ostream& os, double v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_f64s(std::ostream& os, const Vector& v) {
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::uint32_t read_u32(std::istream& is) {
    std::uint32_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw TruncatedFile("checkpoint");
    return v;
}
std::uint64_t read_u64(std::istream& is) {
    std::uint64_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw TruncatedFile("checkpoint");
    return v;
}
double read_f64(std::istream& is) {
    double v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw TruncatedFile("checkpoint");
    return v;
}
void read_f64s(std::istream& is, Vector& v) {
    if (!is.read(reinterpret_cast<char*>(v.data()),
                 static_cast<std::streamsize>(v.size() * sizeof(double))))
        throw TruncatedFile("checkpoint");
}

}  // namespace

void save_checkpoint(const DiagonalResidualNet& net, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open checkpoint for writing: " + path);
    os.write(kCheckpointMagic, static_cast<std::streamsize>(std::strlen(kCheckpointMagic)));
    write_u64(os, net.n_modes());
    write_f64(os, net.lipschitz_budget());
    for (std::size_t j = 0; j < net.n_modes(); ++j) {
        const Subnetwork& s = net.subnet(j);
        for (const LipschitzLayer& l : s.layers) {
            write_u32(os, static_cast<std::uint32_t>(l.out_dim()));
            write_u32(os, static_cast<std::uint32_t>(l.in_dim()));
            write_f64(os, l.budget);
            write_f64s(os, l.raw.data());
            write_f64s(os, l.bias);
            write_f64s(os, l.pi_u);
            write_f64s(os, l.pi_v);
        }
    }
    if (!os) throw Error("checkpoint write failed: " + path);
}

DiagonalResidualNet load_checkpoint(const std::string& path,
                                    std::shared_ptr<const SingularSystem> basis) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open checkpoint: " + path);
    const std::size_t magic_len = std::strlen(kCheckpointMagic);
    std::string magic(magic_len, '\0');
    if (!is.read(magic.data(), static_cast<std::streamsize>(magic_len)))
        throw TruncatedFile("checkpoint header");
    if (magic != kCheckpointMagic) throw BadMagic("checkpoint header '" + magic + "'");

    const std::uint64_t n = read_u64(is);
    const double lip = read_f64(is);
    if (!basis) throw Error("load_checkpoint: a singular system is required");
    if (basis->n != n)
        throw DimMismatch("checkpoint has " + std::to_string(n) + " modes, system has " +
                          std::to_string(basis->n));

    DiagonalResidualNet net(std::move(basis), lip, /*init_seed=*/0);
    for (std::size_t j = 0; j < n; ++j) {
        Subnetwork& s = net.subnet(j);
        for (LipschitzLayer& l : s.layers) {
            const std::uint32_t rows = read_u32(is);
            const std::uint32_t cols = read_u32(is);
            l.budget = read_f64(is);
            l.raw = Matrix(rows, cols);
            l.bias.assign(rows, 0.0);
            l.pi_u.assign(rows, 0.0);
            l.pi_v.assign(cols, 0.0);
            read_f64s(is, l.raw.data());
            read_f64s(is, l.bias);
            read_f64s(is, l.pi_u);
            read_f64s(is, l.pi_v);
            l.reclip_from_state();
        }
    }
    return net;
}

}  // namespace iresnet

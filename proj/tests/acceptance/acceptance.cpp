// Acceptance suite: runs every shipping criterion end to end and prints one
// PASS/FAIL line per criterion. Exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "iresnet/analysis.hpp"
#include "iresnet/cli_app.hpp"
#include "iresnet/csv.hpp"
#include "iresnet/iresnet_core.hpp"
#include "iresnet/mnist_io.hpp"
#include "iresnet/operator_core.hpp"
#include "iresnet/spectral_filters.hpp"
#include "iresnet/training.hpp"

using namespace iresnet;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

struct Criterion {
    std::string name;
    double budget_seconds;
    std::function<bool(std::string&)> run;
};

void run_criterion(int index, const Criterion& c) {
    std::string detail;
    bool ok = false;
    const auto t0 = Clock::now();
    try {
        ok = c.run(detail);
    } catch (const std::exception& e) {
        ok = false;
        detail = std::string("exception: ") + e.what();
    }
    const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
    if (elapsed > c.budget_seconds) {
        ok = false;
        detail += (detail.empty() ? "" : "; ") + std::string("over time budget");
    }
    std::printf("[%s] criterion %2d: %s (%.1fs/%.0fs)%s%s\n", ok ? "PASS" : "FAIL", index,
                c.name.c_str(), elapsed, c.budget_seconds, detail.empty() ? "" : " -- ",
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

std::shared_ptr<const SingularSystem> diagonal_system(const Vector& sigma_sq) {
    Vector sigma(sigma_sq.size());
    for (std::size_t i = 0; i < sigma.size(); ++i) sigma[i] = std::sqrt(sigma_sq[i]);
    return std::make_shared<SingularSystem>(build_singular_system(Matrix::diagonal(sigma)));
}

Vector logspaced(std::size_t n, double floor_value) {
    Vector out(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double t = n == 1 ? 0.0 : static_cast<double>(j) / static_cast<double>(n - 1);
        out[j] = std::pow(10.0, t * std::log10(floor_value));
    }
    return out;
}

Matrix diagonal_a_tilde(const SingularSystem& sys) {
    Matrix a(sys.n, sys.n);
    for (std::size_t j = 0; j < sys.n; ++j) a(j, j) = std::sqrt(sys.sigma_sq[j]);
    return a;
}

// Shared synthetic training setup for criteria 1 and 2: 200 samples on a
// 10-mode diagonal operator.
struct SyntheticFit {
    std::shared_ptr<const SingularSystem> system;
    TrainSet set;
};

SyntheticFit make_synthetic_fit() {
    SyntheticFit out;
    out.system = diagonal_system(logspaced(10, 1e-3));
    Rng rng(12345);
    Matrix coeffs(10, 200);
    for (double& v : coeffs.data()) v = rng.uniform(0.25, 2.5);
    out.set.coefficients = coeffs;
    out.set.targets = make_targets(*out.system, coeffs, NoiseModel{0.0, 0});
    return out;
}

bool criterion1_one_param(std::string& detail) {
    SyntheticFit fit = make_synthetic_fit();
    double worst = 0.0;
    for (double lip : {0.5, 0.9}) {
        TrainConfig cfg;
        cfg.lip = lip;
        cfg.epochs = 120;
        cfg.batch_size = 50;
        cfg.adam.lr = 2e-2;
        cfg.lr_interval = 30;
        cfg.seed = 1;
        OneParamFit f = train_one_param(*fit.system, fit.set, cfg);
        worst = std::max(worst, std::fabs(f.k - lip));
    }
    std::ostringstream os;
    os << "max |k - L| = " << worst;
    detail = os.str();
    return worst <= 1e-3;
}

bool criterion2_affine(std::string& detail) {
    SyntheticFit fit = make_synthetic_fit();
    const std::size_t n = fit.system->n;
    double worst = 0.0;
    for (double lip : {0.5, 0.9}) {
        TrainConfig cfg;
        cfg.lip = lip;
        cfg.epochs = 2500;
        cfg.batch_size = 200;  // full batch
        cfg.adam.lr = 5e-2;
        cfg.lr_interval = 250;
        cfg.seed = 2;
        AffineFit f = train_affine(*fit.system, fit.set, cfg);
        for (std::size_t j = 0; j < n; ++j) {
            const double ss = fit.system->sigma_sq[j];
            double mu = 0.0;
            for (std::size_t i = 0; i < fit.set.coefficients.cols(); ++i)
                mu += fit.set.coefficients(j, i);
            mu /= static_cast<double>(fit.set.coefficients.cols());
            worst = std::max(worst, std::fabs(f.w[j] - std::min(1.0 - ss, lip)));
            worst = std::max(worst, std::fabs(f.b[j] - std::max(0.0, 1.0 - lip - ss) * mu));
        }
    }
    std::ostringstream os;
    os << "max parameter error = " << worst;
    detail = os.str();
    return worst <= 1e-3;
}

bool criterion3_filter_inverse_equivalence(std::string& detail) {
    auto sys = diagonal_system(logspaced(20, 1e-3));
    Matrix a_tilde = diagonal_a_tilde(*sys);
    Rng rng(333);

    Matrix coeffs(20, 16);
    for (double& v : coeffs.data()) v = rng.uniform(0.5, 3.0);
    Vector mu(20);
    for (std::size_t j = 0; j < 20; ++j) {
        double m = 0.0;
        for (std::size_t i = 0; i < 16; ++i) m += coeffs(j, i);
        mu[j] = m / 16.0;
    }
    Vector alpha(20, 0.05);

    double worst = 0.0;
    for (double lip : {0.5, 0.9, 0.99}) {
        ClosedFormNet one = closed_form_one_param(sys, lip);
        ClosedFormNet aff = closed_form_affine(sys, lip, mu);
        ClosedFormNet rel = closed_form_relu(sys, lip);
        ClosedFormNet sth = closed_form_soft_threshold(sys, lip, alpha, coeffs);
        FilterSpec f_one{FilterFamily::Tikhonov, lip, {}, {}, {}};
        FilterSpec f_aff{FilterFamily::SquaredSoftTsvd, lip, {}, mu, {}};
        FilterSpec f_rel{FilterFamily::Relu, lip, {}, {}, {}};
        FilterSpec f_sth{FilterFamily::SoftThreshold, lip, alpha, {}, sth.p()};
        const std::pair<const ClosedFormNet*, const FilterSpec*> pairs[] = {
            {&one, &f_one}, {&aff, &f_aff}, {&rel, &f_rel}, {&sth, &f_sth}};
        for (const auto& [net, spec] : pairs) {
            for (int trial = 0; trial < 100; ++trial) {
                Vector y(20);
                for (auto& v : y) v = rng.uniform(-2.0, 2.0);
                Vector via_filter = filter_reconstruction(y, *sys, *spec);
                Vector via_invert =
                    reconstruct(*net, a_tilde, y, /*k_max=*/6000, /*tol=*/1e-12);
                worst = std::max(worst, norm2_diff(via_filter, via_invert));
            }
        }
    }
    std::ostringstream os;
    os << "max route disagreement = " << worst;
    detail = os.str();
    return worst <= 1e-8;
}

bool criterion4_contraction(std::string& detail) {
    Rng rng(444);
    std::vector<std::unique_ptr<DiagonalResidualMap>> nets;
    std::vector<double> lips;

    auto sys = diagonal_system(logspaced(8, 1e-2));
    Vector mu(8, 0.7);
    for (double lip : {0.5, 0.9}) {
        nets.push_back(std::make_unique<ClosedFormNet>(closed_form_affine(sys, lip, mu)));
        lips.push_back(lip);
        nets.push_back(std::make_unique<ClosedFormNet>(closed_form_relu(sys, lip)));
        lips.push_back(lip);
    }
    {
        Matrix coeffs(8, 128);
        for (double& v : coeffs.data()) v = rng.uniform(-2.0, 2.0);
        for (double lip : {0.5, 0.9}) {
            TrainSet set;
            set.coefficients = coeffs;
            set.targets = make_targets(*sys, coeffs, NoiseModel{0.0, 0});
            TrainConfig cfg;
            cfg.lip = lip;
            cfg.epochs = 30;
            cfg.batch_size = 32;
            cfg.adam.lr = 3e-3;
            cfg.seed = 4;
            auto net = std::make_unique<DiagonalResidualNet>(sys, lip, 44);
            train_diagonal(*net, set, cfg);
            nets.push_back(std::move(net));
            lips.push_back(lip);
        }
    }

    double worst_roundtrip = 0.0, worst_ratio_excess = -1.0;
    const int trials_per_net = 1000 / static_cast<int>(nets.size()) + 1;
    int total_trials = 0;
    for (std::size_t k = 0; k < nets.size(); ++k) {
        const DiagonalResidualMap& net = *nets[k];
        const double lip = lips[k];
        for (int trial = 0; trial < trials_per_net; ++trial) {
            ++total_trials;
            Vector x(net.dim());
            for (auto& v : x) v = rng.uniform(-2.0, 2.0);
            Vector z = forward(net, x);
            Vector back = invert(net, z, /*k_max=*/600, /*tol=*/1e-12).x;
            worst_roundtrip = std::max(worst_roundtrip, norm2_diff(back, x));

            Vector zz(net.dim());
            for (auto& v : zz) v = rng.uniform(-2.0, 2.0);
            Vector cur(zz.begin(), zz.end());
            double prev_step = -1.0;
            for (int it = 0; it < 25; ++it) {
                Vector next = net.apply(cur);
                for (std::size_t i = 0; i < next.size(); ++i) next[i] += zz[i];
                const double step = norm2_diff(next, cur);
                cur = std::move(next);
                // step norms are differences of O(1) iterates, so they carry
                // ~1e-15 absolute cancellation noise; ratios are only
                // meaningful while steps sit well above that floor
                if (prev_step > 1e-4)
                    worst_ratio_excess = std::max(worst_ratio_excess, step / prev_step - lip);
                prev_step = step;
            }
        }
    }
    std::ostringstream os;
    os << "trials=" << total_trials << " max roundtrip=" << worst_roundtrip
       << " max step-ratio excess=" << worst_ratio_excess;
    detail = os.str();
    return worst_roundtrip <= 1e-7 && worst_ratio_excess <= 1e-9;
}

bool criterion5_lipschitz_certification(std::string& detail) {
    auto sys = diagonal_system(logspaced(8, 1e-2));
    Rng rng(555);
    Matrix coeffs(8, 256);
    for (double& v : coeffs.data()) v = rng.uniform(-2.0, 2.0);
    const double lip = 0.9;
    TrainSet set;
    set.coefficients = coeffs;
    set.targets = make_targets(*sys, coeffs, NoiseModel{0.0, 0});
    TrainConfig cfg;
    cfg.lip = lip;
    cfg.epochs = 60;
    cfg.batch_size = 64;
    cfg.adam.lr = 3e-3;
    cfg.seed = 5;
    DiagonalResidualNet net(sys, lip, 55);
    train_diagonal(net, set, cfg);

    double worst_cert = 0.0, worst_emp = 0.0;
    for (std::size_t j = 0; j < 8; ++j) {
        worst_cert = std::max(worst_cert, net.subnet(j).certify());
        Rng prng(split_seed(5150, j));
        worst_emp = std::max(worst_emp, empirical_lipschitz_mode(net, j, 10000, prng));
    }
    std::ostringstream os;
    os << "max certified product=" << worst_cert << " max empirical=" << worst_emp;
    detail = os.str();
    return worst_cert <= lip * std::pow(1.0 + 1e-6, 3) && worst_emp <= lip + 1e-6;
}

bool criterion6_local_approx_decay(std::string& detail) {
    const std::size_t n = 30;
    Vector spectrum = logspaced(n, 1e-4);
    auto sys = diagonal_system(spectrum);
    Rng rng(666);

    // test set under the source condition x = A w
    std::vector<Vector> xs;
    for (int i = 0; i < 10; ++i) {
        Vector c(n);
        for (std::size_t j = 0; j < n; ++j) c[j] = spectrum[j] * rng.uniform(-1.0, 1.0);
        xs.push_back(sys->assemble(c));
    }

    // training data drawn under the same source condition, so the per-mode
    // means (and with them the learned bias) decay with sigma^2
    Matrix coeffs(n, 200);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < 200; ++i) coeffs(j, i) = spectrum[j] * rng.uniform(-2.0, 2.0);
    TrainSet set;
    set.coefficients = coeffs;
    set.targets = make_targets(*sys, coeffs, NoiseModel{0.0, 0});
    Vector mu(n);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < coeffs.cols(); ++i) s += coeffs(j, i);
        mu[j] = s / static_cast<double>(coeffs.cols());
    }

    std::vector<double> lips, errors;
    double worst_train_gap = 0.0;
    for (int m = 1; m <= 8; ++m) {
        const double lip = 1.0 - std::pow(2.0, -m);
        lips.push_back(lip);

        ClosedFormNet closed = closed_form_affine(sys, lip, mu);
        double e_mean = 0.0;
        for (const Vector& x : xs) e_mean += local_approx_error(closed, *sys, x);
        e_mean /= static_cast<double>(xs.size());
        errors.push_back(e_mean);

        // the trained nets land on the closed form; the source-scaled data has
        // per-mode gradients down at 1e-9, so the second moment must decay
        // fast and eps must sit below the gradient scale
        TrainConfig cfg;
        cfg.lip = lip;
        cfg.epochs = 1500;
        cfg.batch_size = 200;
        cfg.adam.lr = 5e-2;
        cfg.adam.beta2 = 0.99;
        cfg.adam.eps = 1e-12;
        cfg.lr_interval = 150;
        cfg.seed = 6;
        AffineFit fit = train_affine(*sys, set, cfg);
        for (std::size_t j = 0; j < n; ++j) {
            worst_train_gap = std::max(worst_train_gap, std::fabs(fit.w[j] - closed.w()[j]));
            worst_train_gap = std::max(worst_train_gap, std::fabs(fit.b[j] - closed.b()[j]));
        }
    }
    DecayFit fit = loglog_decay_fit(lips, errors);
    std::ostringstream os;
    os << "slope=" << fit.slope << " (r2=" << fit.r_squared
       << ") trained-vs-closed gap=" << worst_train_gap;
    detail = os.str();
    return fit.slope >= 1.5 && worst_train_gap <= 1e-3;
}

bool criterion7_filter_figures(std::string& detail) {
    const fs::path out_dir = fs::temp_directory_path() / "iresnet_acceptance_filters";
    fs::remove_all(out_dir);
    double worst = 0.0;

    auto check_family = [&](const std::string& family, const std::vector<double>& lips,
                            double alpha_over_p) {
        RunConfig cfg;
        cfg.family = family;
        cfg.lip_grid = lips;
        cfg.alpha_over_p = alpha_over_p;
        cfg.out_dir = (out_dir / family).string();
        if (cmd_filters(cfg) != 0) return false;

        std::ifstream is(fs::path(cfg.out_dir) / "filter_curves.csv");
        if (!is) return false;
        std::string line;
        std::getline(is, line);  // header
        std::size_t rows = 0;
        while (std::getline(is, line)) {
            std::stringstream ss(line);
            std::string cell;
            std::vector<std::string> cells;
            while (std::getline(ss, cell, ',')) cells.push_back(cell);
            if (cells.size() != 7) return false;
            const double ss_val = std::stod(cells[0]);
            const double r = std::stod(cells[2]);
            const double ssr = std::stod(cells[3]);
            const double lip = std::stod(cells[5]);
            double expect = 0.0;
            if (family == "tikhonov")
                expect = ss_val / (1.0 - lip + lip * ss_val);
            else if (family == "squared_soft_tsvd")
                expect = ss_val / std::max(ss_val, 1.0 - lip);
            else
                expect = ss_val * training_ray_closed_form(ss_val, lip, alpha_over_p, 1.0);
            worst = std::max(worst, std::fabs(ssr - expect));
            worst = std::max(worst, std::fabs(ssr - ss_val * r));
            ++rows;
        }
        return rows >= 400;
    };

    bool ok = check_family("tikhonov", {0.9, 0.98}, 0.0);
    ok = ok && check_family("squared_soft_tsvd", {0.8, 0.9}, 0.0);
    ok = ok && check_family("soft_threshold", {0.8, 0.9}, 0.1);

    // kink rows are present exactly at alpha/(L p) and alpha/p + 1 - L
    for (double lip : {0.8, 0.9}) {
        for (double kink : {0.1 / lip, 0.1 + 1.0 - lip}) {
            std::ifstream is(out_dir / "soft_threshold" / "filter_curves.csv");
            std::string line;
            bool found = false;
            while (std::getline(is, line)) {
                std::stringstream ss(line);
                std::vector<std::string> cells;
                std::string cell;
                while (std::getline(ss, cell, ',')) cells.push_back(cell);
                if (cells.size() != 7 || cells[0] == "sigma_sq") continue;
                if (std::fabs(std::stod(cells[0]) - kink) < 1e-15 &&
                    std::fabs(std::stod(cells[5]) - lip) < 1e-15)
                    found = true;
            }
            ok = ok && found;
        }
    }

    fs::remove_all(out_dir);
    std::ostringstream os;
    os << "max pointwise error = " << worst;
    detail = os.str();
    return ok && worst <= 1e-12;
}

bool criterion8_bias_regularization(std::string& detail) {
    Vector sigma_sq = logspaced(20, 1e-6);
    Rng rng(888);
    Vector mu(20);
    for (auto& m : mu) m = rng.uniform(0.3, 1.2);
    Vector grid;
    for (int k = 1; k <= 22; ++k) grid.push_back(1.0 - std::pow(2.0, -k));

    BiasRegularizationReport rep = bias_regularization_check(grid, sigma_sq, mu);
    std::ostringstream os;
    os << "C=" << rep.c_bound << " bias " << rep.bias_norms.front() << " -> "
       << rep.bias_norms.back();
    detail = os.str();
    return rep.all_ok() && rep.c_bound <= 1.0 + 1e-12;
}

bool criterion9_gradient_check(std::string& detail) {
    Rng rng(999);
    double worst = 0.0;
    int configs = 0;
    while (configs < 50) {
        Subnetwork s(0.9, rng);
        for (auto& layer : s.layers) {
            layer.certify();
            const double sigma_raw = layer.sigma_hat;
            const double target = 0.8 * layer.budget;
            if (sigma_raw > 0) {
                layer.raw.scale(target / std::max(sigma_raw, target));
                layer.certify();
            }
        }
        const double t = rng.uniform(-1.5, 1.5);
        SubnetForwardCache cache;
        subnet_forward_cached(s, t, cache);
        bool near_kink = false;
        for (double a : cache.a1)
            if (std::fabs(a) < 1e-4) near_kink = true;
        for (double a : cache.a2)
            if (std::fabs(a) < 1e-4) near_kink = true;
        if (near_kink) continue;
        ++configs;

        SubnetGrads grads(s);
        backprop_subnetwork(s, cache, 1.0, grads);
        const double h = 1e-6;
        auto fd_entry = [&](LipschitzLayer& layer, Vector& flat, std::size_t idx) {
            const double keep = flat[idx];
            flat[idx] = keep + h;
            layer.reclip_from_state();
            SubnetForwardCache c;
            const double up = subnet_forward_cached(s, t, c);
            flat[idx] = keep - h;
            layer.reclip_from_state();
            const double down = subnet_forward_cached(s, t, c);
            flat[idx] = keep;
            layer.reclip_from_state();
            return (up - down) / (2.0 * h);
        };
        for (std::size_t l = 0; l < 3; ++l) {
            LipschitzLayer& layer = s.layers[l];
            for (int pick = 0; pick < 6; ++pick) {
                const std::size_t wi = rng.index(layer.raw.data().size());
                const double fd = fd_entry(layer, layer.raw.data(), wi);
                const double bp = grads.w[l][wi];
                const double scale = std::max({std::fabs(fd), std::fabs(bp), 1e-6});
                worst = std::max(worst, std::fabs(fd - bp) / scale);

                const std::size_t bi = rng.index(layer.bias.size());
                const double fdb = fd_entry(layer, layer.bias, bi);
                const double bpb = grads.b[l][bi];
                const double scale_b = std::max({std::fabs(fdb), std::fabs(bpb), 1e-6});
                worst = std::max(worst, std::fabs(fdb - bpb) / scale_b);
            }
        }
    }
    std::ostringstream os;
    os << "max rel err over " << configs << " configs = " << worst;
    detail = os.str();
    return worst <= 1e-5;
}

bool criterion10_convergence_study(std::string& detail) {
    // Corpus: real MNIST when MNIST_DIR is set, otherwise a synthetic
    // stroke-blob corpus written and re-read through the IDX format.
    const fs::path work = fs::temp_directory_path() / "iresnet_acceptance_study";
    fs::remove_all(work);
    fs::create_directories(work);

    std::string images_path, labels_path;
    bool real_mnist = false;
    if (const char* mnist_dir = std::getenv("MNIST_DIR")) {
        const fs::path img = fs::path(mnist_dir) / "train-images-idx3-ubyte";
        const fs::path lab = fs::path(mnist_dir) / "train-labels-idx1-ubyte";
        if (fs::exists(img) && fs::exists(lab)) {
            images_path = img.string();
            labels_path = lab.string();
            real_mnist = true;
        }
    }
    if (!real_mnist) {
        std::vector<Vector> corpus = synthetic_digits(2500, 20240601);
        std::vector<std::uint8_t> labels(corpus.size(), 0);
        images_path = (work / "images-idx3-ubyte").string();
        labels_path = (work / "labels-idx1-ubyte").string();
        save_mnist_idx(images_path, labels_path, corpus, labels);
    }
    MnistData data = load_mnist_idx(images_path, labels_path, 2500);
    std::vector<Vector> train(data.images.begin(), data.images.begin() + 2000);
    std::vector<Vector> test(data.images.begin() + 2000, data.images.begin() + 2500);

    Matrix radon = radon_matrix(28, 30, 41);
    NormalizedOperator normed = normalize_operator(radon);
    auto system = std::make_shared<SingularSystem>(build_singular_system(normed.op));

    // full-scale singular system sanity: leading eigenvalue 1 and
    // ||Atilde v_j - sigma_j u_j|| <= 1e-8 for every retained mode
    if (std::fabs(system->sigma_sq[0] - 1.0) > 1e-10) {
        detail = "sigma_1^2 != 1 after normalization";
        return false;
    }
    for (std::size_t j = 0; j < system->n; ++j) {
        Vector vj = system->v.col(j);
        Vector av = normed.op.apply(vj);
        const double sigma = std::sqrt(system->sigma_sq[j]);
        double res_sq = 0.0;
        for (std::size_t r = 0; r < av.size(); ++r) {
            const double d = av[r] - sigma * system->u(r, j);
            res_sq += d * d;
        }
        if (std::sqrt(res_sq) > 1e-8) {
            detail = "singular residual above 1e-8 at mode " + std::to_string(j);
            return false;
        }
    }

    Matrix coeffs(system->n, train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
        Vector c = system->project(train[i]);
        for (std::size_t j = 0; j < system->n; ++j) coeffs(j, i) = c[j];
    }
    const double coeff_std = std_mnist(coeffs);

    std::vector<double> lips;
    for (int m = 1; m <= 5; ++m) lips.push_back(1.0 - std::pow(3.0, -m));
    std::vector<double> delta_hats{0.0};
    for (int ell = 1; ell <= 6; ++ell) delta_hats.push_back(std::pow(1.0 / 3.0, ell));

    std::vector<std::unique_ptr<DiagonalResidualNet>> nets;
    for (std::size_t m = 0; m < lips.size(); ++m) {
        TrainConfig cfg;
        cfg.lip = lips[m];
        cfg.epochs = 60;
        cfg.batch_size = 50;
        cfg.adam.lr = 1e-2;
        cfg.lr_interval = 12;
        cfg.seed = split_seed(10101, m);
        TrainSet set;
        set.coefficients = coeffs;
        set.targets = make_targets(*system, coeffs, NoiseModel{0.0, 0});
        auto net =
            std::make_unique<DiagonalResidualNet>(system, lips[m], split_seed(20202, m));
        train_diagonal(*net, set, cfg);
        nets.push_back(std::move(net));
    }

    ConvergenceStudyInput in;
    in.lip_grid = lips;
    for (double dh : delta_hats) in.delta_grid.push_back(dh * coeff_std);
    for (auto& n : nets) in.nets_clean.push_back(n.get());
    in.a_tilde = &normed.op;
    in.test_set = test;
    in.noise_seed = 30303;
    in.k_max = 30;
    ConvergenceStudyOutput out = convergence_study(in, PairingMode::TrainedClean);

    // delta_hat is descending in ell; order the argmins by increasing noise.
    std::vector<std::size_t> argmin_by_increasing_delta;
    for (std::size_t ell = delta_hats.size(); ell-- > 1;)
        argmin_by_increasing_delta.push_back(out.argmin_lip_per_delta[ell]);

    const std::size_t best_small = out.argmin_lip_per_delta[6];  // smallest nonzero delta
    const std::size_t best_large = out.argmin_lip_per_delta[1];  // largest delta
    const bool cond_a = best_small == 3 || best_small == 4;      // L4 or L5
    const bool cond_b = best_large == 0 || best_large == 1;      // L1 or L2
    const bool cond_c = monotone_non_increasing(argmin_by_increasing_delta, 1);

    std::ostringstream os;
    os << (real_mnist ? "mnist" : "synthetic corpus") << ", argmin by ell=0..6:";
    for (std::size_t ell = 0; ell < delta_hats.size(); ++ell)
        os << " L" << (out.argmin_lip_per_delta[ell] + 1);
    fs::remove_all(work);
    detail = os.str();
    return cond_a && cond_b && cond_c;
}

bool criterion11_error_split(std::string& detail) {
    auto sys = diagonal_system(logspaced(12, 1e-3));
    Matrix a_tilde = diagonal_a_tilde(*sys);
    Rng rng(1111);
    Vector mu(12, 0.4);

    double worst_violation = -1e300;
    for (int instance = 0; instance < 100; ++instance) {
        const double lip = rng.uniform01() < 0.5 ? 0.5 : 0.9;
        const bool use_affine = rng.uniform01() < 0.5;
        ClosedFormNet net =
            use_affine ? closed_form_affine(sys, lip, mu) : closed_form_one_param(sys, lip);
        Vector c(12);
        for (auto& v : c) v = rng.uniform(-1.0, 1.0);
        Vector x_dagger = sys->assemble(c);
        Vector y = a_tilde.apply(x_dagger);
        Vector eta(12);
        const double noise_scale = rng.uniform(0.001, 0.2);
        for (auto& v : eta) v = noise_scale * rng.normal();
        Vector y_delta = y;
        for (std::size_t i = 0; i < 12; ++i) y_delta[i] += eta[i];
        const double delta = norm2(eta);

        Vector reco = reconstruct(net, a_tilde, y_delta, 8000, 1e-13);
        Vector approx = invert(net, a_tilde.apply_transpose(y), 8000, 1e-13).x;
        const double lhs = norm2_diff(reco, x_dagger);
        const double rhs = delta / (1.0 - lip) + norm2_diff(approx, x_dagger) + 1e-8;
        worst_violation = std::max(worst_violation, lhs - rhs);
    }
    std::ostringstream os;
    os << "max (lhs - rhs) over 100 instances = " << worst_violation;
    detail = os.str();
    return worst_violation <= 0.0;
}

}  // namespace

int main(int argc, char** argv) {
    std::printf("acceptance suite\n");
    const std::vector<Criterion> criteria = {
        {"closed-form training oracle, one-parameter family", 10.0, criterion1_one_param},
        {"closed-form training oracle, affine family", 30.0, criterion2_affine},
        {"filter / fixed-point inverse equivalence", 5.0, criterion3_filter_inverse_equivalence},
        {"fixed-point contraction and round trip", 10.0, criterion4_contraction},
        {"Lipschitz certification of trained subnetworks", 20.0,
         criterion5_lipschitz_certification},
        {"local approximation decay is superlinear", 60.0, criterion6_local_approx_decay},
        {"filter figure reproduction", 1.0, criterion7_filter_figures},
        {"bias regularization conditions", 1.0, criterion8_bias_regularization},
        {"gradient correctness vs finite differences", 10.0, criterion9_gradient_check},
        {"convergence study ordinal reproduction", 1800.0, criterion10_convergence_study},
        {"error-split inequality", 10.0, criterion11_error_split},
    };
    // optional arguments select individual criteria by 1-based index
    std::vector<bool> selected(criteria.size(), argc <= 1);
    for (int a = 1; a < argc; ++a) {
        const int idx = std::atoi(argv[a]);
        if (idx >= 1 && idx <= static_cast<int>(criteria.size())) selected[idx - 1] = true;
    }
    for (std::size_t i = 0; i < criteria.size(); ++i)
        if (selected[i]) run_criterion(static_cast<int>(i) + 1, criteria[i]);

    if (g_failures == 0) {
        std::printf("acceptance: all %zu criteria passed\n", criteria.size());
        return 0;
    }
    std::printf("acceptance: %d criteria FAILED\n", g_failures);
    return 1;
}

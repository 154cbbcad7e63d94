#include "iresnet/cli_app.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "iresnet/csv.hpp"
#include "iresnet/errors.hpp"
#include "iresnet/iresnet_core.hpp"
#include "iresnet/mnist_io.hpp"
#include "iresnet/spectral_filters.hpp"

namespace iresnet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "iresnet-0.1.0";

json config_to_json(const RunConfig& cfg) {
    json j;
    j["operator"]["kind"] = cfg.op.kind == OperatorSpec::Kind::Radon      ? "radon"
                            : cfg.op.kind == OperatorSpec::Kind::Diagonal ? "diagonal"
                                                                          : "matrix";
    j["operator"]["img_side"] = cfg.op.img_side;
    j["operator"]["n_angles"] = cfg.op.n_angles;
    j["operator"]["n_detectors"] = cfg.op.n_detectors;
    j["operator"]["sigma"] = cfg.op.sigma;
    j["operator"]["matrix_path"] = cfg.op.matrix_path;
    j["dataset"]["kind"] = cfg.data.kind == DatasetSpec::Kind::Mnist ? "mnist" : "synthetic";
    j["dataset"]["images"] = cfg.data.images_path;
    j["dataset"]["labels"] = cfg.data.labels_path;
    j["dataset"]["train_count"] = cfg.data.train_count;
    j["dataset"]["test_count"] = cfg.data.test_count;
    j["dataset"]["distribution"] = cfg.data.distribution;
    j["train"]["L"] = cfg.lip_grid;
    j["train"]["noise"] = cfg.noise_hat;
    j["train"]["epochs"] = cfg.train.epochs;
    j["train"]["batch_size"] = cfg.train.batch_size;
    j["train"]["lr"] = cfg.train.adam.lr;
    j["train"]["beta1"] = cfg.train.adam.beta1;
    j["train"]["beta2"] = cfg.train.adam.beta2;
    j["train"]["eps"] = cfg.train.adam.eps;
    j["train"]["lr_decay"] = cfg.train.lr_decay;
    j["train"]["lr_interval"] = cfg.train.lr_interval;
    j["seed"] = cfg.seed;
    j["out"] = cfg.out_dir;
    j["study"]["grid"] = cfg.grid;
    j["study"]["max_m"] = cfg.max_m;
    j["study"]["pairing"] = cfg.pairing;
    j["study"]["noise_levels"] = cfg.noise_levels;
    j["filters"]["family"] = cfg.family;
    j["filters"]["gamma"] = cfg.gamma;
    j["filters"]["alpha_over_p"] = cfg.alpha_over_p;
    j["reconstruct"]["ckpt"] = cfg.ckpt_path;
    j["reconstruct"]["input"] = cfg.input_path;
    return j;
}

}  // namespace

RunConfig load_config(const std::string& path) {
    RunConfig cfg;
    if (path.empty()) return cfg;
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        is >> j;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config parse failed: ") + e.what());
    }
    if (j.contains("operator")) {
        const auto& op = j["operator"];
        const std::string kind = op.value("kind", "radon");
        if (kind == "radon")
            cfg.op.kind = OperatorSpec::Kind::Radon;
        else if (kind == "diagonal")
            cfg.op.kind = OperatorSpec::Kind::Diagonal;
        else if (kind == "matrix")
            cfg.op.kind = OperatorSpec::Kind::MatrixFile;
        else
            throw ConfigError("unknown operator kind '" + kind + "'");
        cfg.op.img_side = op.value("img_side", cfg.op.img_side);
        cfg.op.n_angles = op.value("n_angles", cfg.op.n_angles);
        cfg.op.n_detectors = op.value("n_detectors", cfg.op.n_detectors);
        if (op.contains("sigma")) cfg.op.sigma = op["sigma"].get<Vector>();
        cfg.op.matrix_path = op.value("matrix_path", cfg.op.matrix_path);
    }
    if (j.contains("dataset")) {
        const auto& d = j["dataset"];
        const std::string kind = d.value("kind", "synthetic");
        if (kind == "mnist")
            cfg.data.kind = DatasetSpec::Kind::Mnist;
        else if (kind == "synthetic")
            cfg.data.kind = DatasetSpec::Kind::Synthetic;
        else
            throw ConfigError("unknown dataset kind '" + kind + "'");
        cfg.data.images_path = d.value("images", cfg.data.images_path);
        cfg.data.labels_path = d.value("labels", cfg.data.labels_path);
        cfg.data.train_count = d.value("train_count", cfg.data.train_count);
        cfg.data.test_count = d.value("test_count", cfg.data.test_count);
        cfg.data.distribution = d.value("distribution", cfg.data.distribution);
    }
    if (j.contains("train")) {
        const auto& t = j["train"];
        if (t.contains("L")) cfg.lip_grid = t["L"].get<std::vector<double>>();
        cfg.noise_hat = t.value("noise", cfg.noise_hat);
        cfg.train.epochs = t.value("epochs", cfg.train.epochs);
        cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
        cfg.train.adam.lr = t.value("lr", cfg.train.adam.lr);
        cfg.train.adam.beta1 = t.value("beta1", cfg.train.adam.beta1);
        cfg.train.adam.beta2 = t.value("beta2", cfg.train.adam.beta2);
        cfg.train.adam.eps = t.value("eps", cfg.train.adam.eps);
        cfg.train.lr_decay = t.value("lr_decay", cfg.train.lr_decay);
        cfg.train.lr_interval = t.value("lr_interval", cfg.train.lr_interval);
    }
    cfg.seed = j.value("seed", cfg.seed);
    cfg.out_dir = j.value("out", cfg.out_dir);
    if (j.contains("study")) {
        const auto& s = j["study"];
        cfg.grid = s.value("grid", cfg.grid);
        cfg.max_m = s.value("max_m", cfg.max_m);
        cfg.pairing = s.value("pairing", cfg.pairing);
        cfg.noise_levels = s.value("noise_levels", cfg.noise_levels);
    }
    if (j.contains("filters")) {
        const auto& f = j["filters"];
        cfg.family = f.value("family", cfg.family);
        cfg.gamma = f.value("gamma", cfg.gamma);
        cfg.alpha_over_p = f.value("alpha_over_p", cfg.alpha_over_p);
    }
    if (j.contains("reconstruct")) {
        const auto& r = j["reconstruct"];
        cfg.ckpt_path = r.value("ckpt", cfg.ckpt_path);
        cfg.input_path = r.value("input", cfg.input_path);
    }
    return cfg;
}

void validate(const RunConfig& cfg) {
    for (double lip : cfg.lip_grid)
        if (lip < 0.0 || lip >= 1.0)
            throw ConfigError("L value " + std::to_string(lip) + " outside [0,1)");
    if (cfg.data.kind == DatasetSpec::Kind::Mnist) {
        if (!fs::exists(cfg.data.images_path))
            throw ConfigError("mnist images not found: " + cfg.data.images_path);
        if (!fs::exists(cfg.data.labels_path))
            throw ConfigError("mnist labels not found: " + cfg.data.labels_path);
    }
    if (cfg.op.kind == OperatorSpec::Kind::MatrixFile && !fs::exists(cfg.op.matrix_path))
        throw ConfigError("operator matrix not found: " + cfg.op.matrix_path);
    if (cfg.op.kind == OperatorSpec::Kind::Diagonal && cfg.op.sigma.empty())
        throw ConfigError("diagonal operator needs sigma entries");
    if (cfg.noise_hat < 0.0) throw ConfigError("noise must be >= 0");
    if (cfg.max_m < 1) throw ConfigError("max_m must be >= 1");
    if (cfg.noise_levels < 1) throw ConfigError("noise_levels must be >= 1");
}

std::uint64_t config_hash(const RunConfig& cfg) {
    const std::string dump = config_to_json(cfg).dump();
    return fnv1a(dump.data(), dump.size());
}

namespace {

Matrix build_operator(const RunConfig& cfg) {
    switch (cfg.op.kind) {
        case OperatorSpec::Kind::Radon:
            return radon_matrix(cfg.op.img_side, cfg.op.n_angles, cfg.op.n_detectors);
        case OperatorSpec::Kind::Diagonal:
            return Matrix::diagonal(cfg.op.sigma);
        case OperatorSpec::Kind::MatrixFile: {
            const auto rows = read_csv_rows(cfg.op.matrix_path);
            if (rows.empty()) throw ConfigError("operator matrix file is empty");
            Matrix m(rows.size(), rows.front().size());
            for (std::size_t r = 0; r < rows.size(); ++r) {
                if (rows[r].size() != m.cols())
                    throw ConfigError("operator matrix file has ragged rows");
                for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
            }
            return m;
        }
    }
    throw ConfigError("unreachable operator kind");
}

std::vector<Vector> make_dataset(const RunConfig& cfg, std::size_t count, std::uint64_t seed,
                                 std::size_t dim) {
    std::vector<Vector> out;
    out.reserve(count);
    if (cfg.data.distribution == "blobs") {
        const std::size_t side = static_cast<std::size_t>(std::lround(std::sqrt(double(dim))));
        if (side * side == dim) return synthetic_digits(count, seed, side);
        // fall through to gaussian for non-square dims
    }
    Rng rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        Vector v(dim);
        if (cfg.data.distribution == "uniform")
            for (double& x : v) x = rng.uniform01();
        else
            for (double& x : v) x = rng.normal();
        out.push_back(std::move(v));
    }
    return out;
}

Matrix project_all(const SingularSystem& sys, const std::vector<Vector>& images) {
    Matrix coeffs(sys.n, images.size());
    for (std::size_t i = 0; i < images.size(); ++i) {
        Vector c = sys.project(images[i]);
        for (std::size_t j = 0; j < sys.n; ++j) coeffs(j, i) = c[j];
    }
    return coeffs;
}

void write_manifest(const RunConfig& cfg, const std::string& command,
                    const std::vector<std::string>& outputs, std::uint64_t dataset_digest) {
    json m;
    char hash_buf[32];
    std::snprintf(hash_buf, sizeof hash_buf, "%016llx",
                  static_cast<unsigned long long>(config_hash(cfg)));
    m["config_hash"] = hash_buf;
    std::snprintf(hash_buf, sizeof hash_buf, "%016llx",
                  static_cast<unsigned long long>(dataset_digest));
    m["dataset_digest"] = hash_buf;
    m["command"] = command;
    m["seed"] = cfg.seed;
    m["version"] = kVersion;
    m["outputs"] = outputs;
    m["config"] = config_to_json(cfg);
    std::ofstream os(fs::path(cfg.out_dir) / "manifest.json");
    if (!os) throw Error("cannot write manifest");
    os << m.dump(2) << "\n";
}

std::string lip_tag(std::size_t index) { return "L" + std::to_string(index + 1); }

}  // namespace

ProblemContext build_context(const RunConfig& cfg) {
    ProblemContext ctx;
    Matrix raw_op = build_operator(cfg);
    NormalizedOperator normed = normalize_operator(raw_op);
    ctx.a_tilde = std::move(normed.op);
    ctx.op_scale = normed.scale;
    ctx.system = std::make_shared<SingularSystem>(build_singular_system(ctx.a_tilde));

    const std::size_t dim = ctx.a_tilde.cols();
    if (cfg.data.kind == DatasetSpec::Kind::Mnist) {
        MnistData data = load_mnist_idx(cfg.data.images_path, cfg.data.labels_path,
                                        cfg.data.train_count + cfg.data.test_count);
        if (!data.images.empty() && data.images.front().size() != dim)
            throw DimMismatch("dataset dimension does not match operator");
        const std::size_t n_train = std::min(cfg.data.train_count, data.images.size());
        ctx.train_images.assign(data.images.begin(), data.images.begin() + n_train);
        ctx.test_images.assign(data.images.begin() + n_train, data.images.end());
        ctx.dataset_digest = fnv1a_file(cfg.data.images_path);
    } else {
        ctx.train_images =
            make_dataset(cfg, cfg.data.train_count, split_seed(cfg.seed, 101), dim);
        ctx.test_images = make_dataset(cfg, cfg.data.test_count, split_seed(cfg.seed, 102), dim);
        ctx.dataset_digest = split_seed(cfg.seed, 103);
    }
    ctx.train_coeffs = project_all(*ctx.system, ctx.train_images);
    ctx.test_coeffs = project_all(*ctx.system, ctx.test_images);
    ctx.coeff_std = ctx.train_images.size() >= 2 ? std_mnist(ctx.train_coeffs) : 0.0;
    return ctx;
}

int cmd_train(const RunConfig& cfg) {
    validate(cfg);
    fs::create_directories(cfg.out_dir);
    ProblemContext ctx = build_context(cfg);

    std::vector<double> lips = cfg.lip_grid;
    if (lips.empty()) lips = {0.9};

    const double delta_abs = cfg.noise_hat * ctx.coeff_std;
    std::vector<std::string> outputs;

    for (std::size_t m = 0; m < lips.size(); ++m) {
        TrainConfig tc = cfg.train;
        tc.lip = lips[m];
        tc.noise_delta = delta_abs;
        tc.seed = split_seed(cfg.seed, 200 + m);

        TrainSet set;
        set.coefficients = ctx.train_coeffs;
        set.targets = make_targets(*ctx.system, ctx.train_coeffs,
                                   NoiseModel{delta_abs, split_seed(cfg.seed, 300 + m)});

        DiagonalResidualNet net(ctx.system, tc.lip, split_seed(cfg.seed, 400 + m));
        LossTrace trace = train_diagonal(net, set, tc);

        const std::string ckpt =
            (fs::path(cfg.out_dir) / ("ckpt_" + lip_tag(m) + ".bin")).string();
        save_checkpoint(net, ckpt);
        outputs.push_back(ckpt);

        const std::string trace_path =
            (fs::path(cfg.out_dir) / ("loss_trace_" + lip_tag(m) + ".csv")).string();
        CsvWriter loss_csv(trace_path);
        loss_csv.header({"epoch", "mode_j", "loss"});
        Vector agg = trace.aggregate();
        for (std::size_t e = 0; e < agg.size(); ++e) {
            loss_csv.row_begin();
            loss_csv.field(static_cast<long long>(e));
            loss_csv.field(static_cast<long long>(-1));  // aggregate row
            loss_csv.field(agg[e]);
            loss_csv.row_end();
        }
        outputs.push_back(trace_path);
        std::printf("trained L=%.6f -> %s\n", lips[m], ckpt.c_str());
    }
    write_manifest(cfg, "train", outputs, ctx.dataset_digest);
    return 0;
}

int cmd_reconstruct(const RunConfig& cfg) {
    validate(cfg);
    if (cfg.ckpt_path.empty() || cfg.input_path.empty())
        throw ConfigError("reconstruct needs --ckpt and --input");
    fs::create_directories(cfg.out_dir);
    ProblemContext ctx = build_context(cfg);
    DiagonalResidualNet net = load_checkpoint(cfg.ckpt_path, ctx.system);

    std::vector<Vector> inputs;
    if (cfg.input_path.size() > 4 &&
        cfg.input_path.substr(cfg.input_path.size() - 4) == ".csv") {
        inputs = read_csv_rows(cfg.input_path);
    } else {
        inputs = load_mnist_images(cfg.input_path);
    }

    const double delta_abs = cfg.noise_hat * (ctx.coeff_std > 0 ? ctx.coeff_std : 1.0);
    CsvWriter out_csv((fs::path(cfg.out_dir) / "reconstructions.csv").string());
    double mse = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (inputs[i].size() != ctx.a_tilde.cols())
            throw DimMismatch("input row " + std::to_string(i));
        Vector y = ctx.a_tilde.apply(inputs[i]);
        NoiseStream stream(NoiseModel{delta_abs, split_seed(cfg.seed, 500 + i)});
        Vector eta = stream.sample(y.size());
        for (std::size_t k = 0; k < y.size(); ++k) y[k] += eta[k];
        Vector z = ctx.a_tilde.apply_transpose(y);
        Vector reco = invert_diagonal(net, z, /*k_max=*/30).x;
        out_csv.row_begin();
        for (double v : reco) out_csv.field(v);
        out_csv.row_end();
        mse += norm2_diff(reco, inputs[i]) * norm2_diff(reco, inputs[i]);
    }
    if (!inputs.empty()) mse /= static_cast<double>(inputs.size());
    std::printf("reconstructed %zu inputs, mse=%.6g\n", inputs.size(), mse);
    write_manifest(cfg, "reconstruct",
                   {(fs::path(cfg.out_dir) / "reconstructions.csv").string()},
                   ctx.dataset_digest);
    return 0;
}

int cmd_filters(const RunConfig& cfg) {
    validate(cfg);
    fs::create_directories(cfg.out_dir);
    std::vector<double> lips = cfg.lip_grid;
    if (lips.empty()) lips = {0.9, 0.98};
    const FilterFamily family = filter_family_from_string(cfg.family);

    const std::string path = (fs::path(cfg.out_dir) / "filter_curves.csv").string();
    CsvWriter csv(path);
    csv.header({"sigma_sq", "s", "r", "sigma_sq_times_r", "family", "L", "gamma"});

    for (double lip : lips) {
        std::vector<double> grid;
        for (int i = 1; i <= 200; ++i) grid.push_back(static_cast<double>(i) / 200.0);
        if (family == FilterFamily::SoftThreshold) {
            // Insert the two kink abscissae of the gamma=1 ray.
            grid.push_back(cfg.alpha_over_p / lip);
            grid.push_back(cfg.alpha_over_p + 1.0 - lip);
            std::sort(grid.begin(), grid.end());
        }
        for (double ss : grid) {
            if (ss <= 0.0 || ss > 1.0 + 1e-12) continue;
            double s = 0.0, r = 1.0;
            switch (family) {
                case FilterFamily::Tikhonov:
                    r = tikhonov_filter(ss, s, lip);
                    break;
                case FilterFamily::SquaredSoftTsvd:
                    r = squared_soft_tsvd_filter(ss, lip);
                    break;
                case FilterFamily::Relu:
                    s = 1.0;
                    r = relu_filter(ss, s, lip);
                    break;
                case FilterFamily::SoftThreshold: {
                    // alpha and p constant with alpha/p given; p = 1.
                    s = cfg.gamma * ss;
                    r = soft_threshold_filter(ss, s, lip, cfg.alpha_over_p, 1.0);
                    break;
                }
            }
            csv.row_begin();
            csv.field(ss);
            csv.field(s);
            csv.field(r);
            csv.field(ss * r);
            csv.field(to_string(family));
            csv.field(lip);
            csv.field(cfg.gamma);
            csv.row_end();
        }
    }
    write_manifest(cfg, "filters", {path}, 0);
    std::printf("filter curves -> %s\n", path.c_str());
    return 0;
}

int cmd_approx_study(const RunConfig& cfg) {
    validate(cfg);
    fs::create_directories(cfg.out_dir);
    ProblemContext ctx = build_context(cfg);

    const double base = cfg.grid == "pow3" ? 3.0 : 2.0;
    if (cfg.grid != "pow2" && cfg.grid != "pow3")
        throw ConfigError("approx-study grid must be pow2 or pow3");

    const std::string path = (fs::path(cfg.out_dir) / "loc_approx.csv").string();
    CsvWriter csv(path);
    csv.header({"m", "L", "E_mean", "E_x1", "E_x2"});

    std::vector<double> lips, e_means;
    for (int m = 1; m <= cfg.max_m; ++m) {
        const double lip = 1.0 - std::pow(base, -static_cast<double>(m));
        TrainConfig tc = cfg.train;
        tc.lip = lip;
        tc.noise_delta = 0.0;
        tc.seed = split_seed(cfg.seed, 600 + m);

        TrainSet set;
        set.coefficients = ctx.train_coeffs;
        set.targets = make_targets(*ctx.system, ctx.train_coeffs, NoiseModel{0.0, 0});

        DiagonalResidualNet net(ctx.system, lip, split_seed(cfg.seed, 700 + m));
        train_diagonal(net, set, tc);

        double e_mean = 0.0;
        Vector e_x(ctx.test_images.size(), 0.0);
        for (std::size_t i = 0; i < ctx.test_images.size(); ++i) {
            e_x[i] = local_approx_error(net, *ctx.system, ctx.test_images[i]);
            e_mean += e_x[i];
        }
        if (!ctx.test_images.empty()) e_mean /= static_cast<double>(ctx.test_images.size());
        csv.row_begin();
        csv.field(static_cast<long long>(m));
        csv.field(lip);
        csv.field(e_mean);
        csv.field(e_x.size() > 0 ? e_x[0] : 0.0);
        csv.field(e_x.size() > 1 ? e_x[1] : 0.0);
        csv.row_end();
        lips.push_back(lip);
        e_means.push_back(e_mean);
        std::printf("approx-study m=%d L=%.6f E_mean=%.6g\n", m, lip, e_mean);
    }
    if (lips.size() >= 3) {
        DecayFit fit = loglog_decay_fit(lips, e_means);
        std::printf("log-log slope of E_mean: %.3f (r^2=%.3f)\n", fit.slope, fit.r_squared);
    }
    write_manifest(cfg, "approx-study", {path}, ctx.dataset_digest);
    return 0;
}

int cmd_convergence_study(const RunConfig& cfg) {
    validate(cfg);
    fs::create_directories(cfg.out_dir);
    ProblemContext ctx = build_context(cfg);

    std::vector<double> lips = cfg.lip_grid;
    if (lips.empty())
        for (int m = 1; m <= 5; ++m) lips.push_back(1.0 - std::pow(3.0, -m));

    std::vector<double> delta_hats(static_cast<std::size_t>(cfg.noise_levels), 0.0);
    for (int ell = 1; ell < cfg.noise_levels; ++ell)
        delta_hats[static_cast<std::size_t>(ell)] = std::pow(1.0 / 3.0, ell);
    std::vector<double> deltas;
    for (double dh : delta_hats) deltas.push_back(dh * ctx.coeff_std);

    const PairingMode pairing =
        cfg.pairing == "matched" ? PairingMode::NoiseMatched : PairingMode::TrainedClean;

    // Train one net per L (clean); for the matched pairing one per (L, delta).
    std::vector<std::unique_ptr<DiagonalResidualNet>> clean_nets;
    std::vector<std::vector<std::unique_ptr<DiagonalResidualNet>>> matched_nets;
    for (std::size_t m = 0; m < lips.size(); ++m) {
        TrainConfig tc = cfg.train;
        tc.lip = lips[m];
        tc.seed = split_seed(cfg.seed, 800 + m);
        TrainSet set;
        set.coefficients = ctx.train_coeffs;
        set.targets = make_targets(*ctx.system, ctx.train_coeffs, NoiseModel{0.0, 0});
        auto net = std::make_unique<DiagonalResidualNet>(ctx.system, lips[m],
                                                         split_seed(cfg.seed, 900 + m));
        train_diagonal(*net, set, tc);
        std::printf("convergence-study: trained clean net L=%.6f\n", lips[m]);
        clean_nets.push_back(std::move(net));
    }
    if (pairing == PairingMode::NoiseMatched) {
        matched_nets.resize(lips.size());
        for (std::size_t m = 0; m < lips.size(); ++m) {
            for (std::size_t ell = 0; ell < deltas.size(); ++ell) {
                TrainConfig tc = cfg.train;
                tc.lip = lips[m];
                tc.noise_delta = deltas[ell];
                tc.seed = split_seed(cfg.seed, 1000 + m * 64 + ell);
                TrainSet set;
                set.coefficients = ctx.train_coeffs;
                set.targets =
                    make_targets(*ctx.system, ctx.train_coeffs,
                                 NoiseModel{deltas[ell], split_seed(cfg.seed, 1100 + ell)});
                auto net = std::make_unique<DiagonalResidualNet>(
                    ctx.system, lips[m], split_seed(cfg.seed, 900 + m));
                train_diagonal(*net, set, tc);
                matched_nets[m].push_back(std::move(net));
            }
            std::printf("convergence-study: trained matched nets L=%.6f\n", lips[m]);
        }
    }

    ConvergenceStudyInput in;
    in.lip_grid = lips;
    in.delta_grid = deltas;
    for (auto& n : clean_nets) in.nets_clean.push_back(n.get());
    if (pairing == PairingMode::NoiseMatched) {
        for (auto& row : matched_nets) {
            std::vector<const DiagonalResidualMap*> ptrs;
            for (auto& n : row) ptrs.push_back(n.get());
            in.nets_matched.push_back(std::move(ptrs));
        }
    }
    in.a_tilde = &ctx.a_tilde;
    in.test_set = ctx.test_images;
    in.noise_seed = split_seed(cfg.seed, 1200);
    in.k_max = 30;

    ConvergenceStudyOutput out = convergence_study(in, pairing);

    const std::string path = (fs::path(cfg.out_dir) / "mse_reco.csv").string();
    CsvWriter csv(path);
    csv.header({"pairing", "m", "L", "ell", "delta_hat", "mse"});
    std::size_t row_idx = 0;
    for (std::size_t ell = 0; ell < deltas.size(); ++ell) {
        for (std::size_t m = 0; m < lips.size(); ++m) {
            const StudyRow& row = out.table.rows[row_idx++];
            csv.row_begin();
            csv.field(cfg.pairing);
            csv.field(static_cast<long long>(m + 1));
            csv.field(row.lip);
            csv.field(static_cast<long long>(ell));
            csv.field(delta_hats[ell]);
            csv.field(row.value);
            csv.row_end();
        }
        std::printf("ell=%zu delta_hat=%.6g argmin L index=%zu (L=%.6f)\n", ell,
                    delta_hats[ell], out.argmin_lip_per_delta[ell] + 1,
                    lips[out.argmin_lip_per_delta[ell]]);
    }
    write_manifest(cfg, "convergence-study", {path}, ctx.dataset_digest);
    return 0;
}

}  // namespace iresnet

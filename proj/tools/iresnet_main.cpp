#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "iresnet/cli_app.hpp"
#include "iresnet/errors.hpp"

using iresnet::RunConfig;

namespace {

struct CommonFlags {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    bool has_seed = false;
};

void add_common(CLI::App* app, CommonFlags& flags) {
    app->add_option("--config", flags.config, "JSON config file");
    app->add_option("--out", flags.out, "output directory");
    app->add_option("--seed", flags.seed, "master seed")->each([&](const std::string&) {
        flags.has_seed = true;
    });
}

RunConfig resolve(const CommonFlags& flags) {
    RunConfig cfg = iresnet::load_config(flags.config);
    if (!flags.out.empty()) cfg.out_dir = flags.out;
    if (flags.has_seed) cfg.seed = flags.seed;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learned spectral regularization of linear inverse problems with "
                 "invertible residual networks"};
    app.require_subcommand(1);

    CommonFlags train_flags, reco_flags, filt_flags, approx_flags, conv_flags;
    std::vector<double> train_lips, filt_lips;
    double train_noise = -1.0;
    std::string reco_ckpt, reco_input;
    double reco_noise = -1.0;
    std::string filt_family;
    double filt_gamma = -1.0, filt_aop = -1.0;
    std::string approx_grid;
    int approx_max_m = -1;
    std::string conv_pairing;

    CLI::App* train = app.add_subcommand("train", "train diagonal iResNets over an L grid");
    add_common(train, train_flags);
    train->add_option("--L", train_lips, "Lipschitz budgets");
    train->add_option("--noise", train_noise, "relative noise level (scaled by coeff std)");

    CLI::App* reco = app.add_subcommand("reconstruct", "invert a trained net on inputs");
    add_common(reco, reco_flags);
    reco->add_option("--ckpt", reco_ckpt, "checkpoint file")->required();
    reco->add_option("--input", reco_input, "csv or idx input file")->required();
    reco->add_option("--noise", reco_noise, "relative noise level");

    CLI::App* filt = app.add_subcommand("filters", "emit analytic filter curves");
    add_common(filt, filt_flags);
    filt->add_option("--family", filt_family,
                     "tikhonov|squared_soft_tsvd|relu|soft_threshold");
    filt->add_option("--L", filt_lips, "Lipschitz budgets");
    filt->add_option("--gamma", filt_gamma, "training-ray scale for soft_threshold");
    filt->add_option("--alpha-over-p", filt_aop, "constant alpha/p for soft_threshold");

    CLI::App* approx = app.add_subcommand("approx-study", "local approximation error over L");
    add_common(approx, approx_flags);
    approx->add_option("--grid", approx_grid, "pow2|pow3");
    approx->add_option("--max-m", approx_max_m, "largest exponent m");

    CLI::App* conv = app.add_subcommand("convergence-study", "MSE_reco over (L, delta) grid");
    add_common(conv, conv_flags);
    conv->add_option("--pairing", conv_pairing, "clean|matched");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) {
            RunConfig cfg = resolve(train_flags);
            if (!train_lips.empty()) cfg.lip_grid = train_lips;
            if (train_noise >= 0.0) cfg.noise_hat = train_noise;
            return iresnet::cmd_train(cfg);
        }
        if (reco->parsed()) {
            RunConfig cfg = resolve(reco_flags);
            cfg.ckpt_path = reco_ckpt;
            cfg.input_path = reco_input;
            if (reco_noise >= 0.0) cfg.noise_hat = reco_noise;
            return iresnet::cmd_reconstruct(cfg);
        }
        if (filt->parsed()) {
            RunConfig cfg = resolve(filt_flags);
            if (!filt_family.empty()) cfg.family = filt_family;
            if (!filt_lips.empty()) cfg.lip_grid = filt_lips;
            if (filt_gamma >= 0.0) cfg.gamma = filt_gamma;
            if (filt_aop >= 0.0) cfg.alpha_over_p = filt_aop;
            return iresnet::cmd_filters(cfg);
        }
        if (approx->parsed()) {
            RunConfig cfg = resolve(approx_flags);
            if (!approx_grid.empty()) cfg.grid = approx_grid;
            if (approx_max_m > 0) cfg.max_m = approx_max_m;
            return iresnet::cmd_approx_study(cfg);
        }
        if (conv->parsed()) {
            RunConfig cfg = resolve(conv_flags);
            if (!conv_pairing.empty()) cfg.pairing = conv_pairing;
            return iresnet::cmd_convergence_study(cfg);
        }
    } catch (const iresnet::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "unexpected error: %s\n", e.what());
        return 2;
    }
    return 0;
}

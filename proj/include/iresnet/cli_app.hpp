#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "iresnet/analysis.hpp"
#include "iresnet/linalg.hpp"
#include "iresnet/operator_core.hpp"
#include "iresnet/training.hpp"

namespace iresnet {

struct OperatorSpec {
    enum class Kind { Radon, Diagonal, MatrixFile };
    Kind kind = Kind::Radon;
    std::size_t img_side = 28, n_angles = 30, n_detectors = 41;
    Vector sigma;             // diagonal entries of Atilde for Kind::Diagonal
    std::string matrix_path;  // csv rows for Kind::MatrixFile
};

struct DatasetSpec {
    enum class Kind { Mnist, Synthetic };
    Kind kind = Kind::Synthetic;
    std::string images_path, labels_path;
    std::size_t train_count = 2000;
    std::size_t test_count = 500;
    std::string distribution = "blobs";  // blobs | uniform | gaussian
};

struct RunConfig {
    OperatorSpec op;
    DatasetSpec data;
    std::vector<double> lip_grid;  // budgets for train/study commands
    double noise_hat = 0.0;        // relative noise level; scaled by coeff std
    TrainConfig train;
    std::string out_dir = "out";
    std::uint64_t seed = 1234;

    // study options
    std::string grid = "pow2";  // approx-study: pow2 | pow3
    int max_m = 8;
    std::string pairing = "clean";  // convergence-study: clean | matched
    int noise_levels = 7;           // ell = 0..noise_levels-1

    // filters options
    std::string family = "tikhonov";
    double gamma = 1.0;
    double alpha_over_p = 0.1;

    // reconstruct options
    std::string ckpt_path;
    std::string input_path;
};

/// Parse the JSON config file; missing file -> defaults. Flag overrides are
/// applied by the CLI before the command runs.
RunConfig load_config(const std::string& path);
void validate(const RunConfig& cfg);

/// Deterministic hash over the canonical serialized config.
std::uint64_t config_hash(const RunConfig& cfg);

/// Operator, SVD and projected dataset shared by the commands.
struct ProblemContext {
    Matrix a_tilde;  // normalized
    double op_scale = 1.0;
    std::shared_ptr<const SingularSystem> system;
    std::vector<Vector> train_images, test_images;
    Matrix train_coeffs, test_coeffs;  // n x N
    double coeff_std = 0.0;
    std::uint64_t dataset_digest = 0;
};

ProblemContext build_context(const RunConfig& cfg);

int cmd_train(const RunConfig& cfg);
int cmd_reconstruct(const RunConfig& cfg);
int cmd_filters(const RunConfig& cfg);
int cmd_approx_study(const RunConfig& cfg);
int cmd_convergence_study(const RunConfig& cfg);

}  // namespace iresnet

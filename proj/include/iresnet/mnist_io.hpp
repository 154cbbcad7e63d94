#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iresnet/linalg.hpp"

namespace iresnet {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

struct MnistData {
    std::vector<Vector> images;  // flat 784-vectors scaled to [0,1]
    std::vector<std::uint8_t> labels;
};

/// Parses big-endian IDX image/label files, validates 28x28 dimensions and
/// scales uint8 pixels by 1/255. limit = 0 loads everything.
MnistData load_mnist_idx(const std::string& images_path, const std::string& labels_path,
                         std::size_t limit = 0);

/// Image file only; labels left empty.
std::vector<Vector> load_mnist_images(const std::string& images_path, std::size_t limit = 0);

/// Writes images (values clamped to [0,1], quantized to uint8) and labels in
/// the same IDX layout; used for synthetic corpora and round-trip tests.
void save_mnist_idx(const std::string& images_path, const std::string& labels_path,
                    const std::vector<Vector>& images, const std::vector<std::uint8_t>& labels,
                    std::size_t side = 28);

/// Deterministic stroke-blob images that mimic the spectral decay of
/// handwritten digits; stand-in corpus when no IDX files are available.
std::vector<Vector> synthetic_digits(std::size_t count, std::uint64_t seed,
                                     std::size_t side = 28);

}  // namespace iresnet

#include "iresnet/mnist_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "iresnet/errors.hpp"

namespace iresnet {

namespace {

std::uint32_t read_be32(std::istream& is, const char* what) {
    unsigned char buf[4];
    if (!is.read(reinterpret_cast<char*>(buf), 4)) throw TruncatedFile(what);
    return (static_cast<std::uint32_t>(buf[0]) << 24) | (static_cast<std::uint32_t>(buf[1]) << 16) |
           (static_cast<std::uint32_t>(buf[2]) << 8) | static_cast<std::uint32_t>(buf[3]);
}

void write_be32(std::ostream& os, std::uint32_t v) {
    const unsigned char buf[4] = {static_cast<unsigned char>(v >> 24),
                                  static_cast<unsigned char>(v >> 16),
                                  static_cast<unsigned char>(v >> 8),
                                  static_cast<unsigned char>(v)};
    os.write(reinterpret_cast<const char*>(buf), 4);
}

}  // namespace

namespace {

std::vector<Vector> read_idx_images(std::ifstream& img, std::size_t limit,
                                    std::uint32_t* count_out) {
    const std::uint32_t img_magic = read_be32(img, "image header");
    if (img_magic != kIdxImageMagic)
        throw BadMagic("image magic " + std::to_string(img_magic));
    const std::uint32_t n_images = read_be32(img, "image count");
    const std::uint32_t rows = read_be32(img, "image rows");
    const std::uint32_t cols = read_be32(img, "image cols");
    if (rows != 28 || cols != 28)
        throw DimMismatch("expected 28x28 images, got " + std::to_string(rows) + "x" +
                          std::to_string(cols));
    if (count_out) *count_out = n_images;

    std::size_t count = n_images;
    if (limit > 0) count = std::min<std::size_t>(count, limit);

    std::vector<Vector> images;
    images.reserve(count);
    std::vector<unsigned char> buf(28 * 28);
    for (std::size_t i = 0; i < count; ++i) {
        if (!img.read(reinterpret_cast<char*>(buf.data()), 28 * 28))
            throw TruncatedFile("image payload at index " + std::to_string(i));
        Vector v(28 * 28);
        for (std::size_t k = 0; k < v.size(); ++k)
            v[k] = static_cast<double>(buf[k]) / 255.0;
        images.push_back(std::move(v));
    }
    return images;
}

}  // namespace

MnistData load_mnist_idx(const std::string& images_path, const std::string& labels_path,
                         std::size_t limit) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw Error("cannot open image file: " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw Error("cannot open label file: " + labels_path);

    MnistData out;
    std::uint32_t n_images = 0;
    out.images = read_idx_images(img, limit, &n_images);

    const std::uint32_t lab_magic = read_be32(lab, "label header");
    if (lab_magic != kIdxLabelMagic)
        throw BadMagic("label magic " + std::to_string(lab_magic));
    const std::uint32_t n_labels = read_be32(lab, "label count");
    if (n_labels != n_images) throw DimMismatch("image/label counts differ");

    out.labels.resize(out.images.size());
    if (!lab.read(reinterpret_cast<char*>(out.labels.data()),
                  static_cast<std::streamsize>(out.labels.size())))
        throw TruncatedFile("label payload");
    return out;
}

std::vector<Vector> load_mnist_images(const std::string& images_path, std::size_t limit) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw Error("cannot open image file: " + images_path);
    return read_idx_images(img, limit, nullptr);
}

void save_mnist_idx(const std::string& images_path, const std::string& labels_path,
                    const std::vector<Vector>& images, const std::vector<std::uint8_t>& labels,
                    std::size_t side) {
    if (images.size() != labels.size()) throw DimMismatch("save_mnist_idx: counts differ");
    std::ofstream img(images_path, std::ios::binary);
    if (!img) throw Error("cannot write image file: " + images_path);
    std::ofstream lab(labels_path, std::ios::binary);
    if (!lab) throw Error("cannot write label file: " + labels_path);

    write_be32(img, kIdxImageMagic);
    write_be32(img, static_cast<std::uint32_t>(images.size()));
    write_be32(img, static_cast<std::uint32_t>(side));
    write_be32(img, static_cast<std::uint32_t>(side));
    std::vector<unsigned char> buf(side * side);
    for (const Vector& v : images) {
        if (v.size() != side * side) throw DimMismatch("save_mnist_idx: image size");
        for (std::size_t k = 0; k < v.size(); ++k) {
            const double clamped = std::clamp(v[k], 0.0, 1.0);
            buf[k] = static_cast<unsigned char>(std::lround(clamped * 255.0));
        }
        img.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size()));
    }

    write_be32(lab, kIdxLabelMagic);
    write_be32(lab, static_cast<std::uint32_t>(labels.size()));
    lab.write(reinterpret_cast<const char*>(labels.data()),
              static_cast<std::streamsize>(labels.size()));
}

std::vector<Vector> synthetic_digits(std::size_t count, std::uint64_t seed, std::size_t side) {
    std::vector<Vector> out;
    out.reserve(count);
    const double s = static_cast<double>(side);
    for (std::size_t i = 0; i < count; ++i) {
        Rng rng(split_seed(seed, i));
        Vector img(side * side, 0.0);
        const int strokes = 2 + static_cast<int>(rng.index(4));
        for (int st = 0; st < strokes; ++st) {
            // Random quadratic stroke across the frame, drawn as soft dots.
            const double x0 = rng.uniform(0.2 * s, 0.8 * s);
            const double y0 = rng.uniform(0.2 * s, 0.8 * s);
            const double x1 = rng.uniform(0.15 * s, 0.85 * s);
            const double y1 = rng.uniform(0.15 * s, 0.85 * s);
            const double cx = rng.uniform(0.1 * s, 0.9 * s);
            const double cy = rng.uniform(0.1 * s, 0.9 * s);
            const double thick = rng.uniform(0.6, 1.6);
            const double gain = rng.uniform(0.6, 1.0);
            for (int step = 0; step <= 40; ++step) {
                const double t = static_cast<double>(step) / 40.0;
                const double px = (1 - t) * (1 - t) * x0 + 2 * (1 - t) * t * cx + t * t * x1;
                const double py = (1 - t) * (1 - t) * y0 + 2 * (1 - t) * t * cy + t * t * y1;
                const int rad = static_cast<int>(std::ceil(3.0 * thick));
                for (int dy = -rad; dy <= rad; ++dy) {
                    for (int dx = -rad; dx <= rad; ++dx) {
                        const int ix = static_cast<int>(px) + dx;
                        const int iy = static_cast<int>(py) + dy;
                        if (ix < 0 || iy < 0 || ix >= static_cast<int>(side) ||
                            iy >= static_cast<int>(side))
                            continue;
                        const double ddx = static_cast<double>(ix) + 0.5 - px;
                        const double ddy = static_cast<double>(iy) + 0.5 - py;
                        const double d2 = (ddx * ddx + ddy * ddy) / (thick * thick);
                        const double val = gain * std::exp(-0.5 * d2);
                        double& px_ref = img[static_cast<std::size_t>(iy) * side +
                                             static_cast<std::size_t>(ix)];
                        px_ref = std::max(px_ref, val);
                    }
                }
            }
        }
        for (double& v : img) v = std::clamp(v, 0.0, 1.0);
        out.push_back(std::move(img));
    }
    return out;
}

}  // namespace iresnet

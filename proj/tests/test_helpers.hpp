#pragma once

#include <cmath>
#include <memory>

#include "iresnet/operator_core.hpp"

namespace testutil {

/// Singular system of a diagonal operator with the given sigma^2 spectrum
/// (descending, first entry 1 after normalization). Built through the real
/// pipeline so every invariant of build_singular_system holds.
inline std::shared_ptr<const iresnet::SingularSystem> diagonal_system(
    const iresnet::Vector& sigma_sq) {
    iresnet::Vector sigma(sigma_sq.size());
    for (std::size_t i = 0; i < sigma.size(); ++i) sigma[i] = std::sqrt(sigma_sq[i]);
    iresnet::Matrix op = iresnet::Matrix::diagonal(sigma);
    return std::make_shared<iresnet::SingularSystem>(iresnet::build_singular_system(op));
}

/// Log-spaced sigma^2 spectrum from 1 down to floor.
inline iresnet::Vector logspaced_spectrum(std::size_t n, double floor_value) {
    iresnet::Vector out(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double t = n == 1 ? 0.0 : static_cast<double>(j) / static_cast<double>(n - 1);
        out[j] = std::pow(10.0, t * std::log10(floor_value));
    }
    return out;
}

}  // namespace testutil

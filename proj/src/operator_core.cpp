#include "iresnet/operator_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "iresnet/errors.hpp"
#include "iresnet/parallel.hpp"

namespace iresnet {

Vector SingularSystem::project(std::span<const double> x) const {
    return v.apply_transpose(x);
}

Vector SingularSystem::assemble(std::span<const double> coeffs) const {
    return v.apply(coeffs);
}

Vector SingularSystem::apply_normal(std::span<const double> x) const {
    Vector c = project(x);
    for (std::size_t j = 0; j < n; ++j) c[j] *= sigma_sq[j];
    return assemble(c);
}

Vector SingularSystem::adjoint_coefficients(std::span<const double> y) const {
    Vector c = u.apply_transpose(y);
    for (std::size_t j = 0; j < n; ++j) c[j] *= std::sqrt(sigma_sq[j]);
    return c;
}

EigenDecomposition jacobi_eigh(const Matrix& m, double tol, int max_sweeps) {
    if (m.rows() != m.cols()) throw NotSymmetric("matrix is not square");
    if (tol <= 0.0) throw Error("jacobi_eigh: tol must be positive");
    const std::size_t n = m.rows();
    const double scale = m.max_abs();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::fabs(m(i, j) - m(j, i)) > 1e-12 * scale)
                throw NotSymmetric("entry mismatch at (" + std::to_string(i) + "," +
                                   std::to_string(j) + ")");

    Matrix a = m;
    Matrix q = Matrix::identity(n);
    const double frob = a.frobenius_norm();
    const double off_target = tol * frob;

    auto off_norm = [&]() {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
        return std::sqrt(2.0 * s);
    };

    bool converged = (frob == 0.0) || off_norm() <= off_target;
    for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t qi = p + 1; qi < n; ++qi) {
                const double apq = a(p, qi);
                if (std::fabs(apq) < 1e-300) continue;
                const double app = a(p, p);
                const double aqq = a(qi, qi);
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const double tau = s / (1.0 + c);

                a(p, p) = app - t * apq;
                a(qi, qi) = aqq + t * apq;
                a(p, qi) = 0.0;
                a(qi, p) = 0.0;
                for (std::size_t r = 0; r < n; ++r) {
                    if (r != p && r != qi) {
                        const double arp = a(r, p);
                        const double arq = a(r, qi);
                        a(r, p) = arp - s * (arq + tau * arp);
                        a(p, r) = a(r, p);
                        a(r, qi) = arq + s * (arp - tau * arq);
                        a(qi, r) = a(r, qi);
                    }
                    const double qrp = q(r, p);
                    const double qrq = q(r, qi);
                    q(r, p) = qrp - s * (qrq + tau * qrp);
                    q(r, qi) = qrq + s * (qrp - tau * qrq);
                }
            }
        }
        converged = off_norm() <= off_target;
    }
    if (!converged)
        throw NoConvergence("jacobi_eigh: " + std::to_string(max_sweeps) + " sweeps exhausted");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    EigenDecomposition out;
    out.eigenvalues.resize(n);
    out.eigenvectors = Matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t src = order[k];
        out.eigenvalues[k] = a(src, src);
        double sign = 1.0;
        for (std::size_t r = 0; r < n; ++r) {
            if (std::fabs(q(r, src)) > 1e-12) {
                sign = q(r, src) > 0.0 ? 1.0 : -1.0;
                break;
            }
        }
        for (std::size_t r = 0; r < n; ++r) out.eigenvectors(r, k) = sign * q(r, src);
    }
    return out;
}

double spectral_norm(const Matrix& a, int max_iters, double rel_tol) {
    const std::size_t nc = a.cols();
    Vector x(nc);
    // Fixed deterministic start vector; mildly uneven so it is not orthogonal
    // to the leading eigenvector for typical operators.
    Rng rng(0x5eed5eedULL);
    for (auto& xi : x) xi = 1.0 + 0.01 * rng.uniform01();
    double nx = norm2(x);
    if (nx == 0.0) return 0.0;
    scale_inplace(x, 1.0 / nx);

    double sigma_sq_prev = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        Vector ax = a.apply(x);
        Vector y = a.apply_transpose(ax);  // (A^T A) x
        const double ny = norm2(y);
        if (ny == 0.0) return 0.0;
        scale_inplace(y, 1.0 / ny);
        x = std::move(y);
        const double sigma_sq = dot(a.apply(x), a.apply(x));
        if (it > 0 && std::fabs(sigma_sq - sigma_sq_prev) <= rel_tol * sigma_sq) {
            sigma_sq_prev = sigma_sq;
            break;
        }
        sigma_sq_prev = sigma_sq;
    }
    return std::sqrt(sigma_sq_prev);
}

NormalizedOperator normalize_operator(const Matrix& a_tilde) {
    if (!a_tilde.all_finite()) throw Error("normalize_operator: non-finite entries");
    if (a_tilde.max_abs() == 0.0) throw ZeroOperator("normalize_operator");
    const double s = spectral_norm(a_tilde);
    if (s == 0.0) throw ZeroOperator("normalize_operator: zero spectral norm");
    NormalizedOperator out{a_tilde, s};
    out.op.scale(1.0 / s);
    return out;
}

SingularSystem build_singular_system(const Matrix& a_tilde, double zero_threshold) {
    if (!a_tilde.all_finite()) throw Error("build_singular_system: non-finite entries");
    if (a_tilde.max_abs() == 0.0) throw ZeroOperator("build_singular_system");
    const Matrix gram = a_tilde.gram();
    EigenDecomposition eig = jacobi_eigh(gram);

    const std::size_t total = eig.eigenvalues.size();
    std::size_t n = 0;
    while (n < total && eig.eigenvalues[n] > zero_threshold) ++n;

    SingularSystem sys;
    sys.n = n;
    sys.null_dim = total - n;
    sys.sigma_sq.assign(eig.eigenvalues.begin(), eig.eigenvalues.begin() + n);
    sys.v = Matrix(a_tilde.cols(), n);
    sys.u = Matrix(a_tilde.rows(), n);
    for (std::size_t j = 0; j < n; ++j) {
        Vector vj = eig.eigenvectors.col(j);
        for (std::size_t r = 0; r < vj.size(); ++r) sys.v(r, j) = vj[r];
        Vector uj = a_tilde.apply(vj);
        const double sigma = std::sqrt(sys.sigma_sq[j]);
        for (std::size_t r = 0; r < uj.size(); ++r) sys.u(r, j) = uj[r] / sigma;
    }
    return sys;
}

namespace {

// Length of the intersection of the line p(s) = p0 + s*dir (|dir| = 1) with
// the half-open box [x0,x1) x [y0,y1). Half-open edges keep rays that run
// exactly along a grid line from being counted for both adjacent pixels.
double ray_box_length(double p0x, double p0y, double dirx, double diry, double x0,
                      double x1, double y0, double y1) {
    constexpr double kParallelEps = 1e-12;
    double smin = -1e30, smax = 1e30;

    if (std::fabs(dirx) < kParallelEps) {
        if (!(p0x >= x0 && p0x < x1)) return 0.0;
    } else {
        double s0 = (x0 - p0x) / dirx;
        double s1 = (x1 - p0x) / dirx;
        if (s0 > s1) std::swap(s0, s1);
        smin = std::max(smin, s0);
        smax = std::min(smax, s1);
    }
    if (std::fabs(diry) < kParallelEps) {
        if (!(p0y >= y0 && p0y < y1)) return 0.0;
    } else {
        double s0 = (y0 - p0y) / diry;
        double s1 = (y1 - p0y) / diry;
        if (s0 > s1) std::swap(s0, s1);
        smin = std::max(smin, s0);
        smax = std::min(smax, s1);
    }
    return std::max(0.0, smax - smin);
}

}  // namespace

Matrix radon_matrix(std::size_t img_side, std::size_t n_angles, std::size_t n_detectors) {
    const double half = static_cast<double>(img_side) / 2.0;  // image is [-half, half)^2
    const double spacing =
        static_cast<double>(img_side) * std::sqrt(2.0) / static_cast<double>(n_detectors);
    const double det_center = (static_cast<double>(n_detectors) - 1.0) / 2.0;

    Matrix a(n_angles * n_detectors, img_side * img_side);
    parallel_for(n_angles, [&](std::size_t ang) {
        const double theta =
            static_cast<double>(ang) * 3.14159265358979323846 / static_cast<double>(n_angles);
        const double nx = std::cos(theta), ny = std::sin(theta);   // detector axis
        const double dx = -std::sin(theta), dy = std::cos(theta);  // ray direction
        for (std::size_t d = 0; d < n_detectors; ++d) {
            const double t = (static_cast<double>(d) - det_center) * spacing;
            const double p0x = t * nx, p0y = t * ny;
            double* row = a.row_ptr(ang * n_detectors + d);
            for (std::size_t py = 0; py < img_side; ++py) {
                const double y0 = static_cast<double>(py) - half;
                for (std::size_t px = 0; px < img_side; ++px) {
                    const double x0 = static_cast<double>(px) - half;
                    const double len =
                        ray_box_length(p0x, p0y, dx, dy, x0, x0 + 1.0, y0, y0 + 1.0);
                    if (len > 0.0) row[py * img_side + px] = len;
                }
            }
        }
    });
    return a;
}

Vector sample_noise(const NoiseModel& model, std::size_t dim) {
    NoiseStream stream(model);
    return stream.sample(dim);
}

NoiseStream::NoiseStream(const NoiseModel& model) : delta_(model.delta), rng_(model.seed) {
    if (!(model.delta >= 0.0)) throw Error("NoiseModel: delta must be >= 0");
}

Vector NoiseStream::sample(std::size_t dim) {
    Vector out(dim, 0.0);
    if (delta_ == 0.0) return out;
    for (auto& v : out) v = delta_ * rng_.normal();
    return out;
}

}  // namespace iresnet

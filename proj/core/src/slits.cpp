#include "superscar/slits.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "superscar/numerics.hpp"

namespace superscar {
namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

double kernel(double kappa, double x, double y) {
    const double d = x - y;
    return std::sqrt(kappa / kPi) * std::exp(-kappa * d * d);
}

double transverse_momentum(int n) { return 0.5 * kPi * static_cast<double>(n); }

}  // namespace

double FredholmSpectrum::extend(int n, double x) const {
    if (n < 1 || n > static_cast<int>(eigenfunctions.size()))
        throw std::out_of_range("FredholmSpectrum::extend: mode index out of range");
    const auto& psi = eigenfunctions[static_cast<std::size_t>(n - 1)];
    double acc = 0.0;
    for (std::size_t j = 0; j < nodes.size(); ++j)
        acc += weights[j] * kernel(kappa, x, nodes[j]) * psi[j];
    return acc / eigenvalues[static_cast<std::size_t>(n - 1)];
}

FredholmSpectrum solve_fredholm(double kappa, int n_modes, int quadrature_order) {
    if (!(kappa > 0.0)) throw std::invalid_argument("solve_fredholm: kappa must be positive");
    if (static_cast<double>(quadrature_order) < 8.0 * std::sqrt(kappa))
        throw std::invalid_argument(
            "solve_fredholm: quadrature order under-resolves the kernel width; "
            "need order >= 8 sqrt(kappa)");
    if (n_modes < 1 || n_modes > quadrature_order / 4)
        throw std::invalid_argument("solve_fredholm: need 1 <= n_modes <= quadrature_order/4");

    const auto order = static_cast<std::size_t>(quadrature_order);
    const QuadratureRule rule = gauss_legendre(quadrature_order);

    // Symmetrized collocation B = W^{1/2} K W^{1/2} keeps the discrete problem
    // symmetric, so parity and orthogonality survive up to rounding.
    Eigen::MatrixXd b(quadrature_order, quadrature_order);
    std::vector<double> sqrt_w(order);
    for (std::size_t i = 0; i < order; ++i) sqrt_w[i] = std::sqrt(rule.w[i]);
    for (std::size_t i = 0; i < order; ++i) {
        b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) =
            rule.w[i] * kernel(kappa, rule.x[i], rule.x[i]);
        for (std::size_t j = i + 1; j < order; ++j) {
            const double v = sqrt_w[i] * sqrt_w[j] * kernel(kappa, rule.x[i], rule.x[j]);
            b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
            b(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
        }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(b);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("solve_fredholm: eigen-decomposition failed");

    FredholmSpectrum out;
    out.kappa = kappa;
    out.quadrature_order = quadrature_order;
    out.nodes.assign(rule.x.begin(), rule.x.end());
    out.weights.assign(rule.w.begin(), rule.w.end());
    out.trace = solver.eigenvalues().sum();

    out.eigenvalues.reserve(static_cast<std::size_t>(n_modes));
    out.eigenfunctions.reserve(static_cast<std::size_t>(n_modes));
    for (int m = 0; m < n_modes; ++m) {
        const auto col = static_cast<Eigen::Index>(quadrature_order - 1 - m);  // descending
        out.eigenvalues.push_back(solver.eigenvalues()(col));
        std::vector<double> psi(order);
        for (std::size_t i = 0; i < order; ++i)
            psi[i] = solver.eigenvectors()(static_cast<Eigen::Index>(i), col) / sqrt_w[i];
        double lead = 0.0;
        for (std::size_t i = 0; i < order && lead == 0.0; ++i) lead = psi[i];
        if (lead < 0.0)
            for (double& v : psi) v = -v;
        out.eigenfunctions.push_back(std::move(psi));
    }
    return out;
}

double fredholm_eigenvalue_asymptote(double kappa, int n) {
    const double pt2 = transverse_momentum(n) * transverse_momentum(n);
    return 1.0 - pt2 / (4.0 * kappa) + 0.206 * pt2 / std::pow(kappa, 1.5);
}

double boundary_value(const FredholmSpectrum& spectrum, int n) {
    if (n < 1 || n > static_cast<int>(spectrum.eigenfunctions.size()))
        throw std::out_of_range("boundary_value: mode index out of range");
    const double pt = transverse_momentum(n);
    const auto& psi = spectrum.eigenfunctions[static_cast<std::size_t>(n - 1)];
    double cross = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < spectrum.nodes.size(); ++i) {
        const double s = std::sin(pt * (spectrum.nodes[i] + 1.0));
        cross += spectrum.weights[i] * psi[i] * s;
        norm += spectrum.weights[i] * s * s;
    }
    const double amplitude = cross / norm;
    if (std::abs(amplitude) < 1e-12)
        throw std::runtime_error("boundary_value: eigenfunction has no sine component");
    return std::abs(spectrum.extend(n, 1.0) / amplitude);
}

double boundary_value_asymptote(double kappa, int n) {
    return transverse_momentum(n) * (0.5 / std::sqrt(kappa) - 0.125 / kappa);
}

std::complex<double> complex_energy_shift(double k, double d, double w, int n) {
    if (!(k > 0.0) || !(d > 0.0) || !(w > 0.0) || n < 1)
        throw std::invalid_argument("complex_energy_shift: arguments must be positive");
    const double p = kPi * static_cast<double>(n) / w;
    const double c = -2.0 * kZetaHalf / std::sqrt(kPi);
    const double magnitude = c * p * p * std::sqrt(d / (k * w * w));
    return {magnitude, magnitude};
}

}  // namespace superscar

#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

// Shared numeric kernels: quadrature rules, special functions, 1-D
// minimization, and small least-squares fits. Everything here is pure and
// thread-safe.

namespace superscar {

// Riemann zeta at 1/2; enters the Kirchhoff asymptote and the leakage constant.
inline constexpr double kZetaHalf = -1.4603545088095868;

struct QuadratureRule {
    std::vector<double> x;
    std::vector<double> w;
};

// Gauss-Legendre rule with n nodes on [-1,1]. Nodes found by Newton iteration
// on P_n; accurate to machine precision for n up to several thousand.
QuadratureRule gauss_legendre(int n);

// Affine image of a rule on [a,b].
QuadratureRule mapped_rule(const QuadratureRule& rule, double a, double b);

// Faddeeva function w(z) = exp(-z^2) erfc(-iz), Im z >= 0 required.
std::complex<double> faddeeva(std::complex<double> z);

// Complementary error function for complex argument.
std::complex<double> erfc_complex(std::complex<double> z);

// Golden-section search for the minimizer of f on [a,b].
double golden_minimize(const std::function<double(double)>& f, double a, double b,
                       double xtol);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
};

// Ordinary least squares y ~ slope*x + intercept.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

// Weighted Levenberg-Marquardt fit of model(params, x) to (x, y) samples.
// Forward-difference Jacobian; suited to the few-parameter fits used here.
// Weights may be empty (unit weights).
std::vector<double> fit_curve(
    const std::function<double(std::span<const double>, double)>& model,
    std::span<const double> x, std::span<const double> y,
    std::span<const double> weights, std::vector<double> initial,
    int max_iterations = 200);

// Bessel J_0..J_{n_max}(x) for x >= 0 by downward (Miller) recurrence,
// normalized with J_0 + 2*sum J_{2k} = 1. Accurate to ~1e-13 relative in the
// oscillatory region and returns correctly underflowed values for n >> x.
std::vector<double> bessel_j_sequence(double x, int n_max);

// Runs body(i) for i in [0, n) across n_threads workers. n_threads <= 1 runs
// inline. Exceptions from workers are rethrown on the calling thread.
void parallel_for(std::size_t n, int n_threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace superscar

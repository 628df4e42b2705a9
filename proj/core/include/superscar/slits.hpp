#pragma once

#include <complex>
#include <vector>

namespace superscar {

/// Discrete spectrum of the Gaussian smoothing kernel
/// sqrt(kappa/pi) e^{-kappa (x-y)^2} on [-1, 1]: the Wick-rotated one-period
/// transfer operator of a wave running down a periodic array of slits.
/// kappa = |k w^2 / (8 d)| for slit width w and slit spacing d.
struct FredholmSpectrum {
    double kappa = 0.0;
    int quadrature_order = 0;

    /// Largest eigenvalues, decreasing; as many as requested from the solve.
    std::vector<double> eigenvalues;
    /// Matching eigenfunctions sampled on `nodes`, orthonormal under `weights`;
    /// sign fixed so each starts positive at the node nearest x = -1.
    std::vector<std::vector<double>> eigenfunctions;

    std::vector<double> nodes;    ///< Gauss-Legendre nodes on [-1, 1]
    std::vector<double> weights;  ///< matching quadrature weights

    /// Sum of the full discrete spectrum; equals the kernel trace
    /// 2 sqrt(kappa/pi) up to rounding.
    double trace = 0.0;

    /// Smooth interpolation of eigenfunction n (1-based) to any x, valid at
    /// the endpoints: Psi_n(x) = (1/Lambda_n) sum_j w_j K(x, x_j) Psi_n(x_j).
    double extend(int n, double x) const;
};

/// Solves the kernel eigenproblem by symmetrized Gauss-Legendre collocation.
/// Requires quadrature_order >= 8 sqrt(kappa) (kernel width resolution) and
/// n_modes <= quadrature_order / 4 (discretization trust range); throws
/// std::invalid_argument otherwise.
FredholmSpectrum solve_fredholm(double kappa, int n_modes, int quadrature_order);

/// Large-kappa law Lambda_n -> 1 - pt^2/(4 kappa) + 0.206 pt^2/kappa^{3/2}
/// with transverse momentum pt = pi n / 2.
double fredholm_eigenvalue_asymptote(double kappa, int n);

/// |Psi_n(1)|: the eigenfunction value at the slit edge, normalized so the
/// best-fit interior sine sin(pt (x+1)) has unit amplitude. The signed ratio
/// alternates with parity; the magnitude is what the decay law describes.
double boundary_value(const FredholmSpectrum& spectrum, int n);

/// Large-kappa law |Psi_n(1)| -> pt (1/(2 sqrt(kappa)) - 1/(8 kappa)).
double boundary_value_asymptote(double kappa, int n);

/// Complex energy shift of mode n propagating inside a slit of width w with
/// period d at wavenumber k:
///   dE = C (1 + i) p_n^2 sqrt(d/(k w^2)),  p_n = pi n / w,
/// with the same constant C = -2 zeta(1/2)/sqrt(pi) as the grating leakage law.
std::complex<double> complex_energy_shift(double k, double d, double w, int n);

}  // namespace superscar

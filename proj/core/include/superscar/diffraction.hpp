#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace superscar {

/// Complex Fresnel integral F(u) = e^{-i pi/4}/sqrt(pi) * integral_u^inf e^{i t^2} dt.
/// F(0) = 1/2, F(-inf) -> 1, F(+inf) -> 0, and F(u) + F(-u) = 1.
std::complex<double> fresnel(double u);

/// Exact field of a plane wave scattering on a half-plane with Dirichlet
/// conditions. Polar coordinates are centred on the edge with the screen along
/// theta = 0 == 2*pi; the wave arrives from direction theta_i in (0, pi).
/// The field vanishes on both screen faces and solves the Helmholtz equation.
std::complex<double> halfplane_field(double k, double r, double theta_i, double theta_f);

/// Angular coefficient of the edge-diffracted cylindrical wave in the
/// large-distance split  field = geometric part + D/sqrt(8 pi k r) e^{i(kr - 3pi/4)}.
/// D diverges on the optical boundaries theta_f = pi -+ theta_i; there the
/// caller receives a signed infinity with on_boundary set instead of an
/// exception, so plotting code can annotate the poles.
struct DiffractionCoefficient {
    double value = 0.0;
    bool on_boundary = false;
};

DiffractionCoefficient halfplane_D(double theta_f, double theta_i);

/// Same coefficient for a wedge of exterior opening gamma * pi (gamma in (0, 2]);
/// gamma = 2 reproduces halfplane_D identically, gamma = 1 is a flat wall with
/// no diffracted wave.
DiffractionCoefficient wedge_D(double theta_f, double theta_i, double gamma);

/// Multiple-scattering amplitude of n-step forward diffraction along a row of
/// edges: A_n = (1/pi) sum_{q=1}^{n-1} 1/sqrt(q(n-q)). Empty sum (n < 2) is 0.
double kirchhoff_An(std::size_t n);

/// Large-n limit 1 + 2 zeta(1/2)/(pi sqrt(n)) of kirchhoff_An.
double kirchhoff_An_asymptote(std::size_t n);

/// Oscillating level-density contribution of edge pairs a distance n*d apart:
/// -d A_n cos(k d n) / (8 pi k).
double kirchhoff_rho_diff(double k, double d, std::size_t n);

/// Geometry and incidence for a periodic row of half-planes inclined at angle
/// alpha against the row axis, with apexes spaced d apart.
struct ScatterConfig {
    double k = 0.0;      ///< wavenumber
    double d = 0.0;      ///< spacing between consecutive apexes
    double alpha = 0.0;  ///< inclination of the half-planes, 0 < alpha < pi
    double phi = 0.0;    ///< grazing angle of the incident wave

    /// Dimensionless momentum k d / pi.
    double Q_dim() const;

    /// Non-empty when sqrt(Q) * phi exceeds the small-angle validity budget 0.3.
    std::string small_angle_warning() const;
};

struct GratingOrder {
    int n = 0;
    double phi_n = 0.0;  ///< outgoing angle of the reflected beam
    double R_n = 0.0;    ///< amplitude magnitude (0 when below leading order)
};

struct TransmittedMode {
    int m = 0;
    double omega_m = 0.0;  ///< longitudinal frequency sqrt(k^2 - (pi m / a)^2)
    double T_m = 0.0;      ///< amplitude magnitude
};

/// Far-field content of the scattered wave: the reflected grating orders, the
/// open transmission channels of the tubes between neighbouring half-planes,
/// and the specular survival probability |R0|^2.
struct ReflectionSpectrum {
    std::vector<GratingOrder> orders;
    std::vector<TransmittedMode> transmissions;
    double leakage = 1.0;
};

/// Specular amplitude R0 = -1 - sqrt(Q) (1 - i) zeta(1/2) phi, valid for
/// sqrt(Q) phi << 1.
std::complex<double> specular_R0(const ScatterConfig& config);

/// First-order specular survival |R0|^2 = 1 - C sqrt(k d) phi.
double leakage(const ScatterConfig& config);

/// The constant C = -2 zeta(1/2)/sqrt(pi) ~ 1.6478 of the leakage law.
double leakage_constant();

/// |r_n|^2 for the low reflected beams phi_n ~ 2 sqrt(n/Q); the full amplitude
/// is R_n = sqrt(Q) phi r_n. Infinite product evaluated as a log-space sum
/// with an analytic zeta tail; relative error well below 1e-6.
double small_angle_rn(std::size_t n);

/// |r(u)|^2 profile of the quasi-specular reflection band centred on the order
/// n* = Q sin^2(alpha). |r(0)|^2 = 1; zeros at u = -sqrt(m) for integer m.
double large_angle_r(double u);

/// Transmission profile |t(u)|^2 = 2 |r(u)|^2 of the same band.
double transmission_t(double u);

/// Band detuning u_n = (n - Q sin^2 alpha) / (sqrt(Q) sin 2 alpha).
double u_of(int n, const ScatterConfig& config);

/// All propagating reflected orders: integer n with
/// -Q sin^2(phi/2) <= n <= Q cos^2(phi/2) and phi_n = arccos(cos phi - 2 pi n/(k d)).
/// Amplitudes are left at 0; reflection_spectrum fills them.
std::vector<GratingOrder> grating_orders(const ScatterConfig& config);

/// Composite far-field summary. Reflected amplitudes combine the small-angle
/// family (fixed n, phi_n ~ 2 sqrt(n/Q)) with, for alpha > pi/2, the
/// quasi-specular band R_n = phi/|sin 2 alpha| |r(u_n)|; for alpha < pi/2 the
/// band leaves through the tubes instead and fills the transmission list with
/// T_m = phi |t(u_m(pi - alpha))|. Orders with no leading-order amplitude
/// (n < 0) keep R_n = 0.
ReflectionSpectrum reflection_spectrum(const ScatterConfig& config);

}  // namespace superscar

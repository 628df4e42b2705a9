#pragma once

#include <Eigen/Dense>

#include <complex>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "superscar/basis.hpp"
#include "superscar/geometry.hpp"

// Superscar quasimodes: plane-wave channels supported on periodic-orbit
// pencils, folded back into the billiard.
//
// Barrier billiard: a pencil wave exp(i pi m xi / L_p) * phi_n(eta) folds into
// the doubled box (-a,a) x (0,b). Because the pencil direction is rational,
// the overlap with a box mode sin(pi p (x+a)/(2a)) sin(pi k y / b) reduces to
// closed form: for odd M only the index line p M + 2 k N = +-m contributes,
// while even M adds a conditionally convergent longitudinal tail (the Gibbs
// tail visible in measured expansion coefficients).
//
// pi/8 triangle: the (m,n) channel of the long cathetus folds through the
// corner reflections by inspection; fold_triangle evaluates the four-image
// alternating sum directly.

namespace superscar {

// Bouncing-ball families parallel to the rectangle sides. They fold by
// inspection and bypass the pencil machinery: the horizontal family spans the
// full rectangle, the vertical ones live below (dd) or above (dn) the slit
// tip, the latter with a free end on the Neumann piece.
enum class NamedOrbit { horizontal, vertical_dd, vertical_dn };

// Transverse profile family. For genuine pencils this is a pure function of
// (M mod 4, m mod 2); the ball cases cover the named orbits.
enum class TransverseCase {
    inner_half,       // odd M, even m: half width, support centered on the orbit
    outer_half,       // odd M, odd m: half width, support on the adjacent strip
    full_centered,    // M = 2 mod 4: doubled width, centered
    full_offset,      // M = 0 mod 4: doubled width, one-sided
    horizontal_ball,  // transverse along x, support (0, a)
    vertical_dd_ball, // transverse along y, support (0, b/2)
    vertical_dn_ball, // transverse along y, support (b/2, b)
};

const char* to_string(NamedOrbit orbit);
const char* to_string(TransverseCase c);

struct SuperscarWave {
    PeriodicOrbitPencil pencil;      // meaningful when named is empty
    std::optional<NamedOrbit> named;
    int m = 1;                       // longitudinal index (odd for even-M pencils)
    int n = 1;                       // transverse index
    double a = 0.0;                  // desymmetrised rectangle
    double b = 0.0;
    double energy = 0.0;
    TransverseCase profile_case = TransverseCase::inner_half;
    double validity = 0.0;           // transverse momentum * sqrt(L_p / (k pi))
};

// Wave on a genuine pencil (M, N >= 1). Throws std::invalid_argument when the
// longitudinal parity breaks the pencil's rule, when m or n < 1, or when the
// pencil is a degenerate bouncing-ball family (use make_named_wave).
SuperscarWave make_pencil_wave(const PeriodicOrbitPencil& pencil, int m, int n,
                               const BilliardSpec& spec);

// Convenience overload that builds the pencil from coprime (M, N) and picks
// the parity branch matching m.
SuperscarWave make_pencil_wave(int M, int N, int m, int n, const BilliardSpec& spec);

SuperscarWave make_named_wave(NamedOrbit orbit, int m, int n, const BilliardSpec& spec);

// Recomputed from the quantum numbers; equals the stored energy exactly.
double superscar_energy(const SuperscarWave& wave);

// Profile value at transverse offset eta (zero outside the support).
double transverse_profile(const SuperscarWave& wave, double eta);

// Support interval of the transverse profile.
std::pair<double, double> transverse_support(const SuperscarWave& wave);

// Recomputed validity parameter p_t * sqrt(L / (k pi)).
double validity_parameter(const SuperscarWave& wave);

// Largest transverse index open at momentum k: floor(lambda0 * w_eff *
// sqrt(k / (pi L_p))); 0 means the channel is closed. Consistent with
// max_channel_length for gamma = w_eff * L_p / area.
int admissible_transverse_count(const PeriodicOrbitPencil& pencil, double k,
                                double lambda0 = 1.0);

struct BezoutPair {
    long long nu = 0;
    long long mu = 0;
};

// Solves lhs * nu - rhs * mu = 1 with 0 <= mu < lhs; throws
// std::invalid_argument unless gcd(lhs, rhs) = 1 and lhs >= 1.
BezoutPair bezout_pair(long long lhs, long long rhs);

// Lattice bridge between doubled-box mode labels (p, k) and pencil-frame
// labels (m_long, q). Odd M uses whole longitudinal indices against length
// L_p; even M uses half-period indices against L_p/2 and the doubled width.
// Both directions are exact integer maps; pencil_energy and mode_energy agree
// to rounding for every admissible pair.
struct PencilIndexMap {
    int M = 0;
    int N = 0;
    bool half_index = false;   // even-M map
    long long nu = 0;          // Bezout pair of (M, 2N) resp. (M/2, N)
    long long mu = 0;
    double shift = 0.0;        // transverse offset per longitudinal unit
    double length_eff = 0.0;   // L_p (odd M), L_p/2 (even M)
    double width_eff = 0.0;    // w (odd M), 2w (even M)
    double two_a = 0.0;
    double b = 0.0;

    std::pair<long long, long long> to_mode(long long m_long, long long q) const;
    std::pair<long long, long long> to_pencil(long long p, long long k) const;
    double pencil_energy(long long m_long, long long q) const;
    double mode_energy(long long p, long long k) const;
};

PencilIndexMap pencil_index_map(const PeriodicOrbitPencil& pencil, const BilliardSpec& spec);

struct FoldedEntry {
    int p = 0;                   // x index of the doubled box (-a, a)
    int k = 0;                   // y index on (0, b)
    std::complex<double> value;  // overlap coefficient, prefactor 2/(ab)
};

// Folded pencil wave as a coefficient list over the doubled-box sine basis.
// Values are the raw overlap coefficients; their squared sum approaches
// norm_limit (1 for odd M, 4 for even M where the pencil covers the box
// twice) as the truncation grows, and captured records the kept share.
struct FoldedWave {
    SuperscarWave source;
    PencilIndexMap map;
    std::vector<FoldedEntry> coeffs;
    double norm_limit = 1.0;
    double captured = 0.0;
    std::string truncation_warning;  // set when captured < 0.99
};

// Doubled-box basis sized so every mode up to energy_margin * wave energy is
// kept (plus an index pad on both axes).
ExpansionBasis fold_basis(const SuperscarWave& wave, double energy_margin = 2.0,
                          int pad = 16);

// Folds a pencil wave over the doubled box. basis must be full_rectangle over
// (2a) x b. Odd M keeps the exact index-line construction; even M evaluates
// every box bin including the longitudinal Gibbs tail. Entries below 1e-10 of
// the peak are dropped after the norm accounting. Throws
// std::invalid_argument for named waves or a mismatched basis.
FoldedWave fold_barrier(const SuperscarWave& wave, const ExpansionBasis& basis);

// Exact overlap of a pencil wave with one doubled-box mode, including the
// conditionally convergent cross-parity terms that the odd-M lattice
// construction discards. Oracle for fold_barrier.
std::complex<double> folded_overlap_exact(const SuperscarWave& wave, int p, int k);

// Truncated series value at a point of the doubled box, x in (-a, a).
std::complex<double> folded_value(const FoldedWave& fold, double x, double y);

// Restriction of the folded wave to the x > 0 half, expanded over the
// half-integer cosine family used by the barrier solver and renormalized to
// unit Frobenius norm. Odd p maps directly onto cosine q = (p+1)/2; even p
// feeds through the sine-to-cosine mixing row.
Eigen::MatrixXcd folded_even_series(const FoldedWave& fold, int q_max, int k_max);

// Closed-form even-series coefficients of a named bouncing-ball wave,
// renormalized to unit Frobenius norm. Throws std::invalid_argument when the
// block cannot hold the wave's direct index.
Eigen::MatrixXcd named_even_series(const SuperscarWave& wave, int q_max, int k_max);

// Norm share per longitudinal index, each entry assigned to the index of its
// dominant unfolding term. Odd-M folds concentrate on the single line -m.
std::map<long long, double> longitudinal_marginal(const FoldedWave& fold);

// Longitudinal tail factor L_p / (pi (mprime + 1/2 - m)) of the even-M fold.
double gibbs_factor(double orbit_length, long long m, long long mprime);

// Fitted log-log decay exponent of the longitudinal marginal against the
// distance from the line center m/2 (expected -1). Throws
// std::invalid_argument for odd-M folds and std::runtime_error when fewer
// than 20 tail points are available.
double gibbs_tail_profile(const FoldedWave& fold);

// pi^2 (m^2/a^2 + n^2/b^2) for the pi/8 triangle; the (m,n) channel of the
// long cathetus.
double triangle_superscar_energy(int m, int n, const BilliardSpec& spec);

// Four-image alternating fold of the triangle channel wave at (x, y):
//   psi(x,y) - psi((x+y)/r,(x-y)/r) + psi((x-y)/r,(x+y)/r) - psi(y,x),
// r = sqrt(2), where psi(u,v) = (2/sqrt(ab)) sin(pi m u/a) sin(pi n v/b)
// windowed to (0,a)x(0,b). Vanishes on all three edges; squared integral over
// the triangle is 1 up to O(1e-4) interference.
double fold_triangle(int m, int n, double x, double y, const BilliardSpec& spec);

// Projection of the triangle fold on the bounding-box sine basis (the layout
// solve_triangle uses), by per-cell Gauss quadrature split along the fold
// kink lines x = b, x + y = sqrt(2) b, x - y = sqrt(2) b. Raw coefficients:
// the squared sum approaches the fold's squared norm as the basis grows.
Eigen::MatrixXd fold_triangle_series(int m, int n, const BilliardSpec& spec,
                                     const ExpansionBasis& basis, int threads = 0);

}  // namespace superscar

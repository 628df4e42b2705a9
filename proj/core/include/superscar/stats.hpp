#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "superscar/geometry.hpp"
#include "superscar/quasimode.hpp"
#include "superscar/spectral.hpp"

// Quantitative channel-wave detection and eigenfunction statistics: squared
// overlaps of eigenstates with folded channel waves, Lorentzian peak fits to
// their local density, inverse participation moments with fractal scaling of
// the expansion coefficients, and level-spacing measures of the unfolded
// spectrum.

namespace superscar {

struct OverlapEntry {
    double energy = 0.0;          // eigenstate energy
    long long m = 0;              // best longitudinal index at this energy
    double channel_energy = 0.0;  // channel-wave energy at (m, n)
    double weight = 0.0;          // squared overlap, in [0, 1]
};

struct OverlapSeries {
    int n = 1;  // transverse index, fixed along the series
    SpectralWindow window;
    std::vector<OverlapEntry> entries;  // ascending in energy
};

// Longitudinal index of admissible parity whose channel energy is closest to
// the given energy; exact ties round toward the smaller index, and the result
// is clamped to the smallest admissible index. Throws std::invalid_argument
// when n < 1 or the transverse channel is closed at this energy.
long long nearest_longitudinal_index(const PeriodicOrbitPencil& pencil, int n, double energy,
                                     const BilliardSpec& spec);
long long nearest_longitudinal_index(NamedOrbit orbit, int n, double energy,
                                     const BilliardSpec& spec);

// Squared coefficient-space overlap |sum conj(series) .* coeffs|^2 over the
// common (q, k) block. Both factors carry unit Frobenius norm, so the result
// lies in [0, 1] up to truncation.
double overlap(const EigenState& state, const Eigen::MatrixXcd& series);

// Same against a folded pencil wave: re-expresses the fold on the state's
// half-interval cosine layout first. Throws std::invalid_argument when the
// state uses a different series family (basis mismatch).
double overlap(const EigenState& state, const FoldedWave& fold);

// Squared overlap of every state in the window with the channel wave at its
// own best longitudinal index. One fold is built per distinct index and
// contracted with each state; per-state work runs across threads (0 = number
// of cores). Throws std::invalid_argument when the transverse channel is
// closed somewhere in the window.
OverlapSeries overlap_series(const PeriodicOrbitPencil& pencil, int n,
                             const SpectralWindow& window, std::span<const EigenState> states,
                             const BilliardSpec& spec, int threads = 0);
OverlapSeries overlap_series(NamedOrbit orbit, int n, const SpectralWindow& window,
                             std::span<const EigenState> states, const BilliardSpec& spec,
                             int threads = 0);

struct DensityHistogram {
    std::vector<double> centers;  // energy offsets delta E at bin midpoints
    std::vector<double> density;  // summed weight per unit energy per peak
    double bin_width = 0.0;
    int peak_count = 0;  // distinct longitudinal indices feeding the histogram
};

// Histogram of squared overlaps against delta E = E - channel energy over
// [-half_range, half_range], normalized per peak so a fully captured isolated
// peak integrates to one. Throws std::invalid_argument on an empty series or
// a non-positive bin count / range.
DensityHistogram local_density(const OverlapSeries& series, int bins, double half_range);

struct BreitWignerFit {
    double epsilon_n = 0.0;   // peak offset
    double gamma_n = 0.0;     // full width at half maximum
    double amplitude = 1.0;   // integrated weight of the fitted peak
    double chi2 = 0.0;        // sum of squared bin residuals
    bool degenerate = false;  // width collapsed to the bin scale
};

// Least-squares fit of amp * G / (2 pi ((dE - eps)^2 + G^2 / 4)) to the
// histogram. Throws std::invalid_argument when the histogram is empty or
// carries no weight.
BreitWignerFit bw_fit(const DensityHistogram& hist);

// Asymptotic width of the overlap peaks around a pencil's channel energies:
// C pi n^2 / w^2 sqrt(d / (k w^2)) with w the pencil's effective width, d the
// singular-vertex spacing along its boundary, and C the leakage constant.
// Equals Im(complex_energy_shift(k, d, w, n)) / pi.
double gamma_prediction(const PeriodicOrbitPencil& pencil, int n, double k);

struct MomentSample {
    double energy = 0.0;
    double k = 0.0;           // sqrt(energy)
    std::size_t support = 0;  // number of coefficients in the truncated set
    std::vector<double> m_q;  // moments, aligned with the q list
};

// Moments M_q = sum p_i^q of the normalized squared amplitudes p_i. The state
// form truncates the coefficient block at mode energies below energy_margin
// times the state energy before normalizing. Throws std::invalid_argument on
// an empty or zero amplitude set.
MomentSample moments(std::span<const double> amplitudes, double energy,
                     std::span<const double> q_list);
MomentSample moments(const EigenState& state, std::span<const double> q_list,
                     double energy_margin = 1.5);

struct MultifractalAnalysis {
    std::vector<double> q_list;
    std::vector<MomentSample> samples;
    std::vector<double> tau;        // log R_q vs log k slope per q
    std::vector<double> d_q;        // tau / (q - 1)
    std::vector<double> d_q_err;    // regression standard error of d_q
    std::vector<double> amplitude;  // R_q ~ amplitude * k^tau
};

// Log-log regression of the participation ratios R_q = 1 / M_q against k.
// Requires at least eight samples spanning a decade of k; throws
// std::invalid_argument otherwise.
MultifractalAnalysis fractal_fit(std::vector<MomentSample> samples, std::vector<double> q_list);

// Mean counting-function image of an ascending level list (area + perimeter
// terms), shifted to start at zero: the unfolded sequence has unit mean
// density. Throws std::invalid_argument when the list is not ascending.
std::vector<double> unfold_levels(std::span<const double> energies, const BilliardSpec& spec,
                                  double barrier_fraction = 0.5);

struct SpectralStatistics {
    std::vector<double> s_centers;        // spacing bin midpoints
    std::vector<double> spacing_density;  // p(s), integrates to one
    std::vector<double> l_values;         // window lengths L = 1..20
    std::vector<double> number_variance;  // sigma^2(L)
    double chi = 0.0;                     // sigma^2 slope over L in [5, 15]
    double chi_stderr = 0.0;
};

// Nearest-neighbour spacing density and number variance of an unfolded
// (unit mean density) sequence. Requires at least 500 levels; throws
// std::invalid_argument otherwise.
SpectralStatistics spacing_stats(std::span<const double> unfolded);

// CSV emitters for the figure pipelines.
std::string to_csv(const OverlapSeries& series);
std::string to_csv(const DensityHistogram& hist);
std::string to_csv(const MultifractalAnalysis& analysis);
std::string to_csv(const SpectralStatistics& stats);

}  // namespace superscar

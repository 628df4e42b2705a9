#include "superscar/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>
#include <utility>

#include "superscar/diffraction.hpp"
#include "superscar/numerics.hpp"

namespace superscar {

namespace {

// Channel energies are quadratic in the longitudinal index for every pencil
// class and named orbit: E(m) = a_coeff * m^2 + e_t on the admissible lattice
// {m_min, m_min + step, ...}. Probing two admissible indices keeps this layer
// independent of the per-class width and length conventions.
struct ChannelQuadratic {
    double a_coeff = 0.0;
    double e_t = 0.0;
    long long m_min = 1;
    long long step = 1;

    double energy_at(long long m) const { return a_coeff * double(m) * double(m) + e_t; }
};

ChannelQuadratic pencil_quadratic(const PeriodicOrbitPencil& pencil, int n,
                                  const BilliardSpec& spec) {
    const long long m0 = pencil.parity_rule == ParityRule::m_even ? 2 : 1;
    const long long step = 2;
    const auto w0 = make_pencil_wave(pencil, static_cast<int>(m0), n, spec);
    const auto w1 = make_pencil_wave(pencil, static_cast<int>(m0 + step), n, spec);
    const double a = (w1.energy - w0.energy) /
                     double((m0 + step) * (m0 + step) - m0 * m0);
    return {a, w0.energy - a * double(m0 * m0), m0, step};
}

ChannelQuadratic named_quadratic(NamedOrbit orbit, int n, const BilliardSpec& spec) {
    const auto w0 = make_named_wave(orbit, 1, n, spec);
    const auto w1 = make_named_wave(orbit, 2, n, spec);
    const double a = (w1.energy - w0.energy) / 3.0;
    return {a, w0.energy - a, 1, 1};
}

// Energy-nearest admissible index; the candidates bracket the continuous
// solution, and an exact tie keeps the smaller index.
long long nearest_index(const ChannelQuadratic& ch, double energy) {
    if (!(energy > ch.e_t))
        throw std::invalid_argument("transverse channel closed at this energy");
    const double t = std::sqrt((energy - ch.e_t) / ch.a_coeff);
    const long long j =
        std::max(0LL, static_cast<long long>(std::floor((t - double(ch.m_min)) / double(ch.step))));
    const long long lo = ch.m_min + ch.step * j;
    const long long hi = lo + ch.step;
    const double d_lo = std::abs(energy - ch.energy_at(lo));
    const double d_hi = std::abs(energy - ch.energy_at(hi));
    return d_hi < d_lo ? hi : lo;
}

struct SeriesScratch {
    std::vector<const EigenState*> selected;
    std::vector<long long> index;
};

SeriesScratch select_states(const SpectralWindow& window, std::span<const EigenState> states,
                            const ChannelQuadratic& ch) {
    if (!(window.e_hi > window.e_lo))
        throw std::invalid_argument("window must have positive extent");
    if (ch.e_t >= window.e_lo)
        throw std::invalid_argument("transverse channel closed inside the window");
    SeriesScratch scratch;
    for (const auto& state : states) {
        if (state.energy < window.e_lo || state.energy > window.e_hi) continue;
        scratch.selected.push_back(&state);
        scratch.index.push_back(nearest_index(ch, state.energy));
    }
    return scratch;
}

using SeriesKey = std::tuple<long long, int, int>;  // (m, q_max, k_max)

OverlapSeries assemble_series(int n, const SpectralWindow& window, const SeriesScratch& scratch,
                              const ChannelQuadratic& ch,
                              const std::map<SeriesKey, Eigen::MatrixXcd>& mats, int threads) {
    OverlapSeries series;
    series.n = n;
    series.window = window;
    series.entries.resize(scratch.selected.size());
    parallel_for(scratch.selected.size(), threads, [&](std::size_t i) {
        const EigenState& state = *scratch.selected[i];
        const long long m = scratch.index[i];
        const SeriesKey key{m, state.basis.q_max, state.basis.k_max};
        series.entries[i] = {state.energy, m, ch.energy_at(m), overlap(state, mats.at(key))};
    });
    return series;
}

double mode_energy(const ExpansionBasis& basis, int q, int k) {
    const double qa = basis.kind == SeriesKind::half_integer_cos ? q - 0.5 : double(q);
    return kPi * kPi * (qa * qa / (basis.a * basis.a) + double(k) * k / (basis.b * basis.b));
}

void append_row(std::string& out, const char* fmt, double a, double b) {
    char buf[96];
    std::snprintf(buf, sizeof buf, fmt, a, b);
    out += buf;
}

}  // namespace

long long nearest_longitudinal_index(const PeriodicOrbitPencil& pencil, int n, double energy,
                                     const BilliardSpec& spec) {
    if (n < 1) throw std::invalid_argument("transverse index must be positive");
    return nearest_index(pencil_quadratic(pencil, n, spec), energy);
}

long long nearest_longitudinal_index(NamedOrbit orbit, int n, double energy,
                                     const BilliardSpec& spec) {
    if (n < 1) throw std::invalid_argument("transverse index must be positive");
    return nearest_index(named_quadratic(orbit, n, spec), energy);
}

double overlap(const EigenState& state, const Eigen::MatrixXcd& series) {
    const int rows = std::min<int>(state.coeffs.rows(), series.rows());
    const int cols = std::min<int>(state.coeffs.cols(), series.cols());
    if (rows == 0 || cols == 0) throw std::invalid_argument("empty coefficient block");
    const std::complex<double> inner =
        (series.topLeftCorner(rows, cols).conjugate().array() *
         state.coeffs.topLeftCorner(rows, cols).array())
            .sum();
    return std::norm(inner);
}

double overlap(const EigenState& state, const FoldedWave& fold) {
    if (state.basis.kind != SeriesKind::half_integer_cos)
        throw std::invalid_argument("folded-wave overlap needs the half-interval cosine layout");
    return overlap(state, folded_even_series(fold, state.basis.q_max, state.basis.k_max));
}

OverlapSeries overlap_series(const PeriodicOrbitPencil& pencil, int n,
                             const SpectralWindow& window, std::span<const EigenState> states,
                             const BilliardSpec& spec, int threads) {
    if (n < 1) throw std::invalid_argument("transverse index must be positive");
    const ChannelQuadratic ch = pencil_quadratic(pencil, n, spec);
    const SeriesScratch scratch = select_states(window, states, ch);

    std::map<long long, FoldedWave> folds;
    std::map<SeriesKey, Eigen::MatrixXcd> mats;
    for (std::size_t i = 0; i < scratch.selected.size(); ++i) {
        const long long m = scratch.index[i];
        const EigenState& state = *scratch.selected[i];
        const SeriesKey key{m, state.basis.q_max, state.basis.k_max};
        if (mats.count(key)) continue;
        auto it = folds.find(m);
        if (it == folds.end()) {
            const auto wave = make_pencil_wave(pencil, static_cast<int>(m), n, spec);
            it = folds.emplace(m, fold_barrier(wave, fold_basis(wave))).first;
        }
        mats.emplace(key, folded_even_series(it->second, state.basis.q_max, state.basis.k_max));
    }
    return assemble_series(n, window, scratch, ch, mats, threads);
}

OverlapSeries overlap_series(NamedOrbit orbit, int n, const SpectralWindow& window,
                             std::span<const EigenState> states, const BilliardSpec& spec,
                             int threads) {
    if (n < 1) throw std::invalid_argument("transverse index must be positive");
    const ChannelQuadratic ch = named_quadratic(orbit, n, spec);
    const SeriesScratch scratch = select_states(window, states, ch);

    std::map<SeriesKey, Eigen::MatrixXcd> mats;
    for (std::size_t i = 0; i < scratch.selected.size(); ++i) {
        const EigenState& state = *scratch.selected[i];
        const SeriesKey key{scratch.index[i], state.basis.q_max, state.basis.k_max};
        if (mats.count(key)) continue;
        const auto wave = make_named_wave(orbit, static_cast<int>(scratch.index[i]), n, spec);
        mats.emplace(key, named_even_series(wave, state.basis.q_max, state.basis.k_max));
    }
    return assemble_series(n, window, scratch, ch, mats, threads);
}

DensityHistogram local_density(const OverlapSeries& series, int bins, double half_range) {
    if (series.entries.empty()) throw std::invalid_argument("empty overlap series");
    if (bins < 1 || !(half_range > 0.0))
        throw std::invalid_argument("histogram needs a positive bin count and range");

    DensityHistogram hist;
    hist.bin_width = 2.0 * half_range / bins;
    hist.centers.resize(bins);
    hist.density.assign(bins, 0.0);
    for (int i = 0; i < bins; ++i) hist.centers[i] = -half_range + (i + 0.5) * hist.bin_width;

    std::set<long long> peaks;
    for (const auto& entry : series.entries) {
        peaks.insert(entry.m);
        const double delta = entry.energy - entry.channel_energy;
        if (delta < -half_range || delta > half_range) continue;
        int bin = static_cast<int>((delta + half_range) / hist.bin_width);
        bin = std::clamp(bin, 0, bins - 1);
        hist.density[bin] += entry.weight;
    }
    hist.peak_count = static_cast<int>(peaks.size());
    const double norm = hist.bin_width * hist.peak_count;
    for (double& d : hist.density) d /= norm;
    return hist;
}

BreitWignerFit bw_fit(const DensityHistogram& hist) {
    if (hist.centers.size() < 4) throw std::invalid_argument("histogram too small to fit");
    double total = 0.0, peak = 0.0;
    std::size_t peak_at = 0;
    for (std::size_t i = 0; i < hist.density.size(); ++i) {
        total += hist.density[i] * hist.bin_width;
        if (hist.density[i] > peak) {
            peak = hist.density[i];
            peak_at = i;
        }
    }
    if (!(peak > 0.0)) throw std::invalid_argument("histogram carries no weight");

    // moment-based starting point; the width from the normalized peak height
    const double gamma0 = std::max(2.0 * total / (kPi * peak), hist.bin_width);
    std::vector<double> initial{hist.centers[peak_at], gamma0, total};

    const auto model = [](std::span<const double> p, double x) {
        const double g = std::abs(p[1]);
        const double d = x - p[0];
        return p[2] * g / (2.0 * kPi * (d * d + 0.25 * g * g));
    };
    const auto fitted = fit_curve(model, hist.centers, hist.density, {}, initial);

    BreitWignerFit fit;
    fit.epsilon_n = fitted[0];
    fit.gamma_n = std::abs(fitted[1]);
    fit.amplitude = fitted[2];
    for (std::size_t i = 0; i < hist.centers.size(); ++i) {
        const double r = model(fitted, hist.centers[i]) - hist.density[i];
        fit.chi2 += r * r;
    }
    fit.degenerate = fit.gamma_n < hist.bin_width;
    return fit;
}

double gamma_prediction(const PeriodicOrbitPencil& pencil, int n, double k) {
    if (n < 1) throw std::invalid_argument("transverse index must be positive");
    if (!(k > 0.0)) throw std::invalid_argument("momentum must be positive");
    const double w = pencil.effective_width();
    const double d = singular_vertex_spacing(pencil);
    return leakage_constant() * kPi * double(n) * n / (w * w) * std::sqrt(d / (k * w * w));
}

MomentSample moments(std::span<const double> amplitudes, double energy,
                     std::span<const double> q_list) {
    if (amplitudes.empty()) throw std::invalid_argument("empty amplitude set");
    double norm2 = 0.0;
    for (double a : amplitudes) norm2 += a * a;
    if (!(norm2 > 0.0)) throw std::invalid_argument("zero amplitude set");

    MomentSample sample;
    sample.energy = energy;
    sample.k = std::sqrt(energy);
    sample.support = amplitudes.size();
    sample.m_q.reserve(q_list.size());
    for (double q : q_list) {
        double m = 0.0;
        for (double a : amplitudes) {
            const double p = a * a / norm2;
            if (p > 0.0) m += std::pow(p, q);
        }
        sample.m_q.push_back(m);
    }
    return sample;
}

MomentSample moments(const EigenState& state, std::span<const double> q_list,
                     double energy_margin) {
    const double cutoff = energy_margin * state.energy;
    std::vector<double> amplitudes;
    amplitudes.reserve(static_cast<std::size_t>(state.coeffs.size()));
    for (int q = 1; q <= state.coeffs.rows(); ++q)
        for (int k = 1; k <= state.coeffs.cols(); ++k)
            if (mode_energy(state.basis, q, k) <= cutoff)
                amplitudes.push_back(state.coeffs(q - 1, k - 1));
    return moments(amplitudes, state.energy, q_list);
}

MultifractalAnalysis fractal_fit(std::vector<MomentSample> samples, std::vector<double> q_list) {
    if (samples.size() < 8) throw std::invalid_argument("too few moment samples");
    double k_min = samples.front().k, k_max = samples.front().k;
    for (const auto& s : samples) {
        if (s.m_q.size() != q_list.size())
            throw std::invalid_argument("sample moment count does not match the q list");
        k_min = std::min(k_min, s.k);
        k_max = std::max(k_max, s.k);
    }
    if (!(k_min > 0.0) || k_max / k_min < 9.999)
        throw std::invalid_argument("insufficient k range: need a decade");

    MultifractalAnalysis analysis;
    analysis.q_list = std::move(q_list);
    analysis.samples = std::move(samples);
    std::vector<double> log_k(analysis.samples.size());
    for (std::size_t i = 0; i < analysis.samples.size(); ++i)
        log_k[i] = std::log(analysis.samples[i].k);

    std::vector<double> log_r(analysis.samples.size());
    for (std::size_t qi = 0; qi < analysis.q_list.size(); ++qi) {
        for (std::size_t i = 0; i < analysis.samples.size(); ++i) {
            const double m = analysis.samples[i].m_q[qi];
            if (!(m > 0.0)) throw std::invalid_argument("non-positive moment in samples");
            log_r[i] = -std::log(m);
        }
        const LineFit fit = fit_line(log_k, log_r);
        const double dq = analysis.q_list[qi] - 1.0;
        analysis.tau.push_back(fit.slope);
        analysis.d_q.push_back(std::abs(dq) > 1e-12
                                   ? fit.slope / dq
                                   : std::numeric_limits<double>::quiet_NaN());
        analysis.d_q_err.push_back(std::abs(dq) > 1e-12
                                       ? fit.slope_stderr / std::abs(dq)
                                       : std::numeric_limits<double>::quiet_NaN());
        analysis.amplitude.push_back(std::exp(fit.intercept));
    }
    return analysis;
}

std::vector<double> unfold_levels(std::span<const double> energies, const BilliardSpec& spec,
                                  double barrier_fraction) {
    if (energies.empty()) throw std::invalid_argument("empty level list");
    std::vector<double> unfolded;
    unfolded.reserve(energies.size());
    for (std::size_t i = 0; i < energies.size(); ++i) {
        if (i > 0 && energies[i] < energies[i - 1])
            throw std::invalid_argument("levels must be ascending");
        unfolded.push_back(
            weyl_increment(spec, energies.front(), energies[i], barrier_fraction));
    }
    return unfolded;
}

SpectralStatistics spacing_stats(std::span<const double> unfolded) {
    if (unfolded.size() < 500) throw std::invalid_argument("too few levels: need at least 500");
    const std::size_t count = unfolded.size();
    for (std::size_t i = 1; i < count; ++i)
        if (unfolded[i] < unfolded[i - 1])
            throw std::invalid_argument("unfolded levels must be ascending");

    const double span = unfolded.back() - unfolded.front();
    if (!(span > 0.0)) throw std::invalid_argument("degenerate level list");
    const double mean = span / double(count - 1);

    SpectralStatistics stats;

    // nearest-neighbour density at unit mean spacing; the range covers every
    // spacing so the density integrates to one
    const double s_bin = 0.1;
    double s_max = 0.0;
    std::vector<double> spacings(count - 1);
    for (std::size_t i = 0; i + 1 < count; ++i) {
        spacings[i] = (unfolded[i + 1] - unfolded[i]) / mean;
        s_max = std::max(s_max, spacings[i]);
    }
    const int s_bins = std::max(50, static_cast<int>(std::ceil(s_max / s_bin + 1e-9)));
    stats.s_centers.resize(s_bins);
    stats.spacing_density.assign(s_bins, 0.0);
    for (int i = 0; i < s_bins; ++i) stats.s_centers[i] = (i + 0.5) * s_bin;
    for (double s : spacings) {
        const int bin = std::min(s_bins - 1, static_cast<int>(s / s_bin));
        stats.spacing_density[bin] += 1.0;
    }
    for (double& d : stats.spacing_density) d /= double(spacings.size()) * s_bin;

    // number variance from overlapping windows on the rescaled sequence
    std::vector<double> y(count);
    for (std::size_t i = 0; i < count; ++i) y[i] = (unfolded[i] - unfolded.front()) / mean;
    const double y_span = y.back();
    for (int l = 1; l <= 20; ++l) {
        const double window = l;
        double sum = 0.0;
        std::size_t windows = 0;
        for (double start = 0.0; start + window <= y_span; start += 0.5) {
            const auto lo = std::lower_bound(y.begin(), y.end(), start);
            const auto hi = std::lower_bound(y.begin(), y.end(), start + window);
            const double excess = double(hi - lo) - window;
            sum += excess * excess;
            ++windows;
        }
        stats.l_values.push_back(window);
        stats.number_variance.push_back(windows ? sum / double(windows) : 0.0);
    }

    std::vector<double> fit_l, fit_v;
    for (std::size_t i = 0; i < stats.l_values.size(); ++i) {
        if (stats.l_values[i] < 5.0 || stats.l_values[i] > 15.0) continue;
        fit_l.push_back(stats.l_values[i]);
        fit_v.push_back(stats.number_variance[i]);
    }
    const LineFit fit = fit_line(fit_l, fit_v);
    stats.chi = fit.slope;
    stats.chi_stderr = fit.slope_stderr;
    return stats;
}

std::string to_csv(const OverlapSeries& series) {
    std::string out = "energy,m,channel_energy,weight\n";
    char buf[128];
    for (const auto& e : series.entries) {
        std::snprintf(buf, sizeof buf, "%.12g,%lld,%.12g,%.12g\n", e.energy, e.m,
                      e.channel_energy, e.weight);
        out += buf;
    }
    return out;
}

std::string to_csv(const DensityHistogram& hist) {
    std::string out = "delta_e,density\n";
    for (std::size_t i = 0; i < hist.centers.size(); ++i)
        append_row(out, "%.12g,%.12g\n", hist.centers[i], hist.density[i]);
    return out;
}

std::string to_csv(const MultifractalAnalysis& analysis) {
    std::string out = "kind,x";
    for (double q : analysis.q_list) {
        char buf[48];
        std::snprintf(buf, sizeof buf, ",m_q%g,r_q%g", q, q);
        out += buf;
    }
    out += "\n";
    char buf[256];
    for (const auto& s : analysis.samples) {
        std::snprintf(buf, sizeof buf, "sample,%.12g", s.k);
        out += buf;
        for (double m : s.m_q) {
            std::snprintf(buf, sizeof buf, ",%.12g,%.12g", m, 1.0 / m);
            out += buf;
        }
        out += "\n";
    }
    for (std::size_t qi = 0; qi < analysis.q_list.size(); ++qi) {
        std::snprintf(buf, sizeof buf, "fit,%g,tau=%.12g,d=%.12g,err=%.12g,amp=%.12g\n",
                      analysis.q_list[qi], analysis.tau[qi], analysis.d_q[qi],
                      analysis.d_q_err[qi], analysis.amplitude[qi]);
        out += buf;
    }
    return out;
}

std::string to_csv(const SpectralStatistics& stats) {
    std::string out = "kind,x,y\n";
    for (std::size_t i = 0; i < stats.s_centers.size(); ++i)
        append_row(out, "spacing,%.12g,%.12g\n", stats.s_centers[i], stats.spacing_density[i]);
    for (std::size_t i = 0; i < stats.l_values.size(); ++i)
        append_row(out, "variance,%.12g,%.12g\n", stats.l_values[i], stats.number_variance[i]);
    append_row(out, "chi,%.12g,%.12g\n", stats.chi, stats.chi_stderr);
    return out;
}

}  // namespace superscar

#include "superscar/quasimode.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "superscar/numerics.hpp"

namespace superscar {

namespace {

constexpr std::complex<double> kI{0.0, 1.0};

int resolved_threads(int threads) {
    if (threads > 0) return threads;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

long long checked_gcd(long long a, long long b) {
    while (b != 0) {
        long long t = a % b;
        a = b;
        b = t;
    }
    return a < 0 ? -a : a;
}

// Transverse profile data: phi(eta) = sin(nu * (eta - lo)) on (lo, hi).
struct ProfileShape {
    double lo = 0.0;
    double hi = 0.0;
    double nu = 0.0;
};

ProfileShape profile_shape(const SuperscarWave& wave) {
    const double w = wave.pencil.w;
    const double a = wave.a;
    const double b = wave.b;
    switch (wave.profile_case) {
        case TransverseCase::inner_half:
            return {-w / 2.0, w / 2.0, kPi * wave.n / w};
        case TransverseCase::outer_half:
            return {w / 2.0, 3.0 * w / 2.0, kPi * wave.n / w};
        case TransverseCase::full_centered:
            return {-w, w, kPi * wave.n / (2.0 * w)};
        case TransverseCase::full_offset:
            return {0.0, 2.0 * w, kPi * wave.n / (2.0 * w)};
        case TransverseCase::horizontal_ball:
            return {0.0, a, kPi * wave.n / a};
        case TransverseCase::vertical_dd_ball:
            return {0.0, b / 2.0, 2.0 * kPi * wave.n / b};
        case TransverseCase::vertical_dn_ball:
            return {b / 2.0, b, 2.0 * kPi * wave.n / b};
    }
    throw std::logic_error("unhandled transverse case");
}

// int_lo^hi sin(nu (eta - lo)) exp(i c eta) deta in closed form. The two
// exponential halves use the midpoint-sinc identity, stable through the
// resonances c = +-nu.
std::complex<double> seg_int(double c, double nu, double lo, double hi) {
    const double d = hi - lo;
    std::complex<double> out{0.0, 0.0};
    for (int s = -1; s <= 1; s += 2) {
        const double alpha = c + s * nu;
        const std::complex<double> pref =
            (s / 2.0) * std::exp(-kI * (s * nu * lo)) / kI;
        const double t = alpha * d / 2.0;
        const double sinc = std::abs(t) < 1e-8 ? 1.0 - t * t / 6.0 : std::sin(t) / t;
        out += pref * std::exp(kI * (alpha * (lo + hi) / 2.0)) * d * sinc;
    }
    return out;
}

std::complex<double> quarter_phase(long long p) {
    switch (((p % 4) + 4) % 4) {
        case 0: return {1.0, 0.0};
        case 1: return {0.0, 1.0};
        case 2: return {-1.0, 0.0};
        default: return {0.0, -1.0};
    }
}

struct PencilFold {
    int M = 0;
    int N = 0;
    int m = 0;
    double a = 0.0;
    double b = 0.0;
    double L_p = 0.0;
    ProfileShape prof;
};

PencilFold pencil_fold_geom(const SuperscarWave& wave) {
    if (wave.named.has_value())
        throw std::invalid_argument("named bouncing-ball waves fold by closed form, not the pencil machinery");
    PencilFold g;
    g.M = wave.pencil.M;
    g.N = wave.pencil.N;
    g.m = wave.m;
    g.a = wave.a;
    g.b = wave.b;
    g.L_p = wave.pencil.L_p;
    g.prof = profile_shape(wave);
    return g;
}

struct UnfoldTerm {
    std::complex<double> value{0.0, 0.0};
    long long m_long = 0;  // signed longitudinal label (half index for even M)
};

// The four sign combinations of the doubled-box product mode at bin (P, K).
// Whole-parity xi-integrals survive only on the index line (tot = 0); the
// cross-parity tail is kept when include_tails is set (always for even M,
// where tot is always odd).
std::array<UnfoldTerm, 4> unfold_terms(const PencilFold& g, long long P, long long K,
                                       bool include_tails) {
    std::array<UnfoldTerm, 4> out;
    int slot = 0;
    for (int sp = -1; sp <= 1; sp += 2) {
        for (int sk = -1; sk <= 1; sk += 2) {
            const long long pp = sp * P;
            const long long kk = sk * K;
            UnfoldTerm term;
            const long long m1 = pp * g.M + 2 * kk * g.N;
            term.m_long = g.M % 2 == 0 ? pp * (g.M / 2) + kk * g.N : m1;
            const long long tot = g.m + m1;
            std::complex<double> jxi{0.0, 0.0};
            if (tot == 0) {
                jxi = g.L_p;
            } else if (tot % 2 != 0 && include_tails) {
                jxi = 2.0 * kI * g.L_p / (kPi * static_cast<double>(tot));
            }
            if (jxi != 0.0) {
                const std::complex<double> eps =
                    static_cast<double>(sp * sk) * quarter_phase(pp);
                const double c_eta =
                    kPi * (-static_cast<double>(pp) * g.N * g.b * g.b +
                           2.0 * static_cast<double>(kk) * g.M * g.a * g.a) /
                    (g.a * g.b * g.L_p);
                term.value = eps * jxi * seg_int(c_eta, g.prof.nu, g.prof.lo, g.prof.hi);
            }
            out[slot++] = term;
        }
    }
    return out;
}

std::complex<double> bin_value(const PencilFold& g, long long P, long long K,
                               bool include_tails) {
    std::complex<double> sum{0.0, 0.0};
    for (const UnfoldTerm& t : unfold_terms(g, P, K, include_tails)) sum += t.value;
    return 2.0 / (g.a * g.b) * (-0.25) * sum;
}

PencilIndexMap make_index_map(const PeriodicOrbitPencil& pencil, double a, double b) {
    if (pencil.M < 1 || pencil.N < 1)
        throw std::invalid_argument("index map needs a genuine (M,N) pencil");
    PencilIndexMap map;
    map.M = pencil.M;
    map.N = pencil.N;
    map.two_a = 2.0 * a;
    map.b = b;
    const double lp2 = pencil.L_p * pencil.L_p;
    if (pencil.M % 2 == 1) {
        const BezoutPair bz = bezout_pair(pencil.M, 2LL * pencil.N);
        map.nu = bz.nu;
        map.mu = bz.mu;
        map.half_index = false;
        map.length_eff = pencil.L_p;
        map.width_eff = pencil.w;
        map.shift = 2.0 * (bz.nu * b * b * pencil.N + 2.0 * bz.mu * pencil.M * a * a) / lp2;
    } else {
        const BezoutPair bz = bezout_pair(pencil.M / 2, pencil.N);
        map.nu = bz.nu;
        map.mu = bz.mu;
        map.half_index = true;
        map.length_eff = pencil.L_p / 2.0;
        map.width_eff = 2.0 * pencil.w;
        map.shift = 4.0 * (2.0 * pencil.M * a * a * bz.mu + pencil.N * b * b * bz.nu) / lp2;
    }
    return map;
}

double sin_half_pi(long long j) {
    // sin(j pi / 2) for integer j
    switch (((j % 4) + 4) % 4) {
        case 1: return 1.0;
        case 3: return -1.0;
        default: return 0.0;
    }
}

// (2/b) int over the dd (lower) window of sin(2 pi n y / b) sin(pi k y / b).
double vertical_mix(int n, int k) {
    if (k == 2 * n) return 0.5;
    if (k % 2 == 0) return 0.0;
    const double s1 = sin_half_pi(2LL * n - k);
    const double s2 = sin_half_pi(2LL * n + k);
    return (s1 / (2.0 * n - k) - s2 / (2.0 * n + k)) / kPi;
}

void fill_sines(Eigen::VectorXd& out, double theta) {
    // out[j-1] = sin(j theta) by Chebyshev recurrence
    const int n = static_cast<int>(out.size());
    if (n == 0) return;
    const double c2 = 2.0 * std::cos(theta);
    double s_prev = 0.0;
    double s = std::sin(theta);
    for (int j = 0; j < n; ++j) {
        out[j] = s;
        const double nxt = c2 * s - s_prev;
        s_prev = s;
        s = nxt;
    }
}

}  // namespace

const char* to_string(NamedOrbit orbit) {
    switch (orbit) {
        case NamedOrbit::horizontal: return "horizontal";
        case NamedOrbit::vertical_dd: return "vertical_dd";
        case NamedOrbit::vertical_dn: return "vertical_dn";
    }
    return "?";
}

const char* to_string(TransverseCase c) {
    switch (c) {
        case TransverseCase::inner_half: return "inner_half";
        case TransverseCase::outer_half: return "outer_half";
        case TransverseCase::full_centered: return "full_centered";
        case TransverseCase::full_offset: return "full_offset";
        case TransverseCase::horizontal_ball: return "horizontal_ball";
        case TransverseCase::vertical_dd_ball: return "vertical_dd_ball";
        case TransverseCase::vertical_dn_ball: return "vertical_dn_ball";
    }
    return "?";
}

SuperscarWave make_pencil_wave(const PeriodicOrbitPencil& pencil, int m, int n,
                               const BilliardSpec& spec) {
    if (m < 1 || n < 1) throw std::invalid_argument("wave indices must be >= 1");
    if (pencil.M < 1 || pencil.N < 1)
        throw std::invalid_argument("degenerate bouncing-ball pencil; use make_named_wave");
    switch (pencil.parity_rule) {
        case ParityRule::m_even:
            if (m % 2 != 0)
                throw std::invalid_argument("pencil carries even longitudinal indices, got odd m");
            break;
        case ParityRule::m_odd:
        case ParityRule::m_odd_only:
            if (m % 2 == 0)
                throw std::invalid_argument("pencil carries odd longitudinal indices, got even m");
            break;
    }
    SuperscarWave wave;
    wave.pencil = pencil;
    wave.m = m;
    wave.n = n;
    wave.a = spec.a();
    wave.b = spec.b();
    if (pencil.M % 2 == 1) {
        wave.profile_case = m % 2 == 0 ? TransverseCase::inner_half : TransverseCase::outer_half;
    } else {
        wave.profile_case = pencil.M % 4 == 2 ? TransverseCase::full_centered
                                              : TransverseCase::full_offset;
    }
    wave.energy = superscar_energy(wave);
    wave.validity = validity_parameter(wave);
    return wave;
}

SuperscarWave make_pencil_wave(int M, int N, int m, int n, const BilliardSpec& spec) {
    if (M < 1 || N < 1) throw std::invalid_argument("pencil labels must be >= 1");
    if (checked_gcd(M, N) != 1) throw std::invalid_argument("pencil labels must be coprime");
    PeriodicOrbitPencil pencil;
    pencil.M = M;
    pencil.N = N;
    pencil.L_p = 2.0 * std::hypot(M * spec.a(), N * spec.b());
    pencil.w = 2.0 * spec.a() * spec.b() / pencil.L_p;
    pencil.width_class = M % 2 == 1 ? WidthClass::single_w : WidthClass::double_w;
    if (M % 2 == 1) {
        pencil.parity_rule = m % 2 == 0 ? ParityRule::m_even : ParityRule::m_odd;
        pencil.pencil_offset =
            m % 2 == 0 ? PencilOffset::centered : PencilOffset::shifted;
    } else {
        pencil.parity_rule = ParityRule::m_odd_only;
        pencil.pencil_offset =
            M % 4 == 2 ? PencilOffset::centered : PencilOffset::shifted;
    }
    pencil.theta = std::atan2(2.0 * N * spec.b(), 2.0 * M * spec.a());
    pencil.crossing_count = crossing_count(M, N);
    return make_pencil_wave(pencil, m, n, spec);
}

SuperscarWave make_named_wave(NamedOrbit orbit, int m, int n, const BilliardSpec& spec) {
    if (m < 1 || n < 1) throw std::invalid_argument("wave indices must be >= 1");
    SuperscarWave wave;
    wave.named = orbit;
    wave.m = m;
    wave.n = n;
    wave.a = spec.a();
    wave.b = spec.b();
    switch (orbit) {
        case NamedOrbit::horizontal:
            wave.profile_case = TransverseCase::horizontal_ball;
            break;
        case NamedOrbit::vertical_dd:
            wave.profile_case = TransverseCase::vertical_dd_ball;
            break;
        case NamedOrbit::vertical_dn:
            wave.profile_case = TransverseCase::vertical_dn_ball;
            break;
    }
    wave.energy = superscar_energy(wave);
    wave.validity = validity_parameter(wave);
    return wave;
}

double superscar_energy(const SuperscarWave& wave) {
    const double m = wave.m;
    const double n = wave.n;
    const double pi2 = kPi * kPi;
    switch (wave.profile_case) {
        case TransverseCase::inner_half:
        case TransverseCase::outer_half: {
            const double lp = wave.pencil.L_p;
            const double w = wave.pencil.w;
            return pi2 * (m * m / (lp * lp) + n * n / (w * w));
        }
        case TransverseCase::full_centered:
        case TransverseCase::full_offset: {
            const double lp = wave.pencil.L_p;
            const double w2 = 2.0 * wave.pencil.w;
            return pi2 * (m * m / (lp * lp) + n * n / (w2 * w2));
        }
        case TransverseCase::horizontal_ball:
            return pi2 * (m * m / (wave.b * wave.b) + n * n / (wave.a * wave.a));
        case TransverseCase::vertical_dd_ball:
            return pi2 * (m * m / (wave.a * wave.a) + 4.0 * n * n / (wave.b * wave.b));
        case TransverseCase::vertical_dn_ball: {
            const double mh = m - 0.5;
            return pi2 * (mh * mh / (wave.a * wave.a) + 4.0 * n * n / (wave.b * wave.b));
        }
    }
    throw std::logic_error("unhandled transverse case");
}

double transverse_profile(const SuperscarWave& wave, double eta) {
    const ProfileShape prof = profile_shape(wave);
    if (eta <= prof.lo || eta >= prof.hi) return 0.0;
    return std::sin(prof.nu * (eta - prof.lo));
}

std::pair<double, double> transverse_support(const SuperscarWave& wave) {
    const ProfileShape prof = profile_shape(wave);
    return {prof.lo, prof.hi};
}

double validity_parameter(const SuperscarWave& wave) {
    const double k = std::sqrt(wave.energy);
    double p_t = 0.0;
    double length = 0.0;
    switch (wave.profile_case) {
        case TransverseCase::inner_half:
        case TransverseCase::outer_half:
            p_t = kPi * wave.n / wave.pencil.w;
            length = wave.pencil.L_p;
            break;
        case TransverseCase::full_centered:
        case TransverseCase::full_offset:
            p_t = kPi * wave.n / (2.0 * wave.pencil.w);
            length = wave.pencil.L_p;
            break;
        case TransverseCase::horizontal_ball:
            p_t = kPi * wave.n / wave.a;
            length = 2.0 * wave.b;
            break;
        case TransverseCase::vertical_dd_ball:
        case TransverseCase::vertical_dn_ball:
            p_t = 2.0 * kPi * wave.n / wave.b;
            length = 2.0 * wave.a;
            break;
    }
    return p_t * std::sqrt(length / (k * kPi));
}

int admissible_transverse_count(const PeriodicOrbitPencil& pencil, double k,
                                double lambda0) {
    if (k <= 0.0) return 0;
    const double n_max =
        lambda0 * pencil.effective_width() * std::sqrt(k / (kPi * pencil.L_p));
    return n_max < 1.0 ? 0 : static_cast<int>(std::floor(n_max));
}

BezoutPair bezout_pair(long long lhs, long long rhs) {
    if (lhs < 1 || rhs < 1) throw std::invalid_argument("bezout_pair needs positive inputs");
    long long r0 = lhs, r1 = rhs;
    long long x0 = 1, x1 = 0;  // coefficients of lhs
    long long y0 = 0, y1 = 1;  // coefficients of rhs
    while (r1 != 0) {
        const long long q = r0 / r1;
        std::tie(r0, r1) = std::pair<long long, long long>{r1, r0 - q * r1};
        std::tie(x0, x1) = std::pair<long long, long long>{x1, x0 - q * x1};
        std::tie(y0, y1) = std::pair<long long, long long>{y1, y0 - q * y1};
    }
    if (r0 != 1) throw std::invalid_argument("bezout_pair needs coprime inputs");
    // r0 = x0*lhs + y0*rhs = 1  ->  nu = x0, mu = -y0
    long long nu = x0;
    long long mu = -y0;
    const long long t = mu >= 0 ? mu / lhs : -((-mu + lhs - 1) / lhs);
    mu -= t * lhs;
    nu -= t * rhs;
    return {nu, mu};
}

std::pair<long long, long long> PencilIndexMap::to_mode(long long m_long, long long q) const {
    if (half_index) return {-q * N + m_long * nu, q * (M / 2) - m_long * mu};
    return {-2 * q * N + m_long * nu, q * M - m_long * mu};
}

std::pair<long long, long long> PencilIndexMap::to_pencil(long long p, long long k) const {
    if (half_index) return {k * N + p * (M / 2), k * nu + p * mu};
    return {2 * k * N + p * M, k * nu + p * mu};
}

double PencilIndexMap::pencil_energy(long long m_long, long long q) const {
    const double lon = m_long / length_eff;
    const double tr = (q - shift * m_long) / width_eff;
    return kPi * kPi * (lon * lon + tr * tr);
}

double PencilIndexMap::mode_energy(long long p, long long k) const {
    const double px = p / two_a;
    const double ky = k / b;
    return kPi * kPi * (px * px + ky * ky);
}

PencilIndexMap pencil_index_map(const PeriodicOrbitPencil& pencil, const BilliardSpec& spec) {
    return make_index_map(pencil, spec.a(), spec.b());
}

ExpansionBasis fold_basis(const SuperscarWave& wave, double energy_margin, int pad) {
    const double k_top = std::sqrt(std::max(0.0, energy_margin * wave.energy));
    ExpansionBasis basis;
    basis.kind = SeriesKind::full_rectangle;
    basis.a = 2.0 * wave.a;
    basis.b = wave.b;
    basis.q_max = static_cast<int>(std::ceil(2.0 * wave.a * k_top / kPi)) + pad;
    basis.k_max = static_cast<int>(std::ceil(wave.b * k_top / kPi)) + pad;
    return basis;
}

FoldedWave fold_barrier(const SuperscarWave& wave, const ExpansionBasis& basis) {
    const PencilFold g = pencil_fold_geom(wave);
    if (basis.kind != SeriesKind::full_rectangle)
        throw std::invalid_argument("fold_barrier needs a full_rectangle basis");
    if (std::abs(basis.a - 2.0 * wave.a) > 1e-9 * wave.a ||
        std::abs(basis.b - wave.b) > 1e-9 * wave.b)
        throw std::invalid_argument("fold basis must cover the doubled box (2a) x b");

    FoldedWave fold;
    fold.source = wave;
    fold.map = make_index_map(wave.pencil, wave.a, wave.b);
    fold.norm_limit = g.M % 2 == 1 ? 1.0 : 4.0;

    const int p_max = basis.q_max;
    const int k_max = basis.k_max;
    double sum2 = 0.0;
    if (g.M % 2 == 1) {
        // index line k = qM - m mu, p = -2qN + m nu over both signs of k
        const long long mu = fold.map.mu;
        const long long nuz = fold.map.nu;
        const long long m = g.m;
        const long long q_lo = static_cast<long long>(
            std::floor((-static_cast<double>(k_max) + static_cast<double>(m) * mu) / g.M));
        const long long q_hi = static_cast<long long>(
            std::ceil((static_cast<double>(k_max) + static_cast<double>(m) * mu) / g.M));
        for (long long q = q_lo; q <= q_hi; ++q) {
            const long long k = q * g.M - m * mu;
            const long long p = -2 * q * g.N + m * nuz;
            if (k == 0 || p == 0) continue;
            if (std::llabs(k) > k_max || std::llabs(p) > p_max) continue;
            const std::complex<double> v =
                bin_value(g, std::llabs(p), std::llabs(k), false);
            sum2 += std::norm(v);
            fold.coeffs.push_back({static_cast<int>(std::llabs(p)),
                                   static_cast<int>(std::llabs(k)), v});
        }
        std::sort(fold.coeffs.begin(), fold.coeffs.end(),
                  [](const FoldedEntry& lhs, const FoldedEntry& rhs) {
                      return std::pair{lhs.k, lhs.p} < std::pair{rhs.k, rhs.p};
                  });
    } else {
        fold.coeffs.reserve(static_cast<std::size_t>(p_max) * k_max);
        for (int p = 1; p <= p_max; ++p) {
            for (int k = 1; k <= k_max; ++k) {
                const std::complex<double> v = bin_value(g, p, k, true);
                sum2 += std::norm(v);
                if (v != 0.0) fold.coeffs.push_back({p, k, v});
            }
        }
    }
    fold.captured = sum2 / fold.norm_limit;

    double peak = 0.0;
    for (const FoldedEntry& e : fold.coeffs) peak = std::max(peak, std::abs(e.value));
    const double floor_mag = 1e-10 * peak;
    fold.coeffs.erase(std::remove_if(fold.coeffs.begin(), fold.coeffs.end(),
                                     [&](const FoldedEntry& e) {
                                         return std::abs(e.value) < floor_mag;
                                     }),
                      fold.coeffs.end());

    if (fold.captured < 0.99) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "fold truncation kept %.4f of the limiting norm",
                      fold.captured);
        fold.truncation_warning = buf;
    }
    return fold;
}

std::complex<double> folded_overlap_exact(const SuperscarWave& wave, int p, int k) {
    if (p < 1 || k < 1) throw std::invalid_argument("mode labels must be >= 1");
    const PencilFold g = pencil_fold_geom(wave);
    return bin_value(g, p, k, true);
}

std::complex<double> folded_value(const FoldedWave& fold, double x, double y) {
    const double a = fold.source.a;
    const double b = fold.source.b;
    std::complex<double> out{0.0, 0.0};
    for (const FoldedEntry& e : fold.coeffs) {
        out += e.value * std::sin(kPi * e.p * (x + a) / (2.0 * a)) *
               std::sin(kPi * e.k * y / b);
    }
    return out;
}

Eigen::MatrixXcd folded_even_series(const FoldedWave& fold, int q_max, int k_max) {
    if (q_max < 1 || k_max < 1) throw std::invalid_argument("series block must be non-empty");
    Eigen::MatrixXcd block = Eigen::MatrixXcd::Zero(q_max, k_max);
    for (const FoldedEntry& e : fold.coeffs) {
        if (e.k > k_max) continue;
        if (e.p % 2 == 1) {
            const int q = (e.p + 1) / 2;
            if (q <= q_max) {
                const double sign = q % 2 == 1 ? 1.0 : -1.0;  // (-1)^(q+1)
                block(q - 1, e.k - 1) += sign * e.value;
            }
        } else {
            const int mf = e.p / 2;
            const double sign = mf % 2 == 0 ? 1.0 : -1.0;  // (-1)^mf
            for (int q = 1; q <= q_max; ++q)
                block(q - 1, e.k - 1) += sign * series_mixing_element(mf, q) * e.value;
        }
    }
    const double norm = block.norm();
    if (!(norm > 0.0))
        throw std::runtime_error("folded wave has no weight inside the series block");
    block /= norm;
    return block;
}

Eigen::MatrixXcd named_even_series(const SuperscarWave& wave, int q_max, int k_max) {
    if (!wave.named.has_value())
        throw std::invalid_argument("named_even_series needs a named wave");
    if (q_max < 1 || k_max < 1) throw std::invalid_argument("series block must be non-empty");
    Eigen::MatrixXcd block = Eigen::MatrixXcd::Zero(q_max, k_max);
    switch (*wave.named) {
        case NamedOrbit::horizontal: {
            if (wave.m > k_max)
                throw std::invalid_argument("series block cannot hold the wave's y index");
            for (int q = 1; q <= q_max; ++q)
                block(q - 1, wave.m - 1) = series_mixing_element(wave.n, q);
            break;
        }
        case NamedOrbit::vertical_dd: {
            for (int q = 1; q <= q_max; ++q)
                for (int k = 1; k <= k_max; ++k)
                    block(q - 1, k - 1) =
                        series_mixing_element(wave.m, q) * vertical_mix(wave.n, k);
            break;
        }
        case NamedOrbit::vertical_dn: {
            if (wave.m > q_max)
                throw std::invalid_argument("series block cannot hold the wave's x index");
            for (int k = 1; k <= k_max; ++k) {
                const double base = k == 2 * wave.n ? 0.5 : -vertical_mix(wave.n, k);
                block(wave.m - 1, k - 1) = base;
            }
            break;
        }
    }
    const double norm = block.norm();
    if (!(norm > 0.0)) throw std::runtime_error("named wave has no weight inside the series block");
    block /= norm;
    return block;
}

std::map<long long, double> longitudinal_marginal(const FoldedWave& fold) {
    const PencilFold g = pencil_fold_geom(fold.source);
    const bool tails = g.M % 2 == 0;
    std::map<long long, double> shares;
    double total = 0.0;
    for (const FoldedEntry& e : fold.coeffs) {
        const auto terms = unfold_terms(g, e.p, e.k, tails);
        int best = 0;
        for (int i = 1; i < 4; ++i)
            if (std::abs(terms[i].value) > std::abs(terms[best].value)) best = i;
        const double weight = std::norm(e.value);
        shares[-terms[best].m_long] += weight;
        total += weight;
    }
    if (total > 0.0)
        for (auto& [key, val] : shares) val /= total;
    return shares;
}

double gibbs_factor(double orbit_length, long long m, long long mprime) {
    return orbit_length / (kPi * (static_cast<double>(mprime) + 0.5 - static_cast<double>(m)));
}

double gibbs_tail_profile(const FoldedWave& fold) {
    if (fold.source.named.has_value() || fold.source.pencil.M % 2 != 0)
        throw std::invalid_argument("longitudinal tail fit needs an even-M pencil fold");
    const auto shares = longitudinal_marginal(fold);
    const double center = fold.source.m / 2.0;
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& [key, val] : shares) {
        const double d = std::abs(static_cast<double>(key) - center);
        if (d > 1.6 && d < 101.0 && val > 0.0) {
            xs.push_back(std::log(d));
            ys.push_back(0.5 * std::log(val));
        }
    }
    if (xs.size() < 20) throw std::runtime_error("insufficient tail data for the Gibbs fit");
    return fit_line(xs, ys).slope;
}

double triangle_superscar_energy(int m, int n, const BilliardSpec& spec) {
    if (spec.kind() != BilliardKind::triangle_pi8)
        throw std::invalid_argument("triangle channel energies need the pi/8 triangle");
    if (m < 1 || n < 1) throw std::invalid_argument("wave indices must be >= 1");
    const double a = spec.a();
    const double b = spec.b();
    return kPi * kPi * (static_cast<double>(m) * m / (a * a) +
                        static_cast<double>(n) * n / (b * b));
}

double fold_triangle(int m, int n, double x, double y, const BilliardSpec& spec) {
    if (spec.kind() != BilliardKind::triangle_pi8)
        throw std::invalid_argument("fold_triangle needs the pi/8 triangle");
    const double a = spec.a();
    const double b = spec.b();
    const auto windowed = [&](double u, double v) {
        if (u <= 0.0 || u >= a || v <= 0.0 || v >= b) return 0.0;
        return std::sin(kPi * m * u / a) * std::sin(kPi * n * v / b);
    };
    const double r = std::sqrt(2.0);
    const double s = windowed(x, y) - windowed((x + y) / r, (x - y) / r) +
                     windowed((x - y) / r, (x + y) / r) - windowed(y, x);
    return 2.0 / std::sqrt(a * b) * s;
}

Eigen::MatrixXd fold_triangle_series(int m, int n, const BilliardSpec& spec,
                                     const ExpansionBasis& basis, int threads) {
    if (spec.kind() != BilliardKind::triangle_pi8)
        throw std::invalid_argument("fold_triangle_series needs the pi/8 triangle");
    if (basis.kind != SeriesKind::full_rectangle ||
        std::abs(basis.a - spec.a()) > 1e-9 * spec.a() ||
        std::abs(basis.b - spec.b()) > 1e-9 * spec.b())
        throw std::invalid_argument("series basis must match the triangle bounding box");
    const double a = spec.a();
    const double b = spec.b();
    const double slope = b / a;  // tan(pi/8)
    const double r2b = std::sqrt(2.0) * b;
    const double k_wave = std::sqrt(triangle_superscar_energy(m, n, spec));

    // x-strips split at the fold kink lines
    const std::array<double, 4> x_cuts{0.0, b, r2b, a};
    struct Task {
        double x;
        double wx;
    };
    std::vector<Task> tasks;
    for (int s = 0; s < 3; ++s) {
        const double len = x_cuts[s + 1] - x_cuts[s];
        const int n_x = std::max(
            96, static_cast<int>(std::ceil(2.0 * (basis.q_max + m) * len / a)) + 48);
        const QuadratureRule rule =
            mapped_rule(gauss_legendre(n_x), x_cuts[s], x_cuts[s + 1]);
        for (int i = 0; i < n_x; ++i) tasks.push_back({rule.x[i], rule.w[i]});
    }
    const int n_y = std::max(
        48, static_cast<int>(std::ceil(2.0 * b * (basis.k_max / b + k_wave / kPi))) + 32);
    const QuadratureRule y_unit = gauss_legendre(n_y);

    const int n_threads = resolved_threads(threads);
    Eigen::MatrixXd result = Eigen::MatrixXd::Zero(basis.q_max, basis.k_max);
    std::mutex merge_mutex;
    parallel_for(static_cast<std::size_t>(n_threads), n_threads, [&](std::size_t worker) {
        Eigen::MatrixXd local = Eigen::MatrixXd::Zero(basis.q_max, basis.k_max);
        Eigen::VectorXd sq(basis.q_max);
        Eigen::VectorXd sk(basis.k_max);
        for (std::size_t t = worker; t < tasks.size(); t += n_threads) {
            const double x = tasks[t].x;
            const double wx = tasks[t].wx;
            const double top = x * slope;
            std::array<double, 4> cuts{0.0, top, top, top};
            int n_cuts = 2;
            for (const double c : {r2b - x, x - r2b}) {
                if (c > 0.0 && c < top) {
                    cuts[1] = c;
                    cuts[2] = top;
                    n_cuts = 3;
                    break;  // at most one kink height per x
                }
            }
            fill_sines(sq, kPi * x / a);
            for (int seg = 0; seg + 1 < n_cuts; ++seg) {
                const double ylo = cuts[seg];
                const double yhi = cuts[seg + 1];
                if (yhi - ylo < 1e-14) continue;
                for (int j = 0; j < n_y; ++j) {
                    const double y = 0.5 * (yhi - ylo) * (y_unit.x[j] + 1.0) + ylo;
                    const double wy = 0.5 * (yhi - ylo) * y_unit.w[j];
                    const double val = fold_triangle(m, n, x, y, spec);
                    if (val == 0.0) continue;
                    fill_sines(sk, kPi * y / b);
                    const double c = 2.0 / std::sqrt(a * b) * val * wx * wy;
                    local.noalias() += (c * sq) * sk.transpose();
                }
            }
        }
        const std::lock_guard<std::mutex> lock(merge_mutex);
        result += local;
    });
    return result;
}

}  // namespace superscar

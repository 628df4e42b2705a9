#include "superscar/diffraction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "superscar/numerics.hpp"

namespace superscar {
namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// Denominators this small mark an optical boundary; the pole is reported as a
// tagged signed infinity rather than a huge finite number.
constexpr double kBoundaryEps = 1e-12;

// zeta values feeding the analytic tails of the infinite products.
constexpr double kZeta32 = 2.612375348685488152;
constexpr double kZeta2 = 1.644934066848226406;
constexpr double kZeta52 = 1.341487257250917109;
constexpr double kZeta72 = 1.126733867317056603;
constexpr double kZeta4 = 1.082323233711138144;
constexpr double kZeta92 = 1.054707510761454303;
constexpr double kZeta112 = 1.025204579954685613;

double signed_infinity(double limit_sign) {
    return std::copysign(std::numeric_limits<double>::infinity(),
                         limit_sign == 0.0 ? 1.0 : limit_sign);
}

}  // namespace

std::complex<double> fresnel(double u) {
    // F(u) = erfc(u e^{-i pi/4}) / 2; rotating the integration contour of
    // integral_u^inf e^{it^2} dt onto the line arg t = pi/4 gives the identity.
    const double s = std::sqrt(0.5);
    return 0.5 * erfc_complex(std::complex<double>(u * s, -u * s));
}

std::complex<double> halfplane_field(double k, double r, double theta_i, double theta_f) {
    const double root = std::sqrt(2.0 * k * r);
    const auto term = [&](double delta) {
        const std::complex<double> phase(0.0, -k * r * std::cos(delta));
        return std::exp(phase) * fresnel(-root * std::cos(0.5 * delta));
    };
    return term(theta_f - theta_i) - term(theta_f + theta_i);
}

DiffractionCoefficient halfplane_D(double theta_f, double theta_i) {
    const double cm = std::cos(0.5 * (theta_f - theta_i));
    const double cp = std::cos(0.5 * (theta_f + theta_i));
    DiffractionCoefficient out;
    if (std::abs(cm) < kBoundaryEps) {
        out.on_boundary = true;
        out.value = signed_infinity(cm);
        return out;
    }
    if (std::abs(cp) < kBoundaryEps) {
        out.on_boundary = true;
        out.value = signed_infinity(-cp);
        return out;
    }
    out.value = 1.0 / cm - 1.0 / cp;
    return out;
}

DiffractionCoefficient wedge_D(double theta_f, double theta_i, double gamma) {
    if (!(gamma > 0.0)) throw std::invalid_argument("wedge_D: gamma must be positive");
    const double pre = (2.0 / gamma) * std::sin(kPi / gamma);
    const double c0 = std::cos(kPi / gamma);
    const double dp = c0 - std::cos((theta_f + theta_i) / gamma);
    const double dm = c0 - std::cos((theta_f - theta_i) / gamma);
    DiffractionCoefficient out;
    if (std::abs(dp) < kBoundaryEps) {
        out.on_boundary = true;
        out.value = signed_infinity(pre * dp);
        return out;
    }
    if (std::abs(dm) < kBoundaryEps) {
        out.on_boundary = true;
        out.value = signed_infinity(-pre * dm);
        return out;
    }
    out.value = pre * (1.0 / dp - 1.0 / dm);
    return out;
}

double kirchhoff_An(std::size_t n) {
    if (n < 2) return 0.0;
    // 1/sqrt(q(n-q)) is symmetric about q = n/2; fold the sum.
    const double nd = static_cast<double>(n);
    double sum = 0.0;
    for (std::size_t q = (n - 1) / 2; q >= 1; --q) {
        const double qd = static_cast<double>(q);
        sum += 1.0 / std::sqrt(qd * (nd - qd));
    }
    sum *= 2.0;
    if (n % 2 == 0) sum += 2.0 / nd;
    return sum / kPi;
}

double kirchhoff_An_asymptote(std::size_t n) {
    return 1.0 + 2.0 * kZetaHalf / (kPi * std::sqrt(static_cast<double>(n)));
}

double kirchhoff_rho_diff(double k, double d, std::size_t n) {
    const double nd = static_cast<double>(n);
    return -d * kirchhoff_An(n) * std::cos(k * d * nd) / (8.0 * kPi * k);
}

double ScatterConfig::Q_dim() const { return k * d / kPi; }

std::string ScatterConfig::small_angle_warning() const {
    const double budget = std::sqrt(Q_dim()) * phi;
    if (!(budget > 0.3)) return {};
    char buf[128];
    std::snprintf(buf, sizeof(buf),
                  "small-angle expansion stretched: sqrt(Q)*phi = %.3f exceeds 0.3", budget);
    return buf;
}

std::complex<double> specular_R0(const ScatterConfig& config) {
    const double s = std::sqrt(config.Q_dim()) * kZetaHalf * config.phi;
    return {-1.0 - s, s};
}

double leakage(const ScatterConfig& config) {
    return 1.0 - leakage_constant() * std::sqrt(config.k * config.d) * config.phi;
}

double leakage_constant() { return -2.0 * kZetaHalf / std::sqrt(kPi); }

double small_angle_rn(std::size_t n) {
    if (n == 0) throw std::invalid_argument("small_angle_rn: n must be >= 1");
    const double nd = static_cast<double>(n);
    const std::size_t cutoff = std::max<std::size_t>(1000000, 64 * n);
    double sum = 2.0 * std::sqrt(nd) * kZetaHalf - 2.0 - std::log(nd);
    // Partial sums of m^{-p} for the analytic tail of the product.
    double s32 = 0.0, s52 = 0.0, s72 = 0.0, s92 = 0.0, s112 = 0.0;
    for (std::size_t m = 1; m <= cutoff; ++m) {
        const double im = 1.0 / static_cast<double>(m);
        const double root = std::sqrt(im);
        const double p32 = im * root;
        s32 += p32;
        s52 += p32 * im;
        s72 += p32 * im * im;
        s92 += p32 * im * im * im;
        s112 += p32 * im * im * im * im;
        if (m == n) continue;
        // log of (1 + s)/|1 - s| e^{-2s} with s = sqrt(n/m); both branches
        // collapse to 2 atanh of the smaller of s, 1/s.
        const double s = std::sqrt(nd * im);
        sum += 2.0 * (std::atanh(s < 1.0 ? s : 1.0 / s) - s);
    }
    // Tail of sum 2(atanh(s) - s) = 2(s^3/3 + s^5/5 + ...), s = sqrt(n/m).
    sum += (2.0 / 3.0) * nd * std::sqrt(nd) * (kZeta32 - s32);
    sum += (2.0 / 5.0) * nd * nd * std::sqrt(nd) * (kZeta52 - s52);
    sum += (2.0 / 7.0) * nd * nd * nd * std::sqrt(nd) * (kZeta72 - s72);
    sum += (2.0 / 9.0) * nd * nd * nd * nd * std::sqrt(nd) * (kZeta92 - s92);
    sum += (2.0 / 11.0) * nd * nd * nd * nd * nd * std::sqrt(nd) * (kZeta112 - s112);
    return std::exp(sum);
}

double large_angle_r(double u) {
    if (u == 0.0) return 1.0;
    const double u2 = u * u;
    const auto cutoff = static_cast<std::size_t>(
        std::max(200000.0, std::ceil(2000.0 * u2)));
    double sum = 2.0 * kZetaHalf * u;
    double s32 = 0.0, s2 = 0.0, s52 = 0.0, s72 = 0.0, s4 = 0.0, s92 = 0.0, s112 = 0.0;
    for (std::size_t m = 1; m <= cutoff; ++m) {
        const double im = 1.0 / static_cast<double>(m);
        const double root = std::sqrt(im);
        const double p32 = im * root;
        s32 += p32;
        s2 += im * im;
        s52 += p32 * im;
        s72 += p32 * im * im;
        s4 += im * im * im * im;
        s92 += p32 * im * im * im;
        s112 += p32 * im * im * im * im;
        const double x = u * root;
        const double lin = 1.0 + x;
        if (lin == 0.0) return 0.0;  // exact zero of the product at u = -sqrt(m)
        sum += 2.0 * std::log(std::abs(lin)) + std::log1p(x * x) - 2.0 * x;
    }
    // Tail of 2 ln(1+x) + ln(1+x^2) - 2x
    //   = (2/3)x^3 - x^4 + (2/5)x^5 + (2/7)x^7 - (1/2)x^8 + (2/9)x^9 + (2/11)x^11 + ...
    const double u3 = u2 * u;
    sum += (2.0 / 3.0) * u3 * (kZeta32 - s32);
    sum += -u2 * u2 * (kZeta2 - s2);
    sum += (2.0 / 5.0) * u3 * u2 * (kZeta52 - s52);
    sum += (2.0 / 7.0) * u3 * u2 * u2 * (kZeta72 - s72);
    sum += -0.5 * u2 * u2 * u2 * u2 * (kZeta4 - s4);
    sum += (2.0 / 9.0) * u3 * u3 * u3 * (kZeta92 - s92);
    sum += (2.0 / 11.0) * u3 * u3 * u3 * u2 * (kZeta112 - s112);
    return std::exp(sum);
}

double transmission_t(double u) { return 2.0 * large_angle_r(u); }

double u_of(int n, const ScatterConfig& config) {
    const double q = config.Q_dim();
    const double sa = std::sin(config.alpha);
    const double n_star = q * sa * sa;
    return (static_cast<double>(n) - n_star) / (std::sqrt(q) * std::sin(2.0 * config.alpha));
}

std::vector<GratingOrder> grating_orders(const ScatterConfig& config) {
    if (!(config.k > 0.0) || !(config.d > 0.0))
        throw std::invalid_argument("grating_orders: k and d must be positive");
    const double q = config.Q_dim();
    const double sh = std::sin(0.5 * config.phi);
    const double ch = std::cos(0.5 * config.phi);
    const auto n_min = static_cast<long>(std::ceil(-q * sh * sh));
    const auto n_max = static_cast<long>(std::floor(q * ch * ch));
    std::vector<GratingOrder> out;
    out.reserve(static_cast<std::size_t>(n_max - n_min + 1));
    const double cphi = std::cos(config.phi);
    for (long n = n_min; n <= n_max; ++n) {
        const double arg = cphi - 2.0 * static_cast<double>(n) / q;
        GratingOrder order;
        order.n = static_cast<int>(n);
        order.phi_n = std::acos(std::clamp(arg, -1.0, 1.0));
        out.push_back(order);
    }
    return out;
}

ReflectionSpectrum reflection_spectrum(const ScatterConfig& config) {
    ReflectionSpectrum spectrum;
    spectrum.orders = grating_orders(config);
    spectrum.leakage = leakage(config);

    const double q = config.Q_dim();
    const double sqrt_q = std::sqrt(q);
    const bool reflective = config.alpha > 0.5 * kPi;
    // The fixed-n product amplitudes decay like e^{2 zeta(1/2) sqrt(n)};
    // beyond this index they are below double-precision relevance.
    constexpr int kSmallFamilyCut = 64;

    for (auto& order : spectrum.orders) {
        if (order.n == 0) {
            order.R_n = std::abs(specular_R0(config));
            continue;
        }
        if (order.n < 0) continue;
        double amp = 0.0;
        if (order.n <= kSmallFamilyCut)
            amp = sqrt_q * config.phi * std::sqrt(small_angle_rn(static_cast<std::size_t>(order.n)));
        if (reflective) {
            const double band = config.phi / std::abs(std::sin(2.0 * config.alpha)) *
                                std::sqrt(large_angle_r(u_of(order.n, config)));
            amp = std::max(amp, band);
        }
        order.R_n = amp;
    }

    if (!reflective) {
        // Tubes of width a = d cos(alpha) between neighbouring half-planes.
        const double a = config.d * std::cos(config.alpha);
        const auto m_max = static_cast<int>(std::floor(config.k * a / kPi));
        ScatterConfig mirrored = config;
        mirrored.alpha = kPi - config.alpha;
        spectrum.transmissions.reserve(static_cast<std::size_t>(std::max(m_max, 0)));
        for (int m = 1; m <= m_max; ++m) {
            TransmittedMode mode;
            mode.m = m;
            const double pm = kPi * static_cast<double>(m) / a;
            mode.omega_m = std::sqrt(std::max(config.k * config.k - pm * pm, 0.0));
            mode.T_m = config.phi * std::sqrt(transmission_t(u_of(m, mirrored)));
            spectrum.transmissions.push_back(mode);
        }
    }
    return spectrum;
}

}  // namespace superscar

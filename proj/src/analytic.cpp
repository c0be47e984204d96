#include "thickpoints/analytic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "thickpoints/errors.hpp"

namespace thick {

namespace {

constexpr double kPi = std::numbers::pi;

bool set(double v) { return !std::isnan(v); }

double need(double v, const char* name, EnvelopeKind kind) {
    if (!set(v)) throw RegimeError(to_string(kind) + ": missing parameter " + name);
    return v;
}

void require(bool ok, EnvelopeKind kind, const char* what) {
    if (!ok) throw RegimeError(to_string(kind) + ": " + what);
}

// Gauss-Legendre rule mapped to [lo, hi].
template <int N, class F>
double gauss(F&& f, double lo, double hi) {
    using Rule = boost::math::quadrature::gauss<double, N>;
    const auto& x = Rule::abscissa();
    const auto& w = Rule::weights();
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] == 0.0) {
            sum += w[i] * f(mid);
        } else {
            sum += w[i] * (f(mid - half * x[i]) + f(mid + half * x[i]));
        }
    }
    return sum * half;
}

// |(|y|/a) x - a y/|y||, the reflected-distance factor of the disk Green's function.
double reflected_factor(double a, PlanePoint x, PlanePoint y) {
    const double ny = norm(y);
    if (ny < 1e-300) return a;
    const double s = ny / a;
    return std::hypot(s * x.x - a * y.x / ny, s * x.y - a * y.y / ny);
}

// Chebyshev-Lobatto representation of a function on [0, alpha].
struct ChebFunction {
    double alpha = 0.0;
    std::vector<double> nodes;
    std::vector<double> values;
    std::vector<double> weights;

    ChebFunction(double a, int n) : alpha(a) {
        for (int i = 0; i <= n; ++i) {
            nodes.push_back(0.5 * a * (1.0 - std::cos(kPi * i / n)));
            double w = (i % 2 == 0) ? 1.0 : -1.0;
            if (i == 0 || i == n) w *= 0.5;
            weights.push_back(w);
        }
        values.assign(nodes.size(), 0.0);
    }

    double operator()(double s) const {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const double d = s - nodes[i];
            if (d == 0.0) return values[i];
            const double t = weights[i] / d;
            num += t * values[i];
            den += t;
        }
        return num / den;
    }
};

// Radial Green's operator: (K f)(s) = 2 int_0^alpha log(a / max(s, r)) f(r) r dr.
template <class F>
double radial_green(double a, double alpha, double s, F&& f) {
    double inner = 0.0;
    if (s > 0.0) inner = std::log(a / s) * gauss<30>([&](double r) { return f(r) * r; }, 0.0, s);
    const double outer = gauss<30>([&](double r) { return std::log(a / r) * f(r) * r; }, s, alpha);
    return 2.0 * (inner + outer);
}

// E[(occupation)^n] via iterated radial Green's operator.
double radial_moment(int n, double a, double rk, double alpha, int cheb) {
    ChebFunction psi(alpha, cheb);
    std::fill(psi.values.begin(), psi.values.end(), 1.0);
    for (int j = 1; j < n; ++j) {
        ChebFunction next(alpha, cheb);
        for (std::size_t i = 0; i < next.nodes.size(); ++i) {
            next.values[i] = radial_green(a, alpha, next.nodes[i], [&](double r) {
                return conformal_factor_sq(r * r) * psi(r);
            });
        }
        psi = next;
    }
    const double integral = gauss<30>([&](double r) { return conformal_factor_sq(r * r) * psi(r) * r; }, 0.0, alpha);
    double fact = 1.0;
    for (int j = 2; j <= n; ++j) fact *= j;
    return fact * 2.0 * std::log(a / rk) * integral;
}

// Second moment by direct quadrature, in polar coordinates about the first
// point so the logarithmic singularity of G sits at the origin of the inner
// integral. The start point's circle average of G(x, .) is log(a/r_k)/pi.
template <int NR, int NS>
double split_second_moment(double a, double rk, double alpha, int n_psi) {
    auto inner = [&](double rho) {
        const PlanePoint y1{rho, 0.0};
        double sum = 0.0;
        for (int m = 0; m < n_psi; ++m) {
            const double psi = 2.0 * kPi * (m + 0.5) / n_psi;
            const double c = std::cos(psi), s = std::sin(psi);
            const double T = -rho * c + std::sqrt(std::max(0.0, rho * rho * c * c + alpha * alpha - rho * rho));
            if (T <= 0.0) continue;
            // t = T u^2 removes the t log t behaviour at the singular point
            sum += gauss<NS>([&](double u) {
                const double t = T * u * u;
                const PlanePoint y2{rho + t * c, t * s};
                const double g = (-std::log(t) + std::log(reflected_factor(a, y1, y2))) / kPi;
                return g * conformal_factor(y2) * 2.0 * T * T * u * u * u;
            }, 0.0, 1.0);
        }
        return sum * 2.0 * kPi / n_psi;
    };
    const double outer = gauss<NR>([&](double rho) {
        return conformal_factor_sq(rho * rho) * inner(rho) * rho;
    }, 0.0, alpha);
    // 2! * (log(a/r_k)/pi) * int_{B} g(y1) I(y1) dy1, the angular part giving 2 pi.
    return 2.0 * (std::log(a / rk) / kPi) * 2.0 * kPi * outer;
}

}  // namespace

double hitting_probability(double u1, double u2, double u3) {
    if (!(u1 > 0.0) || !(u1 <= u2) || !(u2 <= u3) || !(u1 < u3))
        throw RegimeError("hitting_probability: need 0 < u1 <= u2 <= u3 with u1 < u3");
    return std::log(u2 / u3) / std::log(u1 / u3);
}

double excursion_count_tail(int k, int l, long n) {
    if (k < 1 || k > l - 1) throw RegimeError("excursion_count_tail: need 1 <= k <= l-1");
    if (n < 0) throw RegimeError("excursion_count_tail: n must be non-negative");
    return (static_cast<double>(k) / (l - 1)) * std::pow(1.0 - 1.0 / l, static_cast<double>(n));
}

double rho(int L) {
    if (L < 1) throw RegimeError("rho: L must be positive");
    return 2.0 - std::log(static_cast<double>(L)) / L;
}

double level_distance(int l, int L) {
    if (l < 0 || l > L) throw RegimeError("level_distance: need 0 <= l <= L");
    return static_cast<double>(std::min(l, L - l));
}

double thickness_scale(double eps) {
    if (!(eps > 0.0) || eps > std::exp(-1.0) * (1.0 + 1e-15))
        throw RegimeError("thickness_scale: need 0 < eps <= 1/e");
    const double li = -std::log(eps);
    return std::sqrt(2.0 / kPi) * (li - 0.5 * std::log(std::max(li, 1.0)));
}

double time_scale(int L, double z) {
    if (L < 2) throw RegimeError("time_scale: need L >= 2");
    const double Ld = L;
    return 2.0 * Ld * (Ld - std::log(Ld) + z);
}

double plane_offset(double z, double c) { return std::sqrt(2.0 * kPi) * z + c; }

double barrier_value(const BarrierSpec& spec, int l) {
    const int L = spec.L;
    if (L < 1) throw RegimeError("barrier_value: L must be positive");
    if (l < 0 || l > L) throw RegimeError("barrier_value: need 0 <= l <= L");
    const double ll = l, LL = L;
    const double quarter = std::pow(level_distance(l, L), 0.25);
    const double r = rho(L);
    switch (spec.kind) {
        case BarrierKind::AlphaPlus: return r * ll + spec.z + quarter;
        case BarrierKind::AlphaMinus: return r * ll + spec.z - quarter;
        case BarrierKind::Beta: return r * ll + spec.z;
        case BarrierKind::Linear: return spec.a + (spec.b - spec.a) * ll / LL;
        case BarrierKind::HatBeta: return spec.x_hat * (1.0 - ll / LL) + r * ll + spec.z * ll / LL;
        case BarrierKind::HatGammaMinus:
            return spec.x_hat * (1.0 - ll / LL) + r * ll + spec.z * ll / LL - quarter;
    }
    throw RegimeError("barrier_value: unknown kind");
}

double green_disk(double a, PlanePoint x, PlanePoint y) {
    if (!(a > 0.0)) throw RegimeError("green_disk: radius must be positive");
    if (!(norm(x) < a) || !(norm(y) < a)) throw RegimeError("green_disk: points must lie in the open disk");
    const double d = distance(x, y);
    if (d == 0.0) throw RegimeError("green_disk: coincident points");
    return (-std::log(d) + std::log(reflected_factor(a, x, y))) / kPi;
}

double log_circle_average(double b, PlanePoint y) {
    if (!(b > 0.0)) throw RegimeError("log_circle_average: radius must be positive");
    return std::log(std::max(b, norm(y)));
}

double circle_average_green(int k, const RadiiLadder& ladder, PlanePoint y) {
    if (k < 1 || k > ladder.depth) throw RegimeError("circle_average_green: need 1 <= k <= depth");
    const double a = ladder.radius(k - 1), b = ladder.radius(k);
    const double ny = norm(y);
    if (ny > b) throw RegimeError("circle_average_green: |y| exceeds r_k");
    // -(1/pi) avg log|x - y| + (1/pi) avg log((|y|/a)|x - y*|), with |y*| = a^2/|y| > b.
    const double first = -log_circle_average(b, y);
    const double second = ny > 0.0 ? std::log(ny / a) + std::log(a * a / ny) : std::log(a);
    return (first + second) / kPi;
}

MomentResult occupation_moment(int n, int k, double alpha, const RadiiLadder& ladder, double c, double c0) {
    if (n < 1) throw RegimeError("occupation_moment: n must be positive");
    if (k < 1 || k > ladder.depth) throw RegimeError("occupation_moment: need 1 <= k <= depth");
    if (!(alpha > 0.0)) throw RegimeError("occupation_moment: alpha must be positive");
    const double eps = geodesic_of_euclidean(alpha);
    const double hk = ladder.geodesic(k);
    if (eps > hk * (1.0 + 1e-12) || eps < hk / 100.0 * (1.0 - 1e-12))
        throw RegimeError("occupation_moment: ball radius outside [h_k/100, h_k]");
    const double a = ladder.radius(k - 1), rk = ladder.radius(k);
    const double omega = cap_area(eps);

    MomentResult res;
    if (n == 1) {
        res.value = omega * std::log(a / rk) / kPi;
    } else if (n == 2) {
        const double fine = split_second_moment<40, 30>(a, rk, alpha, 512);
        const double coarse = split_second_moment<20, 15>(a, rk, alpha, 256);
        res.value = fine;
        res.error_estimate = std::abs(fine - coarse);
    } else {
        const double fine = radial_moment(n, a, rk, alpha, 48);
        const double coarse = radial_moment(n, a, rk, alpha, 24);
        res.value = fine;
        res.error_estimate = std::abs(fine - coarse);
    }
    double fact = 1.0;
    for (int j = 2; j <= n; ++j) fact *= j;
    const double lg = std::log(a / alpha) + c0;
    res.normalized_envelope = std::pow(c, n) * fact * std::pow(lg, n);
    res.envelope = res.normalized_envelope * std::pow(alpha, 2.0 * n);
    res.normalized_value = res.value / std::pow(omega, n);
    return res;
}

double exit_angle_density(double rho_, double theta) {
    if (!(rho_ > 0.0) || !(rho_ < 1.0)) throw RegimeError("exit_angle_density: need 0 < rho < 1");
    return (1.0 - rho_ * rho_) / (2.0 * kPi * (1.0 - 2.0 * rho_ * std::cos(theta) + rho_ * rho_));
}

double exit_angle_cdf(double rho_, double theta) {
    if (!(rho_ > 0.0) || !(rho_ < 1.0)) throw RegimeError("exit_angle_cdf: need 0 < rho < 1");
    if (theta <= 0.0) return 0.0;
    if (theta >= 2.0 * kPi) return 1.0;
    const double K = (1.0 + rho_) / (1.0 - rho_);
    if (theta <= kPi) return std::atan(K * std::tan(0.5 * theta)) / kPi;
    return 1.0 - std::atan(K * std::tan(0.5 * (2.0 * kPi - theta))) / kPi;
}

double exit_angle_quantile(double rho_, double u) {
    if (!(rho_ > 0.0) || !(rho_ < 1.0)) throw RegimeError("exit_angle_quantile: need 0 < rho < 1");
    if (!(u >= 0.0) || !(u <= 1.0)) throw RegimeError("exit_angle_quantile: need 0 <= u <= 1");
    const double K = (1.0 + rho_) / (1.0 - rho_);
    if (u <= 0.5) return 2.0 * std::atan(std::tan(kPi * u) / K);
    return 2.0 * kPi - 2.0 * std::atan(std::tan(kPi * (1.0 - u)) / K);
}

double exit_angle_cdf_primitive(double rho_, double theta) {
    if (!(rho_ > 0.0) || !(rho_ < 1.0)) throw RegimeError("exit_angle_cdf_primitive: need 0 < rho < 1");
    theta = std::clamp(theta, 0.0, 2.0 * kPi);
    // F(t) = t/2pi + (1/pi) sum rho^m sin(mt)/m, integrated term by term.
    double sum = 0.0, pw = rho_;
    const double c1 = std::cos(theta), s1 = std::sin(theta);
    double cm = c1, sm = s1;
    for (int m = 1; m < 200000; ++m) {
        const double term = pw * (1.0 - cm) / (static_cast<double>(m) * m);
        sum += term;
        if (pw < 1e-18 * m * m) break;
        pw *= rho_;
        const double cn = cm * c1 - sm * s1;
        sm = sm * c1 + cm * s1;
        cm = cn;
    }
    return theta * theta / (4.0 * kPi) + sum / kPi;
}

double exit_angle_sample(double rho_, Rng& rng) { return exit_angle_quantile(rho_, rng.uniform()); }

std::string to_string(EnvelopeKind kind) {
    switch (kind) {
        case EnvelopeKind::BallAvoidance: return "ball_avoidance";
        case EnvelopeKind::LateStart: return "late_start";
        case EnvelopeKind::RightPeak: return "right_peak";
        case EnvelopeKind::RightIntermediate: return "right_intermediate";
        case EnvelopeKind::RightLate: return "right_late";
        case EnvelopeKind::PoleWindow: return "pole_window";
        case EnvelopeKind::LeftPeak: return "left_peak";
        case EnvelopeKind::LeftIntermediate: return "left_intermediate";
        case EnvelopeKind::LeftLate: return "left_late";
        case EnvelopeKind::SupremumTail: return "supremum_tail";
        case EnvelopeKind::PlaneSupremumTail: return "plane_supremum_tail";
        case EnvelopeKind::SupremumLower: return "supremum_lower";
        case EnvelopeKind::BarrierUpper: return "barrier_upper";
        case EnvelopeKind::BarrierLower: return "barrier_lower";
        case EnvelopeKind::IncrementTail: return "increment_tail";
        case EnvelopeKind::OccupationDeviation: return "occupation_deviation";
        case EnvelopeKind::TransportConcentration: return "transport_concentration";
    }
    return "unknown";
}

EnvelopeKind envelope_kind_from_string(const std::string& name) {
    static const std::map<std::string, EnvelopeKind> table = [] {
        std::map<std::string, EnvelopeKind> t;
        for (int i = 0; i <= static_cast<int>(EnvelopeKind::TransportConcentration); ++i) {
            const auto k = static_cast<EnvelopeKind>(i);
            t[to_string(k)] = k;
        }
        return t;
    }();
    auto it = table.find(name);
    if (it == table.end()) throw RegimeError("unknown envelope kind: " + name);
    return it->second;
}

double bound_envelope(EnvelopeKind kind, const EnvelopeParams& p) {
    const auto K = kind;
    switch (kind) {
        case EnvelopeKind::BallAvoidance: {
            const double L = need(p.L, "L", K), k = need(p.k, "k", K), z = need(p.z, "z", K);
            require(L >= 2 && k >= 1 && k <= L - 1, K, "need 1 <= k <= L-1");
            require(std::abs(z) <= std::log(L), K, "need |z| <= log L");
            return k * std::exp(-2.0 * L) * L * std::exp(-2.0 * z);
        }
        case EnvelopeKind::LateStart: {
            const double L = need(p.L, "L", K), k = need(p.k, "k", K);
            const double a = need(p.a, "a", K), b = need(p.b, "b", K);
            require(L >= 3 && k >= 0 && k < L, K, "need 0 <= k < L");
            require(a <= L / std::log(L) && b <= L / std::log(L), K, "need a, b <= L/log L");
            const double d = L - k, ab = a - b;
            return std::exp(-2.0 * d - 2.0 * ab - ab * ab / (2.0 * d)) * std::pow(L, 2.0 * d / L);
        }
        case EnvelopeKind::RightPeak:
        case EnvelopeKind::LeftPeak: {
            const double L = need(p.L, "L", K), z = need(p.z, "z", K);
            require(L >= 2, K, "need L >= 2");
            if (kind == EnvelopeKind::RightPeak)
                require(z >= 0.0 && z <= std::log(L), K, "need 0 <= z <= log L");
            else
                require(std::abs(z) <= std::log(L), K, "need |z| <= log L");
            const double core = std::exp(-2.0 * L - 2.0 * z - z * z / (4.0 * L));
            return kind == EnvelopeKind::RightPeak ? (1.0 + z) * core : core;
        }
        case EnvelopeKind::RightIntermediate:
        case EnvelopeKind::LeftIntermediate: {
            const double L = need(p.L, "L", K), k = need(p.k, "k", K);
            const double z = need(p.z, "z", K), q = need(p.p, "p", K);
            require(L >= 2 && k >= L / 2.0 && k <= L, K, "need L/2 <= k <= L");
            require(q >= 0.0 && q <= k, K, "need 0 <= p <= k");
            if (kind == EnvelopeKind::RightIntermediate)
                require(z >= 0.0 && z <= std::log(L), K, "need 0 <= z <= log L");
            else
                require(std::abs(z) <= std::log(L), K, "need |z| <= log L");
            const double e = std::exp(-2.0 * k - 2.0 * (z - q) - (z - q) * (z - q) / (4.0 * k));
            return kind == EnvelopeKind::RightIntermediate ? (1.0 + z) * (1.0 + q) * e : (1.0 + q) * e;
        }
        case EnvelopeKind::RightLate:
        case EnvelopeKind::LeftLate: {
            const double L = need(p.L, "L", K), k = need(p.k, "k", K);
            const double t = need(p.t, "t", K), m = need(p.m, "m", K);
            require(L >= 3 && k >= 0 && k < L, K, "need 0 <= k < L");
            require(k <= std::pow(std::log(L), 5.0), K, "need k <= log^5 L");
            require(t >= 0.0 && m > 0.0, K, "need t >= 0 and m > 0");
            if (set(p.z)) {
                if (kind == EnvelopeKind::RightLate)
                    require(p.z >= 0.0 && p.z <= std::log(L), K, "need 0 <= z <= log L");
                else
                    require(std::abs(p.z) <= std::log(L), K, "need |z| <= log L");
            }
            const double d = L - k;
            return (1.0 + t) * std::sqrt(m) * std::exp(-2.0 * d - 2.0 * t - t * t / (4.0 * d));
        }
        case EnvelopeKind::PoleWindow: {
            const double L = need(p.L, "L", K), k = need(p.k, "k", K), z = need(p.z, "z", K);
            const double m = need(p.m, "m", K), j = need(p.j, "j", K);
            const double lg = std::log(L);
            require(L >= 3 && k <= L && k >= L - std::pow(lg, 4.0), K, "need L - log^4 L <= k <= L");
            require(m >= 1.0 && m <= lg, K, "need 1 <= m <= log L");
            require(z <= lg, K, "need z <= log L");
            const int Li = static_cast<int>(std::lround(L)), ki = static_cast<int>(std::lround(k));
            const double kq = std::pow(level_distance(ki, Li), 0.25);
            const double ap = rho(Li) * k + z + kq;
            require(j >= 0.0 && j <= ap / 2.0, K, "need 0 <= j <= alpha_+(k)/2");
            return std::exp(-2.0 * k - 2.0 * z - 2.0 * kq + 2.0 * j) * m * m * (1.0 + z + m + kq) * (1.0 + j);
        }
        case EnvelopeKind::SupremumTail: {
            const double z = need(p.z, "z", K);
            require(z >= 0.0, K, "need z >= 0");
            return z * std::exp(-2.0 * z);
        }
        case EnvelopeKind::PlaneSupremumTail: {
            const double z = need(p.z, "z", K);
            require(z >= 0.0, K, "need z >= 0");
            return z * std::exp(-kCStar * std::sqrt(kPi) * z);
        }
        case EnvelopeKind::SupremumLower: {
            const double z = need(p.z, "z", K), c = need(p.c, "c", K);
            require(z > -1.0 && c > 0.0, K, "need z > -1 and c > 0");
            const double s = (1.0 + z) * std::exp(-2.0 * z);
            return s / (s + c);
        }
        case EnvelopeKind::BarrierUpper:
        case EnvelopeKind::BarrierLower: {
            const double L = need(p.L, "L", K), x = need(p.x, "x", K), y = need(p.y, "y", K);
            const double a = need(p.a, "a", K), b = need(p.b, "b", K);
            require(L >= 1, K, "need L >= 1");
            require(x >= std::sqrt(2.0) - 1e-12 && y >= std::sqrt(2.0) - 1e-12, K, "need x, y >= sqrt 2");
            require(x <= a && y <= b, K, "need x <= a and y <= b");
            double root = std::sqrt(x / (y * L));
            if (kind == EnvelopeKind::BarrierLower) root = std::min(root, 1.0);
            return (1.0 + a - x) * (1.0 + b - y) / L * root * std::exp(-(x - y) * (x - y) / (2.0 * L));
        }
        case EnvelopeKind::IncrementTail: {
            const double l = need(p.l, "l", K), th = need(p.theta, "theta", K);
            require(l >= 1 && th >= 0.0, K, "need l >= 1 and theta >= 0");
            return std::exp(-th * th / (2.0 * l));
        }
        case EnvelopeKind::OccupationDeviation: {
            const double d = need(p.delta, "delta", K), n = need(p.n, "n", K);
            require(d > 0.0 && d <= 1.0 && n >= 1, K, "need 0 < delta <= 1 and n >= 1");
            return std::exp(-d * d * n);
        }
        case EnvelopeKind::TransportConcentration: {
            const double x = need(p.x, "x", K);
            require(x >= 0.0, K, "need x >= 0");
            return 2.0 * std::exp(-x * x);
        }
    }
    throw RegimeError("bound_envelope: unknown kind");
}

}  // namespace thick

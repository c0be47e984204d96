#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "thickpoints/analytic.hpp"
#include "thickpoints/errors.hpp"

using namespace thick;

namespace {

constexpr double kPi = std::numbers::pi;

// Radial Laplace equation u'' + u'/r = 0 on [u1, u3], u(u1) = 1, u(u3) = 0,
// solved by finite differences (Thomas algorithm).
double radial_fd(double u1, double u2, double u3, int n) {
    const double h = (u3 - u1) / n;
    std::vector<double> a(n + 1), b(n + 1), c(n + 1), d(n + 1), x(n + 1);
    b[0] = 1.0, d[0] = 1.0;
    b[n] = 1.0, d[n] = 0.0;
    for (int i = 1; i < n; ++i) {
        const double r = u1 + i * h;
        a[i] = 1.0 / (h * h) - 1.0 / (2.0 * h * r);
        b[i] = -2.0 / (h * h);
        c[i] = 1.0 / (h * h) + 1.0 / (2.0 * h * r);
    }
    for (int i = 1; i <= n; ++i) {
        const double m = a[i] / b[i - 1];
        b[i] -= m * c[i - 1];
        d[i] -= m * d[i - 1];
    }
    x[n] = d[n] / b[n];
    for (int i = n - 1; i >= 0; --i) x[i] = (d[i] - c[i] * x[i + 1]) / b[i];
    const double pos = (u2 - u1) / h;
    const int i = std::min(n - 1, static_cast<int>(pos));
    return x[i] + (pos - i) * (x[i + 1] - x[i]);
}

// Exact law of the level-l count for the nearest-neighbour chain on levels
// with up/down probabilities from the two-circle law, by dynamic programming
// over (level, count) with absorption at level 0.
std::vector<double> count_law_dp(int k, int l, const RadiiLadder& lad, int nmax) {
    std::vector<std::vector<double>> mass(l + 1, std::vector<double>(nmax + 2, 0.0));
    std::vector<double> absorbed(nmax + 2, 0.0);
    mass[k][0] = 1.0;
    for (int sweep = 0; sweep < 200000; ++sweep) {
        std::vector<std::vector<double>> next(l + 1, std::vector<double>(nmax + 2, 0.0));
        double live = 0.0;
        for (int j = 1; j <= l; ++j)
            for (int c = 0; c <= nmax + 1; ++c) {
                const double m = mass[j][c];
                if (m == 0.0) continue;
                live += m;
                if (j == l) {
                    next[l - 1][c] += m;
                    continue;
                }
                const double pin = std::log(lad.radius(j - 1) / lad.radius(j)) /
                                   std::log(lad.radius(j - 1) / lad.radius(j + 1));
                const int c2 = std::min(nmax + 1, c + (j + 1 == l ? 1 : 0));
                next[j + 1][c2] += pin * m;
                if (j - 1 == 0)
                    absorbed[c] += (1.0 - pin) * m;
                else
                    next[j - 1][c] += (1.0 - pin) * m;
            }
        mass.swap(next);
        if (live < 1e-15) break;
    }
    return absorbed;
}

}  // namespace

TEST_CASE("hitting probability against a finite-difference solve") {
    for (auto [u1, u2, u3] : std::vector<std::array<double, 3>>{{0.05, 0.1, 0.4}, {0.1, 0.3, 0.35}, {0.02, 0.1, 0.3}}) {
        CHECK(hitting_probability(u1, u2, u3) == doctest::Approx(radial_fd(u1, u2, u3, 200000)).epsilon(1e-6));
    }
    CHECK(hitting_probability(0.1, 0.1, 0.3) == 1.0);
    CHECK(hitting_probability(0.1, 0.3, 0.3) == 0.0);
    CHECK_THROWS_AS(hitting_probability(0.3, 0.2, 0.1), RegimeError);
}

TEST_CASE("excursion count tail against the level chain") {
    const RadiiLadder lad = build_ladder(0.5, 10);
    for (auto [k, l] : std::vector<std::pair<int, int>>{{1, 3}, {2, 5}, {3, 8}}) {
        const auto law = count_law_dp(k, l, lad, 40);
        // the closed form is the survival function for n >= 1
        double tail = 1.0 - law[0];
        for (int n = 1; n <= 30; ++n) {
            CHECK(excursion_count_tail(k, l, n) == doctest::Approx(tail).epsilon(1e-9));
            tail -= law[n];
        }
        CHECK(excursion_count_tail(k, l, 0) == doctest::Approx(static_cast<double>(k) / (l - 1)));
    }
    CHECK(excursion_count_tail(4, 5, 0) == 1.0);
    CHECK(excursion_count_tail(2, 5, 10) == doctest::Approx(0.0536870912).epsilon(1e-10));
    CHECK_THROWS_AS(excursion_count_tail(3, 3, 1), RegimeError);
}

TEST_CASE("thickness scales") {
    CHECK(rho(5) == doctest::Approx(2.0 - std::log(5.0) / 5.0));
    CHECK(time_scale(5, 1.0) == doctest::Approx(10.0 * (5.0 - std::log(5.0) + 1.0)));
    CHECK(level_distance(3, 10) == 3.0);
    CHECK(level_distance(8, 10) == 2.0);
    CHECK_THROWS_AS(thickness_scale(0.5), RegimeError);
    CHECK(thickness_scale(0.01) > thickness_scale(0.1));
}

TEST_CASE("linear barrier interpolates its ends") {
    BarrierSpec s;
    s.kind = BarrierKind::Linear;
    s.L = 8;
    s.a = 3.0;
    s.b = 7.0;
    CHECK(barrier_value(s, 0) == doctest::Approx(3.0));
    CHECK(barrier_value(s, 8) == doctest::Approx(7.0));
    CHECK(barrier_value(s, 2) == doctest::Approx(4.0));
}

TEST_CASE("disk Green's function: symmetry, boundary values, harmonicity") {
    const double a = 0.5;
    const PlanePoint x{0.1, 0.05}, y{-0.2, 0.15};
    CHECK(green_disk(a, x, y) == doctest::Approx(green_disk(a, y, x)).epsilon(1e-13));
    const PlanePoint edge{a * (1.0 - 1e-12), 0.0};
    CHECK(std::abs(green_disk(a, edge, y)) < 1e-9);
    const double h = 1e-3;
    const double lap = green_disk(a, {x.x + h, x.y}, y) + green_disk(a, {x.x - h, x.y}, y) +
                       green_disk(a, {x.x, x.y + h}, y) + green_disk(a, {x.x, x.y - h}, y) - 4.0 * green_disk(a, x, y);
    CHECK(std::abs(lap / (h * h)) < 1e-3);
    // singularity -(1/pi) log|x - y|
    const PlanePoint near{x.x + 1e-8, x.y};
    CHECK(green_disk(a, x, near) + std::log(1e-8) / kPi == doctest::Approx(green_disk(a, x, {x.x + 1e-7, x.y}) + std::log(1e-7) / kPi).epsilon(1e-5));
}

TEST_CASE("circle averages") {
    const int n = 1 << 14;
    for (PlanePoint y : {PlanePoint{0.05, 0.0}, PlanePoint{0.3, 0.4}, PlanePoint{-0.01, 0.02}}) {
        const double b = 0.2;
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            const double t = 2.0 * kPi * (i + 0.5) / n;
            s += std::log(std::hypot(b * std::cos(t) - y.x, b * std::sin(t) - y.y));
        }
        CHECK(log_circle_average(b, y) == doctest::Approx(s / n).epsilon(1e-6));
    }
    const RadiiLadder lad = build_ladder(0.5, 4);
    for (double f : {0.0, 0.3, 0.99})
        CHECK(circle_average_green(2, lad, {f * lad.radius(2), 0.0}) == doctest::Approx(1.0 / kPi).epsilon(1e-12));
}

TEST_CASE("occupation moments: mean and second moment by radial reduction") {
    const RadiiLadder lad = build_ladder(0.5, 4);
    const int k = 2;
    const double a = lad.radius(k - 1);
    for (double frac : {1.0, 0.1, 0.01}) {
        const double eps = frac * lad.geodesic(k);
        const double alpha = euclidean_of_geodesic(eps);
        const double omega = cap_area(eps);
        const MomentResult m1 = occupation_moment(1, k, alpha, lad);
        CHECK(m1.normalized_value == doctest::Approx(1.0 / kPi).epsilon(1e-12));

        // E[tau^2] = 2 (1/pi) int_B g(y) int_B G(y, w) g(w) dw dy, and for a
        // radial integrand the inner integral reduces to circle averages.
        auto g = [](double r) { return 1.0 / std::pow(1.0 + 0.25 * r * r, 2); };
        const int n = 4000;
        std::vector<double> gs(n);
        for (int i = 0; i < n; ++i) {
            const double s = (i + 0.5) * alpha / n;
            gs[i] = g(s) * 2.0 * kPi * s * alpha / n;
        }
        double outer = 0.0;
        for (int i = 0; i < n; ++i) {
            const double r = (i + 0.5) * alpha / n;
            double inner = 0.0;
            for (int j = 0; j < n; ++j) {
                const double s = (j + 0.5) * alpha / n;
                inner += std::log(a / std::max(r, s)) / kPi * gs[j];
            }
            outer += inner * gs[i];
        }
        const double second = 2.0 / kPi * outer;
        const MomentResult m2 = occupation_moment(2, k, alpha, lad);
        CHECK(m2.value == doctest::Approx(second).epsilon(1e-5));
        CHECK(m2.normalized_value == doctest::Approx(second / (omega * omega)).epsilon(1e-5));
        CHECK(m2.normalized_envelope == doctest::Approx(2.0 * std::pow(std::log(a / alpha) + 1.0, 2)));
    }
    CHECK_THROWS_AS(occupation_moment(2, k, euclidean_of_geodesic(lad.geodesic(k) / 200.0), lad), RegimeError);
}

TEST_CASE("exit angle law") {
    for (double r : {0.1, 0.5, 0.9}) {
        const int n = 200000;
        double cdf = 0.0, prim = 0.0;
        const double h = 2.0 * kPi / n;
        for (int i = 0; i < n; ++i) {
            const double t = (i + 0.5) * h;
            const double dens = (1.0 - r * r) / (2.0 * kPi * (1.0 - 2.0 * r * std::cos(t) + r * r));
            CHECK(exit_angle_density(r, t) == doctest::Approx(dens).epsilon(1e-12));
            prim += (cdf + 0.5 * dens * h) * h;
            cdf += dens * h;
            if (i % 20000 == 19999) {
                const double tt = (i + 1) * h;
                CHECK(exit_angle_cdf(r, tt) == doctest::Approx(cdf).epsilon(1e-7));
                CHECK(exit_angle_cdf_primitive(r, tt) == doctest::Approx(prim).epsilon(1e-6));
            }
        }
        for (double u : {0.01, 0.3, 0.5, 0.77, 0.999})
            CHECK(exit_angle_cdf(r, exit_angle_quantile(r, u)) == doctest::Approx(u).epsilon(1e-12));
    }
    CHECK_THROWS_AS(exit_angle_cdf(1.0, 0.5), RegimeError);
}

TEST_CASE("envelope shapes") {
    EnvelopeParams p;
    p.z = 1.5;
    CHECK(bound_envelope(EnvelopeKind::SupremumTail, p) == doctest::Approx(1.5 * std::exp(-3.0)));
    p.l = 4;
    p.theta = 2.0;
    CHECK(bound_envelope(EnvelopeKind::IncrementTail, p) == doctest::Approx(std::exp(-0.5)));
    EnvelopeParams b;
    b.L = 16, b.x = 4, b.y = 9, b.a = 5, b.b = 10;
    const double up = 2.0 * 2.0 / 16.0 * std::sqrt(4.0 / (9.0 * 16.0)) * std::exp(-25.0 / 32.0);
    CHECK(bound_envelope(EnvelopeKind::BarrierUpper, b) == doctest::Approx(up));
    EnvelopeParams missing;
    CHECK_THROWS_AS(bound_envelope(EnvelopeKind::SupremumTail, missing), RegimeError);
}

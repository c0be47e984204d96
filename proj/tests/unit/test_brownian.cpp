#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "thickpoints/analytic.hpp"
#include "thickpoints/brownian.hpp"

using namespace thick;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("radial chain: first up-move survival and the mean count") {
    const RadiiLadder lad = build_ladder(0.5, 8);
    Rng rng(derive_seed(20261016, 1));
    const int n = 200000;
    // started one level below the target the count is positive with probability 1 - 1/l
    long pos = 0;
    for (int i = 0; i < n; ++i) pos += radial_excursion_chain(4, lad, 5, rng).at(5) >= 1;
    const double p = 1.0 - 1.0 / 5.0;
    CHECK(std::abs(pos / double(n) - p) < 4.0 * std::sqrt(p * (1 - p) / n));

    // a critical chain: the mean count at any level above the start is the start level
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double t = static_cast<double>(radial_excursion_chain(2, lad, 6, rng).at(6));
        s += t, s2 += t * t;
    }
    const double mean = s / n, sd = std::sqrt(s2 / n - mean * mean);
    CHECK(std::abs(mean - 2.0) < 4.0 * sd / std::sqrt(double(n)));
}

TEST_CASE("radial chain tail matches the closed form") {
    const RadiiLadder lad = build_ladder(0.5, 5);
    Rng rng(derive_seed(20261016, 2));
    const int n = 100000;
    std::vector<long> hist(64, 0);
    for (int i = 0; i < n; ++i) ++hist[std::min<long>(63, radial_excursion_chain(2, lad, 5, rng).at(5))];
    long above = n - hist[0];
    for (int m = 1; m <= 20; ++m) {
        const double p = excursion_count_tail(2, 5, m);
        CHECK(std::abs(above / double(n) - p) < 4.0 * std::sqrt(p * (1 - p) / n) + 1e-12);
        above -= hist[m];
    }
}

TEST_CASE("planar paths stop on the circle and have the right mean exit time") {
    PathConfig cfg;
    cfg.start = {0.1, 0.05};
    cfg.outer_radius = 0.4;
    cfg.policy.dt = 1e-4;
    const double expected = (0.16 - 0.0125) / 2.0;  // E tau = (R^2 - |x|^2) / 2 in the plane
    Rng rng(3);
    double s = 0.0, s2 = 0.0;
    const int n = 3000;
    for (int i = 0; i < n; ++i) {
        const DiscretePath p = simulate_planar_path(cfg, rng);
        REQUIRE(p.size() >= 2);
        CHECK(norm(p.positions.back()) == doctest::Approx(0.4).epsilon(1e-12));
        for (std::size_t j = 1; j < p.size(); ++j) REQUIRE(p.times[j] > p.times[j - 1]);
        s += p.duration(), s2 += p.duration() * p.duration();
    }
    const double mean = s / n, sd = std::sqrt(s2 / n - mean * mean);
    // discrete monitoring overshoots slightly; allow one step on top of 4 sigma
    CHECK(std::abs(mean - expected) < 4.0 * sd / std::sqrt(double(n)) + 1e-4);
}

TEST_CASE("path configuration errors") {
    PathConfig cfg;
    cfg.outer_radius = 0.3;
    cfg.inner_radius = 0.4;
    CHECK_THROWS_AS(validate(cfg), RegimeError);
    cfg.inner_radius = 0.0;
    cfg.policy.max_steps = 3;
    cfg.policy.dt = 1e-9;
    Rng rng(4);
    CHECK_THROWS_AS(simulate_planar_path(cfg, rng), BudgetError);
}

TEST_CASE("exact circle exits follow the Poisson kernel") {
    Rng rng(5);
    const PlanePoint c{0.2, -0.1};
    const double R = 0.3, r = 0.15;
    const PlanePoint start{c.x + r, c.y};
    std::vector<double> u;
    for (int i = 0; i < 20000; ++i) {
        const PlanePoint e = sample_circle_exit(start, c, R, rng);
        CHECK(distance(e, c) == doctest::Approx(R).epsilon(1e-12));
        double t = std::atan2(e.y - c.y, e.x - c.x);
        if (t < 0) t += 2.0 * kPi;
        u.push_back(exit_angle_cdf(r / R, t));
    }
    std::sort(u.begin(), u.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
        ks = std::max({ks, std::abs(u[i] - double(i) / u.size()), std::abs(u[i] - double(i + 1) / u.size())});
    CHECK(ks < 1.95 / std::sqrt(double(u.size())));  // KS at the 0.1% level
    // a start at the center exits uniformly
    const PlanePoint e = sample_circle_exit(c, c, R, rng);
    CHECK(distance(e, c) == doctest::Approx(R));
}

TEST_CASE("occupation time on a hand-made path") {
    DiscretePath p;
    // straight line through the origin at unit speed, segments of length 0.01
    for (int i = 0; i <= 200; ++i) {
        p.positions.push_back({-1.0 + 0.01 * i, 0.0});
        p.times.push_back(0.01 * i);
    }
    // midpoints inside |x| < 0.1: 20 segments of duration 0.01
    CHECK(occupation_time(p, {0.0, 0.0}, 0.1, Normalization::Plane) == doctest::Approx(0.2 / (kPi * 0.01)));
    const double eps = geodesic_of_euclidean(0.1);
    CHECK(occupation_time(p, {0.0, 0.0}, eps, Normalization::Sphere) == doctest::Approx(0.2 / cap_area(eps)));
}

TEST_CASE("time change: monotone clock and the g-weighted sum") {
    PathConfig cfg;
    cfg.outer_radius = 1.5;
    cfg.policy.dt = 1e-4;
    Rng rng(6);
    const DiscretePath w = simulate_planar_path(cfg, rng);
    const SpherePath s = time_change(w);
    REQUIRE(s.path.size() == w.size());
    double t = 0.0;
    for (std::size_t i = 1; i < w.size(); ++i) {
        const PlanePoint m{0.5 * (w.positions[i - 1].x + w.positions[i].x), 0.5 * (w.positions[i - 1].y + w.positions[i].y)};
        t += conformal_factor(m) * (w.times[i] - w.times[i - 1]);
        REQUIRE(s.path.times[i] > s.path.times[i - 1]);
        CHECK(s.clock[i] == w.times[i]);
    }
    CHECK(s.path.times.back() - s.path.times.front() == doctest::Approx(t).epsilon(1e-12));
}

TEST_CASE("per-excursion occupation has mean 1/pi") {
    const RadiiLadder lad = build_ladder(0.5, 3);
    ExcursionOccupationTask task;
    task.start_radius = lad.radius(2);
    task.exit_radius = lad.radius(1);
    task.centers = {{0.0, 0.0}};
    task.eps = {lad.geodesic(2)};
    task.policy.dt = 0.04 * task.start_radius * task.start_radius;
    Rng rng(derive_seed(20261016, 7));
    const int n = 3000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = excursion_occupations(task, 2.0 * kPi * rng.uniform(), rng)[0];
        s += v, s2 += v * v;
    }
    const double mean = s / n, sd = std::sqrt(s2 / n - mean * mean);
    CHECK(std::abs(mean - 1.0 / kPi) < 4.0 * sd / std::sqrt(double(n)));
}

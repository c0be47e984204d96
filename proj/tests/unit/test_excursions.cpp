#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "doctest.h"
#include "thickpoints/analytic.hpp"
#include "thickpoints/excursions.hpp"

using namespace thick;

namespace {

constexpr double kPi = std::numbers::pi;

void walk_to(DiscretePath& p, PlanePoint to, double h = 1e-4) {
    const PlanePoint from = p.positions.back();
    const int n = std::max(1, static_cast<int>(std::ceil(distance(from, to) / h)));
    for (int i = 1; i <= n; ++i) {
        const double s = double(i) / n;
        p.positions.push_back({from.x + s * (to.x - from.x), from.y + s * (to.y - from.y)});
        p.times.push_back(p.times.back() + 1e-6);
    }
}

DiscretePath polyline(std::vector<PlanePoint> pts, double h = 1e-4) {
    DiscretePath p;
    p.positions.push_back(pts.front());
    p.times.push_back(0.0);
    for (std::size_t i = 1; i < pts.size(); ++i) walk_to(p, pts[i], h);
    return p;
}

// minimal cost over all matchings of two equal-size atom lists
double brute_force_w1(std::vector<double> a, const std::vector<double>& b) {
    std::sort(a.begin(), a.end());
    double best = 1e300;
    do {
        double c = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) c += std::abs(a[i] - b[i]);
        best = std::min(best, c);
    } while (std::next_permutation(a.begin(), a.end()));
    return best / a.size();
}

}  // namespace

TEST_CASE("excursion counts on a radial zigzag") {
    const RadiiLadder lad = build_ladder(0.5, 3);
    // radii 0.5, 0.184, 0.068, 0.025
    const DiscretePath p = polyline({{0.6, 0}, {0.1, 0}, {0.6, 0}, {0.05, 0}, {0.3, 0}, {0.05, 0}, {0.6, 0}});
    const ExcursionCounts c = count_excursions(p, {0.0, 0.0}, lad, {CountingRule::UntilExit, 0, 0});
    CHECK(c.at(0) == 0);
    CHECK(c.at(1) == 2);
    CHECK(c.at(2) == 2);
    CHECK(c.at(3) == 0);
    CHECK(c.resolution_violations == 0);

    // only through the first crossing h_1 -> h_0 after the first visit to dB(h_1)
    const ExcursionCounts k = count_excursions(p, {0.0, 0.0}, lad, {CountingRule::KToZero, 1, 0});
    CHECK(k.at(2) == 0);
    const ExcursionCounts m = count_excursions(p, {0.0, 0.0}, lad, {CountingRule::FirstM, 1, 2});
    CHECK(m.at(2) == 2);
}

TEST_CASE("a jump over a whole annulus is a violation") {
    const RadiiLadder lad = build_ladder(0.5, 3);
    DiscretePath p;
    p.positions = {{0.6, 0.0}, {0.01, 0.0}, {0.6, 0.0}};
    p.times = {0.0, 1.0, 2.0};
    CHECK(count_excursions(p, {0.0, 0.0}, lad, {}).resolution_violations > 0);
    CHECK_THROWS_AS(count_excursions(p, {0.0, 0.0}, lad, {}, 0), BudgetError);
}

TEST_CASE("streaming net counts equal center-by-center counts") {
    const RadiiLadder lad = build_ladder(0.5, 3);
    const double r_star = lad.geodesic(0) / 2.0;
    const CoveringNet net = build_net(lad, 3, 0.5, r_star + lad.geodesic(3));
    const double R = euclidean_of_geodesic(r_star);
    PathConfig cfg;
    cfg.outer_radius = R;
    cfg.policy.dt = std::pow(0.15 * lad.geodesic(3), 2);
    Rng rng(derive_seed(20261016, 11));
    long total = 0;
    for (int rep = 0; rep < 8; ++rep) {
        const DiscretePath path = simulate_planar_path(cfg, rng);
        NetCountAccumulator acc(net, lad, 3, R);
        acc.begin(path.positions.front());
        for (std::size_t i = 1; i < path.size(); ++i) acc.vertex(path.positions[i]);
        for (std::size_t i = 0; i < net.size(); ++i) {
            const long brute = count_excursions(path, net.chart[i], lad, {}).at(3);
            REQUIRE(acc.counts()[i] == brute);
            total += brute;
        }
        const NetStatistic st = net_supremum(path, net, lad, NetMode::Counts, 3);
        const long top = *std::max_element(acc.counts().begin(), acc.counts().end());
        CHECK(st.value == doctest::Approx(std::sqrt(2.0 * top)));
    }
    CHECK(total > 0);
}

TEST_CASE("streaming net occupation equals per-center occupation") {
    const RadiiLadder lad = build_ladder(0.5, 3);
    const CoveringNet net = build_net(lad, 3, 1.0, lad.geodesic(1));
    PathConfig cfg;
    cfg.outer_radius = lad.radius(0);
    cfg.policy.dt = 1e-5;
    Rng rng(12);
    const DiscretePath path = simulate_planar_path(cfg, rng);
    const std::vector<double> eps(net.size(), 0.5 * lad.geodesic(3));
    NetOccupationAccumulator acc(net, eps, OccupationClock::Path, cfg.outer_radius);
    for (std::size_t i = 1; i < path.size(); ++i)
        acc.segment(path.positions[i - 1], path.positions[i], path.times[i - 1], path.times[i]);
    const std::vector<double> v = acc.normalized();
    for (std::size_t i = 0; i < net.size(); ++i)
        REQUIRE(v[i] == doctest::Approx(occupation_time(path, net.chart[i], eps[i], Normalization::Sphere)).epsilon(1e-9));
    CHECK_THROWS_AS(net_supremum(path, net, lad, NetMode::Occupation, 3, std::vector<double>(net.size(), 1e-6)),
                    RegimeError);
}

TEST_CASE("angular increments along straight chords") {
    const RadiiLadder lad = build_ladder(0.5, 3);
    const int k = 2;
    const double rk = lad.radius(k), rk1 = lad.radius(k - 1);
    // in at angle 0, out along a chord towards angle phi
    const double phi = 1.0;
    const PlanePoint a{0.5 * rk, 0.0}, b{1.2 * rk1 * std::cos(phi), 1.2 * rk1 * std::sin(phi)};
    const DiscretePath p = polyline({{0.6, 0.0}, a, b}, 1e-5);
    const AngularSample s = angular_increments(p, {0.0, 0.0}, k, lad);
    REQUIRE(s.n() == 1);
    // first arrival at r_k is on the inbound ray (angle 0); exit where a->b crosses r_{k-1}
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double A = dx * dx + dy * dy, B = 2 * (a.x * dx + a.y * dy), C = a.x * a.x + a.y * a.y - rk1 * rk1;
    const double t = (-B + std::sqrt(B * B - 4 * A * C)) / (2 * A);
    const double expected = std::atan2(a.y + t * dy, a.x + t * dx);
    CHECK(s.angles[0] == doctest::Approx(expected).epsilon(1e-4));
}

TEST_CASE("discrete measures") {
    const DiscreteMeasure m({2.0, 1.0, 2.0, 3.0});
    CHECK(m.points().size() == 3);
    CHECK(m.cdf(1.5) == doctest::Approx(0.25));
    CHECK(m.cdf(2.0) == doctest::Approx(0.75));
    CHECK(m.quantile(0.5) == doctest::Approx(2.0));
    CHECK(m.cdf_primitive(3.0) == doctest::Approx(0.25 * 1.0 + 0.75 * 1.0));
    CHECK_THROWS(DiscreteMeasure(std::vector<double>{}));
}

TEST_CASE("W1 between atom lists equals the best matching") {
    std::mt19937_64 gen(13);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int it = 0; it < 300; ++it) {
        const int n = 1 + it % 6;
        std::vector<double> a(n), b(n);
        for (auto& x : a) x = u(gen);
        for (auto& x : b) x = u(gen);
        CHECK(wasserstein1(a, b) == doctest::Approx(brute_force_w1(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("W1 against the exit-angle law by quadrature") {
    const PoissonExitMeasure nu(0.3);
    const DiscreteMeasure d({0.3, 2.0, 2.5, 5.9}, {0.1, 0.4, 0.2, 0.3});
    const int n = 400000;
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        const double t = (i + 0.5) * 2.0 * kPi / n;
        s += std::abs(d.cdf(t) - nu.cdf(t)) * 2.0 * kPi / n;
    }
    CHECK(wasserstein1(d, nu) == doctest::Approx(s).epsilon(1e-6));
    CHECK(nu.cdf(1.0) == doctest::Approx(exit_angle_cdf(0.3, 1.0)));
    const RadiiLadder lad = build_ladder(0.5, 4);
    CHECK(angular_reference(3, lad).rho() == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("transport threshold") {
    CHECK(transport_threshold(2.0, 10, 3, 100) == doctest::Approx(2.0 * std::log(7.0) / 20.0));
}

TEST_CASE("chart grid queries return every point in range") {
    std::mt19937_64 gen(14);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<PlanePoint> pts(3000);
    for (auto& p : pts) p = {u(gen), u(gen)};
    const ChartGrid grid(pts, 0.05);
    for (int it = 0; it < 200; ++it) {
        const PlanePoint q{u(gen), u(gen)};
        const double r = 0.2 * std::abs(u(gen));
        std::vector<char> seen(pts.size(), 0);
        grid.query(q, r, [&](std::size_t i) { seen[i] = 1; });
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (distance(pts[i], q) <= r) REQUIRE(seen[i]);
    }
}

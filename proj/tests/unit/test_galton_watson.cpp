#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "thickpoints/errors.hpp"
#include "thickpoints/galton_watson.hpp"

using namespace thick;

namespace {

// n-fold convolution of the geometric(1/2) law, truncated at m
std::vector<double> convolved(long n, long m) {
    std::vector<double> geo(m + 1), out(m + 1, 0.0);
    for (long j = 0; j <= m; ++j) geo[j] = std::pow(0.5, j + 1);
    out[0] = 1.0;
    for (long i = 0; i < n; ++i) {
        std::vector<double> nx(m + 1, 0.0);
        for (long a = 0; a <= m; ++a)
            for (long b = 0; a + b <= m; ++b) nx[a + b] += out[a] * geo[b];
        out.swap(nx);
    }
    return out;
}

bool inside(double v, double lo, double hi) {
    const double tol = 1e-12 * std::max(1.0, std::abs(v));
    return v >= lo - tol && v <= hi + tol;
}

// Direct forward recursion with full rows from transition_pmf.
double brute_barrier(const GWBarrierProblem& p, long cap) {
    std::vector<double> cur(cap + 1, 0.0), nx(cap + 1);
    cur[p.start_mass] = 1.0;
    for (int l = 1; l <= p.L; ++l) {
        std::fill(nx.begin(), nx.end(), 0.0);
        for (long n = 0; n <= cap; ++n) {
            if (cur[n] == 0.0) continue;
            for (long j = 0; j <= cap; ++j) nx[j] += cur[n] * transition_pmf(n, j);
        }
        for (long j = 0; j <= cap; ++j) {
            const double s = std::sqrt(2.0 * j);
            bool ok;
            if (l == p.L)
                ok = inside(s, p.terminal_lo, p.terminal_hi);
            else if (p.skip.count(l))
                ok = true;
            else
                ok = inside(s, p.lower.empty() ? -kInf : p.lower[l], p.upper[l]);
            if (!ok) nx[j] = 0.0;
        }
        cur.swap(nx);
    }
    return std::accumulate(cur.begin(), cur.end(), 0.0);
}

}  // namespace

TEST_CASE("transition law is the convolved geometric law") {
    for (long n : {1L, 2L, 5L, 10L}) {
        const auto ref = convolved(n, 60);
        for (long j = 0; j <= 60; ++j) CHECK(transition_pmf(n, j) == doctest::Approx(ref[j]).epsilon(1e-12));
    }
    CHECK(transition_pmf(0, 0) == 1.0);
    CHECK(transition_pmf(0, 3) == 0.0);
    // mean n, variance 2n
    const long n = 7;
    double m = 0.0, v = 0.0;
    for (long j = 0; j < 400; ++j) m += j * transition_pmf(n, j);
    for (long j = 0; j < 400; ++j) v += (j - m) * (j - m) * transition_pmf(n, j);
    CHECK(m == doctest::Approx(7.0).epsilon(1e-12));
    CHECK(v == doctest::Approx(14.0).epsilon(1e-10));
}

TEST_CASE("simulated generations follow the transition law") {
    Rng rng(derive_seed(20261016, 21));
    const int n = 200000;
    std::vector<long> hist(200, 0);
    for (int i = 0; i < n; ++i) {
        const GWTrajectory t = simulate_gw(4, 1, rng);
        REQUIRE(t.generations.size() == 2);
        CHECK(t.generations[0] == 4);
        ++hist[std::min<long>(199, t.generations[1])];
    }
    double tv = 0.0;
    for (long j = 0; j < 199; ++j) tv += std::abs(hist[j] / double(n) - transition_pmf(4, j));
    CHECK(0.5 * tv < 0.01);
}

TEST_CASE("generation laws conserve mass and the mean") {
    const GenerationLaws g = generation_laws(20, 10);
    CHECK(g.certificate <= kCertificateTarget);
    for (int l = 0; l <= 10; ++l) {
        double s = 0.0, m = 0.0;
        for (std::size_t t = 0; t < g.pmf[l].size(); ++t) s += g.pmf[l][t], m += t * g.pmf[l][t];
        CHECK(s == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(m == doctest::Approx(20.0).epsilon(1e-8));
    }
    const CertifiedValue a = sqrt_increment_tail(20, 5, 2.0);
    CHECK(a.value == doctest::Approx(sqrt_increment_tail(g, 5, 2.0)).epsilon(1e-12));
    CHECK(sqrt_increment_tail(g, 5, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("state ranges on the sqrt scale") {
    CHECK(max_state_below(4.0) == 8);     // sqrt(16) = 4 is allowed
    CHECK(max_state_below(3.99) == 7);
    CHECK(max_state_below(-1.0) == -1);
    CHECK(min_state_above(4.0) == 8);
    CHECK(min_state_above(4.01) == 9);
    CHECK(min_state_above(-2.0) == 0);
}

TEST_CASE("barrier probabilities against a direct recursion") {
    GWBarrierProblem p;
    p.start_mass = 8;
    p.L = 4;
    p.upper = {kInf, 6.0, 5.5, 6.5, kInf};
    p.lower = {-kInf, 2.0, 1.5, 2.5, -kInf};
    p.terminal_lo = 2.0;
    p.terminal_hi = 5.0;
    const CertifiedValue v = barrier_probability(p);
    CHECK(v.value == doctest::Approx(brute_barrier(p, 60)).epsilon(1e-10));
    CHECK(v.certificate <= kCertificateTarget);

    // dropping a level's constraint can only increase the probability
    GWBarrierProblem q = p;
    q.skip = {2};
    const double skipped = barrier_probability(q).value;
    CHECK(skipped >= v.value);
    CHECK(skipped == doctest::Approx(brute_barrier(q, 60)).epsilon(1e-10));

    GWBarrierProblem bad = p;
    bad.upper.pop_back();
    CHECK_THROWS_AS(validate(bad), RegimeError);
}

TEST_CASE("theorem problem families") {
    BarrierTheoremParams prm;
    prm.L = 16;
    const GWBarrierProblem up = theorem_upper_problem(32, 8.0, 9.0, 7.0, prm);
    CHECK(up.L == 16);
    CHECK(up.upper[8] == doctest::Approx(linear_curve(8.0, 9.0, 8, 16) + std::pow(8.0, 0.25)));
    CHECK(up.terminal_lo == 7.0);
    CHECK(up.terminal_hi == 8.0);
    CHECK(linear_curve(8.0, 9.0, 16, 16) == doctest::Approx(9.0));
    CHECK(distance_to_ends(3, 16) == 3.0);

    GWBarrierProblem tube;
    CHECK(theorem_tube_problem(32, 7.0, 12.0, 11.0, prm, tube));
    CHECK(barrier_probability(tube).value > 0.0);
    // an empty tube: the upper curve sits below the lower one in the middle
    GWBarrierProblem none;
    none.L = -5;
    CHECK_FALSE(theorem_tube_problem(32, 7.0, 8.0, 7.0, prm, none));
    CHECK(none.L == -5);
}

TEST_CASE("envelope fitting") {
    const std::vector<EnvelopePoint> pts{{0.1, 1.0, "a"}, {0.5, 2.0, "b"}, {0.3, 0.5, "c"}};
    const EnvelopeReport up = envelope_check(pts, true);
    CHECK(up.fitted_constant == doctest::Approx(0.6));
    CHECK(up.worst_label == "c");
    const EnvelopeReport lo = envelope_check(pts, false);
    CHECK(lo.fitted_constant == doctest::Approx(0.1));
    CHECK(lo.points == 3);
}

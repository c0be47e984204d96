#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "thickpoints/errors.hpp"
#include "thickpoints/geometry.hpp"
#include "thickpoints/rng.hpp"

namespace thick {

// ---- excursion counts, shared with the excursions module ----

enum class CountingRule {
    UntilExit,  // from the path start until it ends
    KToZero,    // from the first visit to dB(h_k) until the next visit to dB(h_0)
    FirstM      // from the first visit to dB(h_k) through m crossings h_k -> h_{k-1}
};

struct StoppingRule {
    CountingRule rule = CountingRule::UntilExit;
    int k = 0;
    long m = 0;
};

struct ExcursionCounts {
    PlanePoint center;
    // counts[l] = number of completed crossings from dB(h_{l-1}) to dB(h_l); counts[0] = 0.
    std::vector<long> counts;
    std::string engine;  // "radial_chain" or "planar_path"
    StoppingRule rule;
    long resolution_violations = 0;

    long at(int l) const { return counts.at(static_cast<std::size_t>(l)); }
};

// Exact level chain: from level j the next level visited is j+1 or j-1 with
// the two-circle hitting probabilities. Counts are recorded for levels in
// (k_start, target_level]; excursions below target_level are not resolved.
ExcursionCounts radial_excursion_chain(int k_start, const RadiiLadder& ladder, int target_level, Rng& rng);

// ---- discretized planar paths ----

enum class TerminalReason { OuterBoundary, InnerBoundary };

struct DiscretePath {
    std::vector<PlanePoint> positions;
    std::vector<double> times;
    TerminalReason reason = TerminalReason::OuterBoundary;

    std::size_t size() const { return positions.size(); }
    double duration() const { return times.empty() ? 0.0 : times.back() - times.front(); }
};

struct StepPolicy {
    double dt = 1e-3;          // largest step
    double kappa = 0.04;       // dt <= kappa * (distance to a tracked circle)^2
    double dt_floor = 1e-10;   // floor for the stopping circles
    std::size_t max_steps = 200'000'000;
};

// A circle whose neighbourhood is resolved with finer steps, down to floor_dt.
struct TrackedCircle {
    PlanePoint center;
    double radius = 0.0;
    double floor_dt = 1e-10;
};

struct PathConfig {
    PlanePoint start{};
    double outer_radius = 1.0;  // stop on reaching |x| = outer_radius
    double inner_radius = 0.0;  // stop on reaching |x| = inner_radius when positive
    StepPolicy policy;
    std::vector<TrackedCircle> tracked;
    std::uint64_t seed = 0;

    // Domain given as the chart image of the cap B_d(v, r_star).
    static PathConfig for_cap(double r_star);
};

void validate(const PathConfig& cfg);

// Runs one path and reports each step to visit(from, to, t_from, t_to). The
// last step ends exactly on the stopping circle.
template <class Visitor>
TerminalReason run_planar_path(const PathConfig& cfg, Rng& rng, Visitor&& visit) {
    validate(cfg);
    const double R = cfg.outer_radius, r_in = cfg.inner_radius;
    const StepPolicy& pol = cfg.policy;
    PlanePoint p = cfg.start;
    double t = 0.0;
    {
        const double n0 = norm(p);
        if (n0 >= R) return TerminalReason::OuterBoundary;
        if (r_in > 0.0 && n0 <= r_in) return TerminalReason::InnerBoundary;
    }
    for (std::size_t step = 0;; ++step) {
        if (step >= pol.max_steps) throw BudgetError("planar path: step budget exhausted");
        const double np = norm(p);
        double dt = pol.dt;
        const double d_out = R - np;
        dt = std::min(dt, std::max(pol.kappa * d_out * d_out, pol.dt_floor));
        if (r_in > 0.0) {
            const double d_in = np - r_in;
            dt = std::min(dt, std::max(pol.kappa * d_in * d_in, pol.dt_floor));
        }
        for (const TrackedCircle& c : cfg.tracked) {
            const double d = std::abs(distance(p, c.center) - c.radius);
            dt = std::min(dt, std::max(pol.kappa * d * d, c.floor_dt));
        }
        const double sd = std::sqrt(dt);
        const PlanePoint q{p.x + sd * rng.normal(), p.y + sd * rng.normal()};
        const double nq = norm(q);
        if (nq >= R || (r_in > 0.0 && nq <= r_in)) {
            const bool outer = nq >= R;
            const double target = outer ? R : r_in;
            // first s in (0, 1] with |p + s (q - p)| = target
            const double dx = q.x - p.x, dy = q.y - p.y;
            const double A = dx * dx + dy * dy;
            const double B = 2.0 * (p.x * dx + p.y * dy);
            const double C = p.x * p.x + p.y * p.y - target * target;
            const double disc = std::sqrt(std::max(0.0, B * B - 4.0 * A * C));
            double s = outer ? (-B + disc) / (2.0 * A) : (-B - disc) / (2.0 * A);
            s = std::min(1.0, std::max(s, 0.0));
            PlanePoint e{p.x + s * dx, p.y + s * dy};
            const double ne = norm(e);
            if (ne > 0.0) e = {e.x * target / ne, e.y * target / ne};
            double te = t + s * dt;
            if (!(te > t)) te = std::nextafter(t, 1e300);
            visit(p, e, t, te);
            return outer ? TerminalReason::OuterBoundary : TerminalReason::InnerBoundary;
        }
        visit(p, q, t, t + dt);
        p = q;
        t += dt;
    }
}

DiscretePath simulate_planar_path(const PathConfig& cfg, Rng& rng);
DiscretePath simulate_planar_path(const PathConfig& cfg);

// Exit point of the circle dB_e(center, R) for Brownian motion started at start.
PlanePoint sample_circle_exit(PlanePoint start, PlanePoint center, double R, Rng& rng);

// ---- occupation times ----

enum class Normalization { Plane, Sphere };

// Plane: Euclidean ball, path clock, divided by pi eps^2.
// Sphere: geodesic ball around lift(center), path clock taken as sphere time,
// divided by the cap area. Each segment counts when its midpoint is inside.
double occupation_time(const DiscretePath& path, PlanePoint center, double eps, Normalization norm);

// Sphere path obtained from a planar path by the clock dt = g(W) ds.
struct SpherePath {
    DiscretePath path;           // chart positions, sphere times
    std::vector<double> clock;   // plane time at each vertex
};

SpherePath time_change(const DiscretePath& planar);

// Per-excursion sphere occupation of geodesic balls around the pole: the path
// starts on the chart circle of radius start_radius at the given angle and
// stops on the chart circle of radius exit_radius.
struct ExcursionOccupationTask {
    double start_radius = 0.0;
    double exit_radius = 0.0;
    std::vector<PlanePoint> centers;
    std::vector<double> eps;     // geodesic radii, one per center
    double resolution = 0.25;    // near a ball the step std is about sqrt(kappa) * resolution * radius
    StepPolicy policy;
};

// Normalized occupations (divided by the cap area), one per ball.
std::vector<double> excursion_occupations(const ExcursionOccupationTask& task, double start_angle, Rng& rng);

}  // namespace thick

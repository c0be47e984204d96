#include "thickpoints/brownian.hpp"

#include <cmath>
#include <numbers>

#include "thickpoints/analytic.hpp"

namespace thick {

ExcursionCounts radial_excursion_chain(int k_start, const RadiiLadder& ladder, int target_level, Rng& rng) {
    if (k_start < 1 || k_start >= target_level || target_level > ladder.depth)
        throw RegimeError("radial_excursion_chain: need 1 <= k_start < target_level <= depth");
    // probability of moving inward from level j
    std::vector<double> p_in(static_cast<std::size_t>(target_level), 0.0);
    for (int j = 1; j < target_level; ++j)
        p_in[j] = hitting_probability(ladder.radius(j + 1), ladder.radius(j), ladder.radius(j - 1));

    ExcursionCounts out;
    out.counts.assign(static_cast<std::size_t>(target_level) + 1, 0);
    out.engine = "radial_chain";
    out.rule = {CountingRule::KToZero, k_start, 0};

    int j = k_start;
    while (j > 0) {
        if (j == target_level) {
            --j;  // the next circle reached from the innermost level is always the one above
            continue;
        }
        if (rng.uniform() < p_in[j]) {
            ++j;
            if (j > k_start) ++out.counts[j];
        } else {
            --j;
        }
    }
    return out;
}

PathConfig PathConfig::for_cap(double r_star) {
    if (!(r_star > 0.0) || !(r_star < std::numbers::pi)) throw RegimeError("for_cap: need 0 < r_star < pi");
    PathConfig cfg;
    cfg.outer_radius = euclidean_of_geodesic(r_star);
    return cfg;
}

void validate(const PathConfig& cfg) {
    const StepPolicy& p = cfg.policy;
    if (!(p.dt > 0.0) || !(p.kappa > 0.0) || !(p.dt_floor > 0.0) || p.max_steps == 0)
        throw RegimeError("path config: dt, kappa, dt_floor and max_steps must be positive");
    if (!(cfg.outer_radius > 0.0) || !std::isfinite(cfg.outer_radius))
        throw RegimeError("path config: outer radius must be positive and finite");
    if (!(cfg.inner_radius >= 0.0) || !(cfg.inner_radius < cfg.outer_radius))
        throw RegimeError("path config: need 0 <= inner radius < outer radius");
    for (const TrackedCircle& c : cfg.tracked)
        if (!(c.radius > 0.0) || !(c.floor_dt > 0.0))
            throw RegimeError("path config: tracked circles need positive radius and floor");
}

DiscretePath simulate_planar_path(const PathConfig& cfg, Rng& rng) {
    DiscretePath path;
    path.positions.push_back(cfg.start);
    path.times.push_back(0.0);
    path.reason = run_planar_path(cfg, rng, [&](PlanePoint, PlanePoint to, double, double t1) {
        path.positions.push_back(to);
        path.times.push_back(t1);
    });
    return path;
}

DiscretePath simulate_planar_path(const PathConfig& cfg) {
    Rng rng(cfg.seed);
    return simulate_planar_path(cfg, rng);
}

PlanePoint sample_circle_exit(PlanePoint start, PlanePoint center, double R, Rng& rng) {
    if (!(R > 0.0)) throw RegimeError("sample_circle_exit: radius must be positive");
    const double dx = start.x - center.x, dy = start.y - center.y;
    const double r = std::hypot(dx, dy);
    if (!(r < R)) throw RegimeError("sample_circle_exit: start must lie strictly inside the circle");
    // from the center the exit law is uniform
    const double theta = r > 0.0 ? std::atan2(dy, dx) + exit_angle_sample(r / R, rng)
                                 : 2.0 * std::numbers::pi * rng.uniform();
    return {center.x + R * std::cos(theta), center.y + R * std::sin(theta)};
}

double occupation_time(const DiscretePath& path, PlanePoint center, double eps, Normalization nm) {
    if (!(eps > 0.0)) throw RegimeError("occupation_time: eps must be positive");
    double total = 0.0;
    if (nm == Normalization::Plane) {
        const double e2 = eps * eps;
        for (std::size_t i = 1; i < path.size(); ++i) {
            const PlanePoint a = path.positions[i - 1], b = path.positions[i];
            const double mx = 0.5 * (a.x + b.x) - center.x, my = 0.5 * (a.y + b.y) - center.y;
            if (mx * mx + my * my < e2) total += path.times[i] - path.times[i - 1];
        }
        return total / (std::numbers::pi * e2);
    }
    const double chord = chord_of_geodesic(eps);
    for (std::size_t i = 1; i < path.size(); ++i) {
        const PlanePoint a = path.positions[i - 1], b = path.positions[i];
        const PlanePoint m{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
        if (chord_between(m, center) < chord) total += path.times[i] - path.times[i - 1];
    }
    return total / cap_area(eps);
}

SpherePath time_change(const DiscretePath& planar) {
    SpherePath out;
    out.path.reason = planar.reason;
    if (planar.size() == 0) return out;
    out.path.positions = planar.positions;
    out.path.times.resize(planar.size());
    out.clock = planar.times;
    double t = planar.times.front();
    out.path.times[0] = t;
    for (std::size_t i = 0; i < planar.size(); ++i) {
        const PlanePoint p = planar.positions[i];
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw RegimeError("time_change: path passes through the projection pole");
        if (i == 0) continue;
        const PlanePoint a = planar.positions[i - 1];
        const double mx = 0.5 * (a.x + p.x), my = 0.5 * (a.y + p.y);
        t += conformal_factor_sq(mx * mx + my * my) * (planar.times[i] - planar.times[i - 1]);
        out.path.times[i] = t;
    }
    return out;
}

std::vector<double> excursion_occupations(const ExcursionOccupationTask& task, double start_angle, Rng& rng) {
    if (task.centers.size() != task.eps.size()) throw RegimeError("excursion_occupations: centers and eps differ in length");
    if (!(task.start_radius > 0.0) || !(task.start_radius < task.exit_radius))
        throw RegimeError("excursion_occupations: need 0 < start radius < exit radius");
    if (!(task.resolution > 0.0)) throw RegimeError("excursion_occupations: resolution must be positive");

    PathConfig cfg;
    cfg.start = {task.start_radius * std::cos(start_angle), task.start_radius * std::sin(start_angle)};
    cfg.outer_radius = task.exit_radius;
    cfg.policy = task.policy;
    std::vector<ChartDisk> disks;
    std::vector<double> r2;
    for (std::size_t i = 0; i < task.centers.size(); ++i) {
        const ChartDisk d = chart_disk(task.centers[i], task.eps[i]);
        disks.push_back(d);
        r2.push_back(d.radius * d.radius);
        const double f = task.resolution * d.radius;
        cfg.tracked.push_back({d.center, d.radius, task.policy.kappa * f * f});
    }

    std::vector<double> occ(disks.size(), 0.0);
    run_planar_path(cfg, rng, [&](PlanePoint a, PlanePoint b, double t0, double t1) {
        const double mx = 0.5 * (a.x + b.x), my = 0.5 * (a.y + b.y);
        double w = -1.0;
        for (std::size_t i = 0; i < disks.size(); ++i) {
            const double dx = mx - disks[i].center.x, dy = my - disks[i].center.y;
            if (dx * dx + dy * dy < r2[i]) {
                if (w < 0.0) w = conformal_factor_sq(mx * mx + my * my) * (t1 - t0);
                occ[i] += w;
            }
        }
    });
    for (std::size_t i = 0; i < occ.size(); ++i) occ[i] /= cap_area(task.eps[i]);
    return occ;
}

}  // namespace thick

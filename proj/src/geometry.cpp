#include "thickpoints/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "thickpoints/errors.hpp"

namespace thick {

namespace {

constexpr double kPi = std::numbers::pi;

double dot(SpherePoint a, SpherePoint b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

SpherePoint cross(SpherePoint a, SpherePoint b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

double length(SpherePoint a) { return std::sqrt(dot(a, a)); }

// h at an arbitrary (possibly beyond-depth) level.
double level_geodesic(double r0, int k) {
    return 2.0 * std::atan(0.5 * r0 * std::exp(-static_cast<double>(k)));
}

struct CellKey {
    std::int64_t i, j, k;
    bool operator==(const CellKey&) const = default;
};

struct CellHash {
    std::size_t operator()(const CellKey& c) const {
        std::uint64_t h = static_cast<std::uint64_t>(c.i) * 0x9E3779B97F4A7C15ULL;
        h ^= static_cast<std::uint64_t>(c.j) * 0xC2B2AE3D27D4EB4FULL + (h << 6) + (h >> 2);
        h ^= static_cast<std::uint64_t>(c.k) * 0x165667B19E3779F9ULL + (h << 6) + (h >> 2);
        return static_cast<std::size_t>(h);
    }
};

}  // namespace

double norm(PlanePoint p) { return std::hypot(p.x, p.y); }

double distance(PlanePoint a, PlanePoint b) { return std::hypot(a.x - b.x, a.y - b.y); }

SpherePoint lift(PlanePoint p) {
    const double r2 = p.x * p.x + p.y * p.y;
    const double den = 4.0 + r2;
    return {4.0 * p.x / den, 4.0 * p.y / den, (r2 - 4.0) / den};
}

PlanePoint drop(SpherePoint s) {
    const double den = 1.0 - s.z;
    if (!(den > 1e-15)) throw RegimeError("drop: the north pole has no chart image");
    return {2.0 * s.x / den, 2.0 * s.y / den};
}

double geodesic_distance(SpherePoint a, SpherePoint b) {
    return std::atan2(length(cross(a, b)), dot(a, b));
}

double chord_between(PlanePoint a, PlanePoint b) {
    const double na = 4.0 + a.x * a.x + a.y * a.y;
    const double nb = 4.0 + b.x * b.x + b.y * b.y;
    return 4.0 * distance(a, b) / std::sqrt(na * nb);
}

double geodesic_between(PlanePoint a, PlanePoint b) {
    return 2.0 * std::asin(std::min(1.0, 0.5 * chord_between(a, b)));
}

double conformal_factor(PlanePoint p) { return conformal_factor_sq(p.x * p.x + p.y * p.y); }

double geodesic_of_euclidean(double r) {
    if (!(r > 0.0) || !std::isfinite(r)) throw RegimeError("geodesic_of_euclidean: r must be positive");
    return 2.0 * std::atan(0.5 * r);
}

double euclidean_of_geodesic(double d) {
    if (!(d >= 0.0) || !(d < kPi)) throw RegimeError("euclidean_of_geodesic: need 0 <= d < pi");
    return 2.0 * std::tan(0.5 * d);
}

double chord_of_geodesic(double d) { return 2.0 * std::sin(0.5 * std::min(d, kPi)); }

double cap_area(double eps) {
    if (!(eps > 0.0) || eps > kPi) throw RegimeError("cap_area: need 0 < eps <= pi");
    const double s = std::sin(0.5 * eps);
    return 4.0 * kPi * s * s;
}

ChartDisk chart_disk(PlanePoint c, double eps) {
    const double nc = norm(c);
    const double d = 2.0 * std::atan(0.5 * nc);
    if (!(eps > 0.0) || !(d + eps < kPi)) throw RegimeError("chart_disk: ball must avoid the projection pole");
    const PlanePoint u = nc > 0.0 ? PlanePoint{c.x / nc, c.y / nc} : PlanePoint{1.0, 0.0};
    const double far = 2.0 * std::tan(0.5 * (d + eps));
    const double near = 2.0 * std::tan(0.5 * (d - eps));  // negative when the ball contains the pole
    const double mid = 0.5 * (far + near);
    return {{u.x * mid, u.y * mid}, 0.5 * (far - near)};
}

SpherePoint rotate_to_pole(SpherePoint p, SpherePoint center) {
    const SpherePoint axis = cross(center, kSouthPole);
    const double s = length(axis);
    const double c = dot(center, kSouthPole);
    if (s < 1e-300) {
        if (c > 0.0) return p;
        return {p.x, -p.y, -p.z};  // half turn about the x axis
    }
    const SpherePoint k{axis.x / s, axis.y / s, axis.z / s};
    // Rodrigues: p cos + (k x p) sin + k (k.p)(1 - cos)
    const SpherePoint kp = cross(k, p);
    const double kd = dot(k, p) * (1.0 - c);
    return {p.x * c + kp.x * s + k.x * kd, p.y * c + kp.y * s + k.y * kd, p.z * c + kp.z * s + k.z * kd};
}

PlanePoint recenter(PlanePoint p, PlanePoint center) {
    if (center.x == 0.0 && center.y == 0.0) return p;
    return drop(rotate_to_pole(lift(p), lift(center)));
}

double RadiiLadder::radius(int l) const {
    if (l < 0 || l > depth) throw RegimeError("ladder level out of range");
    return r[static_cast<std::size_t>(l)];
}

double RadiiLadder::geodesic(int l) const {
    if (l < 0 || l > depth) throw RegimeError("ladder level out of range");
    return h[static_cast<std::size_t>(l)];
}

RadiiLadder build_ladder(double r0, int depth) {
    if (!(r0 > 0.0) || !(r0 < 1.0)) throw RegimeError("build_ladder: need 0 < r0 < 1");
    if (depth < 1) throw RegimeError("build_ladder: depth must be at least 1");
    RadiiLadder lad;
    lad.r0 = r0;
    lad.depth = depth;
    for (int l = 0; l <= depth; ++l) {
        const double rl = r0 * std::exp(-static_cast<double>(l));
        lad.r.push_back(rl);
        lad.h.push_back(2.0 * std::atan(0.5 * rl));
    }
    // Sweep (r_{l+1}, r_l] for each l, and (0, r_depth] as one more band.
    auto bad = [](double x) {
        const double h = 2.0 * std::atan(0.5 * x);
        const double dh = 1.0 / (1.0 + 0.25 * x * x);
        return !(x - x * x * x <= h && h <= x && std::abs(dh - 1.0) <= x * x);
    };
    constexpr int kSweep = 256;
    for (int l = 0; l <= depth; ++l) {
        const double hi = lad.r[static_cast<std::size_t>(l)];
        const double lo = l < depth ? lad.r[static_cast<std::size_t>(l) + 1] : 0.0;
        for (int i = 0; i < kSweep; ++i) {
            const double x = hi - (hi - lo) * i / kSweep;
            if (bad(x)) {
                std::ostringstream msg;
                msg << "build_ladder: distortion bound fails at level " << l << " (x = " << x << ")";
                throw RegimeError(msg.str());
            }
        }
    }
    return lad;
}

CoveringNet build_net(const RadiiLadder& ladder, int level, double d0, double cap_radius) {
    if (level < 0 || level > ladder.depth) throw RegimeError("build_net: level exceeds ladder depth");
    if (!(d0 > 0.0)) throw RegimeError("build_net: d0 must be positive");
    if (cap_radius <= 0.0) cap_radius = ladder.h[0];
    if (cap_radius > kPi) throw RegimeError("build_net: cap radius exceeds pi");

    CoveringNet net;
    net.level = level;
    net.spacing = d0 * ladder.geodesic(level);
    net.cap_radius = cap_radius;
    const double s = net.spacing;

    std::vector<SpherePoint> candidates;
    if (s >= cap_radius) {
        candidates.push_back(kSouthPole);
    } else {
        // Boundary ring first so the rim stays covered after thinning.
        const double sr = std::sin(cap_radius), cr = std::cos(cap_radius);
        const auto ring = static_cast<std::size_t>(std::ceil(2.0 * kPi * sr / (0.25 * s))) + 1;
        for (std::size_t i = 0; i < ring; ++i) {
            const double a = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(ring);
            candidates.push_back({sr * std::cos(a), sr * std::sin(a), -cr});
        }
        const double area = cap_area(cap_radius);
        const auto n = static_cast<std::size_t>(std::ceil(area * 6.25 / (s * s)));
        const double golden = kPi * (3.0 - std::sqrt(5.0));
        for (std::size_t i = 0; i < n; ++i) {
            const double c = 1.0 - (1.0 - cr) * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
            const double sn = std::sqrt(std::max(0.0, 1.0 - c * c));
            const double a = golden * static_cast<double>(i);
            candidates.push_back({sn * std::cos(a), sn * std::sin(a), -c});
        }
    }

    // Greedy thinning to separation >= s/2 with a 3D cell hash.
    const double sep = chord_of_geodesic(0.5 * s);
    const double cell = sep;
    std::unordered_map<CellKey, std::vector<std::uint32_t>, CellHash> grid;
    auto key_of = [cell](SpherePoint p) {
        return CellKey{static_cast<std::int64_t>(std::floor(p.x / cell)),
                       static_cast<std::int64_t>(std::floor(p.y / cell)),
                       static_cast<std::int64_t>(std::floor(p.z / cell))};
    };
    for (const SpherePoint& p : candidates) {
        const CellKey k = key_of(p);
        bool ok = true;
        for (std::int64_t di = -1; di <= 1 && ok; ++di)
            for (std::int64_t dj = -1; dj <= 1 && ok; ++dj)
                for (std::int64_t dk = -1; dk <= 1 && ok; ++dk) {
                    auto it = grid.find({k.i + di, k.j + dj, k.k + dk});
                    if (it == grid.end()) continue;
                    for (std::uint32_t idx : it->second) {
                        const SpherePoint& q = net.centers[idx];
                        const double dx = p.x - q.x, dy = p.y - q.y, dz = p.z - q.z;
                        if (std::sqrt(dx * dx + dy * dy + dz * dz) < sep) {
                            ok = false;
                            break;
                        }
                    }
                }
        if (!ok) continue;
        grid[k].push_back(static_cast<std::uint32_t>(net.centers.size()));
        net.centers.push_back(p);
    }

    net.chart.reserve(net.centers.size());
    net.pole_index.reserve(net.centers.size());
    for (const SpherePoint& c : net.centers) {
        net.chart.push_back(drop(c));
        net.pole_index.push_back(pole_index(c, ladder));
    }
    return net;
}

int pole_index(SpherePoint y, const RadiiLadder& ladder) {
    const double d = geodesic_distance(kSouthPole, y);
    if (d <= 0.0) return kInfiniteLevel;
    if (d >= ladder.h[0]) return 0;
    // h_k <= d  <=>  r0 e^-k <= 2 tan(d/2)
    int k = static_cast<int>(std::ceil(std::log(ladder.r0 / (2.0 * std::tan(0.5 * d)))));
    k = std::max(k, 0);
    while (k > 0 && level_geodesic(ladder.r0, k - 1) <= d) --k;
    while (level_geodesic(ladder.r0, k) > d) ++k;
    return k;
}

bool interpolation_inclusion(const InclusionQuery& q, const RadiiLadder& ladder) {
    if (q.L < 1 || q.L + 1 > ladder.depth)
        throw RegimeError("interpolation_inclusion: ladder must reach level L+1");
    if (q.a < 0.0 || q.b < 0.0 || q.c1 < 0.0)
        throw RegimeError("interpolation_inclusion: a, b, c1 must be non-negative");
    const double hL = ladder.geodesic(q.L);
    const double hL1 = ladder.geodesic(q.L + 1);
    const double L = static_cast<double>(q.L);
    const double d = geodesic_distance(q.y, q.y_prime);
    if (d > q.a * hL / L) throw RegimeError("interpolation_inclusion: centers too far apart");
    if (std::abs(q.eps_y - q.eps_y_prime) > q.b * hL / L)
        throw RegimeError("interpolation_inclusion: radii too different");
    for (double e : {q.eps_y, q.eps_y_prime})
        if (e < hL / 30.0 || e > 2.0 * hL1)
            throw RegimeError("interpolation_inclusion: radius outside [h_L/30, 2 h_{L+1}]");
    return d + q.eps_y_prime <= (1.0 + q.c1 / L) * q.eps_y;
}

}  // namespace thick

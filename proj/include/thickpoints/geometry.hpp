#pragma once

#include <cstddef>
#include <limits>
#include <vector>

namespace thick {

// Chart coordinates. The chart is stereographic projection from the north
// pole onto the plane tangent at the south pole, so the south pole sits at
// the origin and the metric is g(x)|dx|^2 with g(x) = (1 + |x|^2/4)^-2.
struct PlanePoint {
    double x = 0.0;
    double y = 0.0;
};

// Point on the unit sphere in R^3.
struct SpherePoint {
    double x = 0.0;
    double y = 0.0;
    double z = -1.0;
};

inline constexpr SpherePoint kSouthPole{0.0, 0.0, -1.0};
inline constexpr int kInfiniteLevel = std::numeric_limits<int>::max();

double norm(PlanePoint p);
double distance(PlanePoint a, PlanePoint b);

SpherePoint lift(PlanePoint p);
PlanePoint drop(SpherePoint s);

double geodesic_distance(SpherePoint a, SpherePoint b);
// Chord length |lift(a) - lift(b)| computed in chart coordinates.
double chord_between(PlanePoint a, PlanePoint b);
double geodesic_between(PlanePoint a, PlanePoint b);
// Squared chord between two lifted points; the excursion counters compare this
// against squared thresholds so that every counter agrees bit for bit.
inline double chord_sq(const SpherePoint& a, const SpherePoint& b) {
    const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return dx * dx + dy * dy + dz * dz;
}

double conformal_factor(PlanePoint p);
// Same, as a function of |x|^2.
inline double conformal_factor_sq(double r2) {
    const double q = 1.0 + 0.25 * r2;
    return 1.0 / (q * q);
}

// h(r) = 2 atan(r/2): geodesic distance from the pole of a chart point at radius r.
double geodesic_of_euclidean(double r);
// Inverse of h on [0, pi).
double euclidean_of_geodesic(double d);
// Chord length subtended by a geodesic distance d.
double chord_of_geodesic(double d);
// Area of a spherical cap of geodesic radius eps.
double cap_area(double eps);

// Chart image of the geodesic ball B_d(lift(c), eps); it is a Euclidean disk.
struct ChartDisk {
    PlanePoint center;
    double radius = 0.0;
};
ChartDisk chart_disk(PlanePoint c, double eps);

// Rotation of the sphere carrying `center` to the south pole, followed by the chart.
PlanePoint recenter(PlanePoint p, PlanePoint center);
SpherePoint rotate_to_pole(SpherePoint p, SpherePoint center);

// r_l = r0 e^-l and h_l = h(r_l) for l = 0..depth.
struct RadiiLadder {
    double r0 = 0.0;
    int depth = 0;
    std::vector<double> r;
    std::vector<double> h;

    double radius(int l) const;
    double geodesic(int l) const;
};

RadiiLadder build_ladder(double r0, int depth);

// Centers whose covering radius is <= spacing and whose pairwise separation is
// >= spacing/2, over the cap B_d(v, cap_radius).
struct CoveringNet {
    int level = 0;
    double spacing = 0.0;
    double cap_radius = 0.0;
    std::vector<SpherePoint> centers;
    std::vector<PlanePoint> chart;
    std::vector<int> pole_index;

    std::size_t size() const { return centers.size(); }
};

// Net of spacing d0 h_level over B_d(v, cap_radius); cap_radius <= 0 means h_0.
CoveringNet build_net(const RadiiLadder& ladder, int level, double d0, double cap_radius = -1.0);

// Smallest k with y outside the open ball B_d(v, h_k); kInfiniteLevel at v itself.
int pole_index(SpherePoint y, const RadiiLadder& ladder);

struct InclusionQuery {
    SpherePoint y;
    SpherePoint y_prime;
    double eps_y = 0.0;
    double eps_y_prime = 0.0;
    int L = 1;
    double a = 0.0;
    double b = 0.0;
    double c1 = 0.0;
};

// Whether B_d(y', eps') lies inside B_d(y, (1 + c1/L) eps), decided by the
// triangle criterion d(y, y') + eps' <= (1 + c1/L) eps. Throws RegimeError when
// the closeness preconditions at scale h_L fail.
bool interpolation_inclusion(const InclusionQuery& q, const RadiiLadder& ladder);

}  // namespace thick

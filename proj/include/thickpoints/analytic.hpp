#pragma once

#include <limits>
#include <string>

#include "thickpoints/geometry.hpp"
#include "thickpoints/rng.hpp"

namespace thick {

// Probability that planar Brownian motion started on the circle of radius u2
// reaches radius u1 before radius u3 (u1 <= u2 <= u3, u1 < u3).
double hitting_probability(double u1, double u2, double u3);

// Survival function P[T >= n] of the level-l excursion count for a radial
// chain started at level k and stopped at level 0 (1 <= k <= l-1).
double excursion_count_tail(int k, int l, long n);

// ---- thickness scales ----

inline constexpr double kCStar = 2.8284271247461900976;  // 2 sqrt 2

double rho(int L);
double level_distance(int l, int L);                 // min(l, L - l)
double thickness_scale(double eps);                  // m_eps, eps in (0, 1/e]
double time_scale(int L, double z);                  // t_L(z) = 2L(L - log L + z)
double plane_offset(double z, double c);             // sqrt(2 pi) z + c

// ---- barrier curves on the sqrt(2T) scale ----

enum class BarrierKind { AlphaPlus, AlphaMinus, Beta, Linear, HatBeta, HatGammaMinus };

struct BarrierSpec {
    BarrierKind kind = BarrierKind::Beta;
    int L = 2;
    double z = 0.0;
    double a = 0.0;      // Linear: value at l = 0
    double b = 0.0;      // Linear: value at l = L
    double x_hat = 0.0;  // HatBeta, HatGammaMinus: value at l = 0
};

double barrier_value(const BarrierSpec& spec, int l);

// ---- Green's function of the disk B_e(0, a) ----

double green_disk(double a, PlanePoint x, PlanePoint y);
// Average of log|x - y| over x uniform on the circle of radius b.
double log_circle_average(double b, PlanePoint y);
// Average of G_{r_{k-1}}(., y) over the circle of radius r_k.
double circle_average_green(int k, const RadiiLadder& ladder, PlanePoint y);

struct MomentResult {
    double value = 0.0;            // E[(occupation time)^n], sphere time
    double error_estimate = 0.0;   // difference between two quadrature resolutions
    double envelope = 0.0;         // c^n n! alpha^{2n} (log(r_{k-1}/alpha) + c0)^n
    double normalized_value = 0.0; // value / omega^n
    double normalized_envelope = 0.0;
};

// n-th moment of the sphere occupation time of the geodesic ball of chart
// radius alpha around the pole, for a path started on the chart circle of
// radius r_k and stopped on the circle of radius r_{k-1}.
MomentResult occupation_moment(int n, int k, double alpha, const RadiiLadder& ladder,
                               double c = 1.0, double c0 = 1.0);

// ---- harmonic measure of a circle seen from an interior point ----

double exit_angle_density(double rho, double theta);
// CDF on [0, 2 pi), angle measured from the direction of the start point.
double exit_angle_cdf(double rho, double theta);
double exit_angle_quantile(double rho, double u);
// Integral of the CDF over [0, theta].
double exit_angle_cdf_primitive(double rho, double theta);
double exit_angle_sample(double rho, Rng& rng);

// ---- envelope shapes with the constant set to one ----

enum class EnvelopeKind {
    BallAvoidance,        // k e^{-2L} L e^{-2z}
    LateStart,            // e^{-2(L-k) - 2(a-b) - (a-b)^2 / 2(L-k)} L^{2(L-k)/L}
    RightPeak,            // (1+z) e^{-2L - 2z - z^2/4L}
    RightIntermediate,    // (1+z)(1+p) e^{-2k - 2(z-p) - (z-p)^2/4k}
    RightLate,            // (1+t) m^{1/2} e^{-2(L-k) - 2t - t^2/4(L-k)}
    PoleWindow,           // e^{-2k-2z-2k_L^{1/4}+2j} m^2 (1+z+m+k_L^{1/4})(1+j)
    LeftPeak,             // e^{-2L - 2z - z^2/4L}
    LeftIntermediate,     // (1+p) e^{-2k - 2(z-p) - (z-p)^2/4k}
    LeftLate,             // as RightLate, negative z allowed
    SupremumTail,         // z e^{-2z}
    PlaneSupremumTail,    // z e^{-c* sqrt(pi) z}
    SupremumLower,        // (1+z)e^{-2z} / ((1+z)e^{-2z} + c)
    BarrierUpper,         // (1+a-x)(1+b-y)/L sqrt(x/(yL)) e^{-(x-y)^2/2L}
    BarrierLower,         // same with min(sqrt(x/(yL)), 1)
    IncrementTail,        // e^{-theta^2 / 2l}
    OccupationDeviation,  // e^{-delta^2 n}
    TransportConcentration  // 2 e^{-x^2}
};

std::string to_string(EnvelopeKind kind);
EnvelopeKind envelope_kind_from_string(const std::string& name);

struct EnvelopeParams {
    static constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();
    double L = kUnset;
    double k = kUnset;
    double z = kUnset;
    double p = kUnset;
    double t = kUnset;
    double m = kUnset;
    double j = kUnset;
    double a = kUnset;
    double b = kUnset;
    double x = kUnset;
    double y = kUnset;
    double l = kUnset;
    double theta = kUnset;
    double n = kUnset;
    double delta = kUnset;
    double c = kUnset;
};

// Throws RegimeError when a required parameter is missing or outside the
// regime in which the corresponding bound is claimed.
double bound_envelope(EnvelopeKind kind, const EnvelopeParams& p);

}  // namespace thick

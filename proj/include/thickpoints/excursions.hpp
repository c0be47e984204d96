#pragma once

#include <cstddef>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "thickpoints/brownian.hpp"
#include "thickpoints/geometry.hpp"

namespace thick {

// Counts of completed crossings dB(h_{l-1}) -> dB(h_l) around `center`, one per
// level 0..ladder.depth, with the distance to the center measured on the
// sphere. Throws BudgetError when more segments than violation_budget jump
// across a whole annulus.
ExcursionCounts count_excursions(const DiscretePath& path, PlanePoint center, const RadiiLadder& ladder,
                                 const StoppingRule& rule,
                                 long violation_budget = std::numeric_limits<long>::max());

struct AngularSample {
    int level = 0;
    std::vector<double> angles;  // in [0, 2 pi)
    std::size_t n() const { return angles.size(); }
};

// One angle per passage from dB(y, h_k) to dB(y, h_{k-1}), measured in the chart
// recentered at y: argument at the end minus argument at the start, mod 2 pi.
// The start is the first arrival at dB(y, h_k) after the previous end.
AngularSample angular_increments(const DiscretePath& path, PlanePoint center, int k, const RadiiLadder& ladder);

// ---- measures on the line ----

class Measure {
public:
    virtual ~Measure() = default;
    virtual double cdf(double x) const = 0;
    // Integral of the CDF over [lower(), x].
    virtual double cdf_primitive(double x) const = 0;
    virtual double quantile(double u) const = 0;
    virtual double lower() const = 0;
    virtual double upper() const = 0;
};

// Law of the exit angle, relative to the start direction, for a start at
// relative radius rho inside a circle; supported on [0, 2 pi).
class PoissonExitMeasure final : public Measure {
public:
    explicit PoissonExitMeasure(double rho);
    double cdf(double x) const override;
    double cdf_primitive(double x) const override;
    double quantile(double u) const override;
    double lower() const override { return 0.0; }
    double upper() const override;
    double rho() const { return rho_; }

private:
    double rho_;
};

// Finite atomic measure; weights are normalized on construction.
class DiscreteMeasure final : public Measure {
public:
    DiscreteMeasure(std::vector<double> points, std::vector<double> weights);
    explicit DiscreteMeasure(std::vector<double> points);  // equal weights

    double cdf(double x) const override;
    double cdf_primitive(double x) const override;
    double quantile(double u) const override;
    double lower() const override { return points_.front(); }
    double upper() const override { return points_.back(); }

    const std::vector<double>& points() const { return points_; }
    const std::vector<double>& weights() const { return weights_; }

private:
    std::vector<double> points_;   // sorted, distinct
    std::vector<double> weights_;
    std::vector<double> cum_;      // cum_[i] = weight of points <= points_[i]
};

// The reference law nu_k of the angular increments at level k.
PoissonExitMeasure angular_reference(int k, const RadiiLadder& ladder);

// W1 on the line, computed as the integral of |F - G|.
double wasserstein1(const DiscreteMeasure& a, const DiscreteMeasure& b);
double wasserstein1(const DiscreteMeasure& a, const Measure& reference);
double wasserstein1(const AngularSample& sample, const Measure& reference);
double wasserstein1(const std::vector<double>& a, const std::vector<double>& b);

// c0 log(L - k) / (2 sqrt n), the threshold in the good event for n increments.
double transport_threshold(double c0, int L, int k, long n);
bool transport_event(const AngularSample& sample, const Measure& reference, double c0, int L, int k, long n);

// ---- uniform grid over chart points ----

class ChartGrid {
public:
    ChartGrid(const std::vector<PlanePoint>& points, double cell);

    // Calls f(index) for every stored point within Euclidean distance radius of p
    // (a superset: callers apply their own exact test).
    template <class F>
    void query(PlanePoint p, double radius, F&& f) const {
        const long ix0 = cell_of(p.x - radius - x0_), ix1 = cell_of(p.x + radius - x0_);
        const long iy0 = cell_of(p.y - radius - y0_), iy1 = cell_of(p.y + radius - y0_);
        for (long iy = std::max(iy0, 0L); iy <= std::min(iy1, ny_ - 1); ++iy)
            for (long ix = std::max(ix0, 0L); ix <= std::min(ix1, nx_ - 1); ++ix) {
                const std::size_t c = static_cast<std::size_t>(iy * nx_ + ix);
                for (std::size_t s = start_[c]; s < start_[c + 1]; ++s) f(items_[s]);
            }
    }

private:
    long cell_of(double u) const { return static_cast<long>(std::floor(u / cell_)); }

    double cell_ = 1.0, x0_ = 0.0, y0_ = 0.0;
    long nx_ = 1, ny_ = 1;
    std::vector<std::size_t> start_;
    std::vector<std::size_t> items_;
};

// Streaming level-L excursion counts for every net center along one path.
// Feed the start with begin() and every later vertex with vertex(). Gives the
// same counts as count_excursions run center by center.
class NetCountAccumulator {
public:
    NetCountAccumulator(const CoveringNet& net, const RadiiLadder& ladder, int level, double domain_radius);

    void begin(PlanePoint start);
    void vertex(PlanePoint p);
    const std::vector<long>& counts() const { return counts_; }

private:
    void disarm(std::size_t i, double chord);

    std::vector<SpherePoint> lifted_;
    double chord_in_, chord_out_, in_sq_, out_sq_, inner_query_;
    ChartGrid grid_;
    std::vector<long> counts_;
    std::vector<char> armed_;
    // Disarmed centers keyed by the path length after which they could first
    // be re-armed; the chord moves at most as fast as the chart position.
    std::vector<std::pair<double, std::size_t>> heap_;
    double length_ = 0.0;
    PlanePoint last_{};
};

enum class OccupationClock {
    Path,    // segment durations are already sphere time
    Planar   // planar time, converted with g at the segment midpoint
};

// Streaming normalized sphere occupation of B_d(x, eps_x) for every center.
class NetOccupationAccumulator {
public:
    NetOccupationAccumulator(const CoveringNet& net, std::vector<double> eps, OccupationClock clock,
                             double domain_radius);

    void segment(PlanePoint a, PlanePoint b, double t0, double t1);
    std::vector<double> normalized() const;

private:
    const CoveringNet& net_;
    std::vector<double> eps_, chord_, area_;
    OccupationClock clock_;
    double query_radius_;
    ChartGrid grid_;
    std::vector<double> occ_;
};

enum class NetMode { Counts, Occupation };

struct NetStatistic {
    NetMode mode = NetMode::Counts;
    double value = 0.0;          // sqrt(2 T_{x,L}) or normalized occupation, maximized over centers
    std::size_t argmax = 0;
    std::vector<double> per_center;
};

// Counts mode: level is ladder level L and eps is ignored. Occupation mode: eps
// holds one geodesic radius per center, each in [h_L/100, h_L].
NetStatistic net_supremum(const DiscretePath& path, const CoveringNet& net, const RadiiLadder& ladder, NetMode mode,
                          int level, const std::vector<double>& eps = {});

NetStatistic supremum_of(NetMode mode, std::vector<double> per_center);

}  // namespace thick

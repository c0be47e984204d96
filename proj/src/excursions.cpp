#include "thickpoints/excursions.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>

#include "thickpoints/analytic.hpp"
#include "thickpoints/errors.hpp"

namespace thick {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<double> squared_thresholds(const RadiiLadder& ladder) {
    std::vector<double> c(static_cast<std::size_t>(ladder.depth) + 1);
    for (int l = 0; l <= ladder.depth; ++l) {
        const double t = chord_of_geodesic(ladder.geodesic(l));
        c[l] = t * t;
    }
    return c;
}

// Parameter s in [0, 1] where the segment a -> b meets the circle |x| = r.
double circle_crossing(PlanePoint a, PlanePoint b, double r, bool outward) {
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double A = dx * dx + dy * dy;
    if (A == 0.0) return 0.0;
    const double B = 2.0 * (a.x * dx + a.y * dy);
    const double C = a.x * a.x + a.y * a.y - r * r;
    const double disc = std::sqrt(std::max(0.0, B * B - 4.0 * A * C));
    const double s = outward ? (-B + disc) / (2.0 * A) : (-B - disc) / (2.0 * A);
    return std::clamp(s, 0.0, 1.0);
}

double arg_of(PlanePoint a, PlanePoint b, double s) {
    return std::atan2(a.y + s * (b.y - a.y), a.x + s * (b.x - a.x));
}

double wrap_angle(double t) {
    t = std::fmod(t, kTwoPi);
    if (t < 0.0) t += kTwoPi;
    if (t >= kTwoPi) t = 0.0;
    return t;
}

double chart_extent(const std::vector<PlanePoint>& pts) {
    double r = 0.0;
    for (const PlanePoint& p : pts) r = std::max(r, norm(p));
    return r;
}

}  // namespace

ExcursionCounts count_excursions(const DiscretePath& path, PlanePoint center, const RadiiLadder& ladder,
                                 const StoppingRule& rule, long violation_budget) {
    const int depth = ladder.depth;
    if (rule.rule != CountingRule::UntilExit && (rule.k < 1 || rule.k > depth))
        throw RegimeError("count_excursions: stopping level must lie in [1, depth]");
    if (rule.rule == CountingRule::FirstM && rule.m < 1) throw RegimeError("count_excursions: m must be positive");

    ExcursionCounts out;
    out.center = center;
    out.counts.assign(static_cast<std::size_t>(depth) + 1, 0);
    out.engine = "planar_path";
    out.rule = rule;
    if (path.size() == 0) return out;

    const std::vector<double> c = squared_thresholds(ladder);
    const SpherePoint lc = lift(center);
    std::vector<char> armed(static_cast<std::size_t>(depth) + 1, 0);
    const int lowest = rule.rule == CountingRule::UntilExit ? 1 : rule.k + 1;

    bool active = rule.rule == CountingRule::UntilExit;
    bool up_armed = false;  // FirstM: at dB(h_k) since the last visit to dB(h_{k-1})
    long ups = 0;
    double prev = 0.0;

    for (std::size_t i = 0; i < path.size(); ++i) {
        const double d = chord_sq(lift(path.positions[i]), lc);
        if (i > 0) {
            for (int l = 1; l <= depth; ++l)
                if ((prev > c[l - 1] && d < c[l]) || (prev < c[l] && d > c[l - 1])) {
                    if (++out.resolution_violations > violation_budget)
                        throw BudgetError("count_excursions: resolution violations exceed the budget");
                    break;
                }
        }
        prev = d;

        if (!active) {
            if (d <= c[rule.k]) {
                active = true;
                up_armed = true;
                for (int l = lowest; l <= depth; ++l) armed[l] = l == lowest;
            } else {
                continue;
            }
        } else if (i == 0) {
            for (int l = 1; l <= depth; ++l) armed[l] = d >= c[l - 1];
            continue;
        } else if (rule.rule == CountingRule::KToZero && d >= c[0]) {
            break;
        }

        for (int l = lowest; l <= depth; ++l) {
            if (armed[l] && d <= c[l]) {
                ++out.counts[l];
                armed[l] = 0;
            } else if (!armed[l] && d >= c[l - 1]) {
                armed[l] = 1;
            }
        }
        if (rule.rule == CountingRule::FirstM) {
            if (d <= c[rule.k]) {
                up_armed = true;
            } else if (up_armed && d >= c[rule.k - 1]) {
                up_armed = false;
                if (++ups == rule.m) break;
            }
        }
    }
    return out;
}

AngularSample angular_increments(const DiscretePath& path, PlanePoint center, int k, const RadiiLadder& ladder) {
    if (k < 1 || k > ladder.depth) throw RegimeError("angular_increments: need 1 <= k <= depth");
    AngularSample out;
    out.level = k;
    if (path.size() < 2) return out;
    const double r_in = ladder.radius(k), r_out = ladder.radius(k - 1);

    PlanePoint a = recenter(path.positions[0], center);
    bool need_start = true;
    double start_arg = 0.0;
    if (std::abs(norm(a) - r_in) <= 1e-12 * r_in) {
        start_arg = std::atan2(a.y, a.x);
        need_start = false;
    }
    for (std::size_t i = 1; i < path.size(); ++i) {
        const PlanePoint b = recenter(path.positions[i], center);
        const double ra = norm(a), rb = norm(b);
        if (need_start && ((ra < r_in) != (rb < r_in) || rb == r_in)) {
            start_arg = arg_of(a, b, circle_crossing(a, b, r_in, rb >= r_in));
            need_start = false;
        }
        if (!need_start && rb >= r_out) {
            const double end_arg = arg_of(a, b, circle_crossing(a, b, r_out, true));
            out.angles.push_back(wrap_angle(end_arg - start_arg));
            need_start = true;
        }
        a = b;
    }
    return out;
}

// ---- measures ----

PoissonExitMeasure::PoissonExitMeasure(double rho) : rho_(rho) {
    if (!(rho > 0.0) || !(rho < 1.0)) throw RegimeError("PoissonExitMeasure: need 0 < rho < 1");
}

double PoissonExitMeasure::cdf(double x) const { return exit_angle_cdf(rho_, x); }

double PoissonExitMeasure::cdf_primitive(double x) const {
    if (x <= 0.0) return 0.0;
    if (x >= kTwoPi) return exit_angle_cdf_primitive(rho_, kTwoPi) + (x - kTwoPi);
    return exit_angle_cdf_primitive(rho_, x);
}

double PoissonExitMeasure::quantile(double u) const { return exit_angle_quantile(rho_, u); }

double PoissonExitMeasure::upper() const { return kTwoPi; }

DiscreteMeasure::DiscreteMeasure(std::vector<double> points, std::vector<double> weights) {
    if (points.empty()) throw RegimeError("DiscreteMeasure: empty support");
    if (points.size() != weights.size()) throw RegimeError("DiscreteMeasure: points and weights differ in length");
    std::vector<std::size_t> idx(points.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return points[i] < points[j]; });
    double total = 0.0;
    for (std::size_t i : idx) {
        if (!std::isfinite(points[i])) throw RegimeError("DiscreteMeasure: non-finite atom");
        if (!(weights[i] >= 0.0)) throw RegimeError("DiscreteMeasure: negative weight");
        if (!points_.empty() && points_.back() == points[i]) {
            weights_.back() += weights[i];
        } else {
            points_.push_back(points[i]);
            weights_.push_back(weights[i]);
        }
        total += weights[i];
    }
    if (!(total > 0.0)) throw RegimeError("DiscreteMeasure: total weight must be positive");
    double acc = 0.0;
    for (double& w : weights_) {
        w /= total;
        acc += w;
        cum_.push_back(acc);
    }
    cum_.back() = 1.0;
}

DiscreteMeasure::DiscreteMeasure(std::vector<double> points)
    : DiscreteMeasure(points, std::vector<double>(points.size(), 1.0)) {}

double DiscreteMeasure::cdf(double x) const {
    const auto it = std::upper_bound(points_.begin(), points_.end(), x);
    if (it == points_.begin()) return 0.0;
    return cum_[static_cast<std::size_t>(it - points_.begin()) - 1];
}

double DiscreteMeasure::cdf_primitive(double x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < points_.size() && points_[i] <= x; ++i) s += weights_[i] * (x - points_[i]);
    return s;
}

double DiscreteMeasure::quantile(double u) const {
    if (!(u >= 0.0) || !(u <= 1.0)) throw RegimeError("DiscreteMeasure::quantile: need 0 <= u <= 1");
    const auto it = std::lower_bound(cum_.begin(), cum_.end(), u);
    return points_[std::min(static_cast<std::size_t>(it - cum_.begin()), points_.size() - 1)];
}

PoissonExitMeasure angular_reference(int k, const RadiiLadder& ladder) {
    if (k < 1 || k > ladder.depth) throw RegimeError("angular_reference: need 1 <= k <= depth");
    return PoissonExitMeasure(ladder.radius(k) / ladder.radius(k - 1));
}

double wasserstein1(const DiscreteMeasure& a, const DiscreteMeasure& b) {
    const auto& pa = a.points();
    const auto& pb = b.points();
    std::vector<double> xs;
    xs.reserve(pa.size() + pb.size());
    std::merge(pa.begin(), pa.end(), pb.begin(), pb.end(), std::back_inserter(xs));
    double total = 0.0, fa = 0.0, fb = 0.0;
    std::size_t ia = 0, ib = 0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        const double x = xs[i];
        while (ia < pa.size() && pa[ia] <= x) fa += a.weights()[ia++];
        while (ib < pb.size() && pb[ib] <= x) fb += b.weights()[ib++];
        total += std::abs(fa - fb) * (xs[i + 1] - x);
    }
    return total;
}

double wasserstein1(const DiscreteMeasure& a, const Measure& ref) {
    const double lo = ref.lower(), hi = ref.upper();
    auto P = [&](double x) { return x <= lo ? 0.0 : ref.cdf_primitive(x); };
    auto q = [&](double c) { return ref.quantile(c); };

    std::vector<double> xs{std::min(lo, a.lower())};
    for (double p : a.points()) xs.push_back(p);
    xs.push_back(std::max(hi, a.upper()));
    std::sort(xs.begin(), xs.end());

    double total = 0.0, fa = 0.0;
    std::size_t ia = 0;
    const auto& pa = a.points();
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        const double u = xs[i], v = xs[i + 1];
        while (ia < pa.size() && pa[ia] <= u) fa += a.weights()[ia++];
        if (!(v > u)) continue;
        // the reference CDF is below fa left of w and at least fa right of it
        const double w = std::clamp(q(std::min(fa, 1.0)), u, v);
        const double left = fa * (w - u) - (P(w) - P(u));
        const double right = (P(v) - P(w)) - fa * (v - w);
        total += std::max(left, 0.0) + std::max(right, 0.0);
    }
    return total;
}

double wasserstein1(const AngularSample& sample, const Measure& reference) {
    if (sample.n() == 0) throw RegimeError("wasserstein1: empty sample");
    return wasserstein1(DiscreteMeasure(sample.angles), reference);
}

double wasserstein1(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) throw RegimeError("wasserstein1: empty sample");
    return wasserstein1(DiscreteMeasure(a), DiscreteMeasure(b));
}

double transport_threshold(double c0, int L, int k, long n) {
    if (!(c0 > 0.0) || n < 1 || L - k < 2) throw RegimeError("transport_threshold: need c0 > 0, n >= 1, L - k >= 2");
    return c0 * std::log(static_cast<double>(L - k)) / (2.0 * std::sqrt(static_cast<double>(n)));
}

bool transport_event(const AngularSample& sample, const Measure& reference, double c0, int L, int k, long n) {
    if (n < 1 || sample.n() < static_cast<std::size_t>(n))
        throw RegimeError("transport_event: sample holds fewer than n increments");
    AngularSample head{sample.level, {sample.angles.begin(), sample.angles.begin() + n}};
    return wasserstein1(head, reference) <= transport_threshold(c0, L, k, n);
}

// ---- grid ----

ChartGrid::ChartGrid(const std::vector<PlanePoint>& points, double cell) : cell_(cell) {
    if (!(cell > 0.0)) throw RegimeError("ChartGrid: cell size must be positive");
    double x1 = 0.0, y1 = 0.0;
    if (!points.empty()) {
        x0_ = x1 = points[0].x;
        y0_ = y1 = points[0].y;
    }
    for (const PlanePoint& p : points) {
        x0_ = std::min(x0_, p.x);
        x1 = std::max(x1, p.x);
        y0_ = std::min(y0_, p.y);
        y1 = std::max(y1, p.y);
    }
    // keep the table a manageable size
    const double span = std::max(x1 - x0_, y1 - y0_);
    cell_ = std::max(cell_, span / 4096.0);
    nx_ = cell_of(x1 - x0_) + 1;
    ny_ = cell_of(y1 - y0_) + 1;
    const std::size_t ncell = static_cast<std::size_t>(nx_ * ny_);
    std::vector<std::size_t> cell_index(points.size());
    start_.assign(ncell + 1, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        const long ix = std::min(cell_of(points[i].x - x0_), nx_ - 1);
        const long iy = std::min(cell_of(points[i].y - y0_), ny_ - 1);
        cell_index[i] = static_cast<std::size_t>(iy * nx_ + ix);
        ++start_[cell_index[i] + 1];
    }
    for (std::size_t c = 0; c < ncell; ++c) start_[c + 1] += start_[c];
    items_.resize(points.size());
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < points.size(); ++i) items_[fill[cell_index[i]]++] = i;
}

// ---- net accumulators ----

NetCountAccumulator::NetCountAccumulator(const CoveringNet& net, const RadiiLadder& ladder, int level,
                                         double domain_radius)
    : grid_(net.chart, 1.0) {
    if (level < 1 || level > ladder.depth) throw RegimeError("NetCountAccumulator: need 1 <= level <= depth");
    chord_in_ = chord_of_geodesic(ladder.geodesic(level));
    chord_out_ = chord_of_geodesic(ladder.geodesic(level - 1));
    in_sq_ = chord_in_ * chord_in_;
    out_sq_ = chord_out_ * chord_out_;
    const double R = std::max(domain_radius, chart_extent(net.chart));
    // chord(p, q) >= 4|p - q| / (4 + R^2) when both points lie within radius R
    inner_query_ = chord_in_ * (4.0 + R * R) / 4.0 * (1.0 + 1e-9);
    grid_ = ChartGrid(net.chart, inner_query_);
    lifted_.reserve(net.size());
    for (const PlanePoint& c : net.chart) lifted_.push_back(lift(c));
    counts_.assign(net.size(), 0);
    armed_.assign(net.size(), 0);
}

void NetCountAccumulator::disarm(std::size_t i, double chord) {
    armed_[i] = 0;
    const double slack = std::max(0.0, (chord_out_ - chord) * (1.0 - 1e-9) - 1e-15);
    heap_.emplace_back(length_ + slack, i);
    std::push_heap(heap_.begin(), heap_.end(), std::greater<>());
}

void NetCountAccumulator::begin(PlanePoint start) {
    std::fill(counts_.begin(), counts_.end(), 0);
    heap_.clear();
    length_ = 0.0;
    last_ = start;
    const SpherePoint s = lift(start);
    for (std::size_t i = 0; i < lifted_.size(); ++i) {
        const double d = chord_sq(s, lifted_[i]);
        armed_[i] = d >= out_sq_;
        if (!armed_[i]) disarm(i, std::sqrt(d));
    }
}

void NetCountAccumulator::vertex(PlanePoint p) {
    length_ += distance(p, last_);
    last_ = p;
    const SpherePoint s = lift(p);
    while (!heap_.empty() && heap_.front().first <= length_) {
        std::pop_heap(heap_.begin(), heap_.end(), std::greater<>());
        const std::size_t i = heap_.back().second;
        heap_.pop_back();
        const double d = chord_sq(s, lifted_[i]);
        if (d >= out_sq_) {
            armed_[i] = 1;
        } else {
            disarm(i, std::sqrt(d));
        }
    }
    grid_.query(p, inner_query_, [&](std::size_t i) {
        if (armed_[i] && chord_sq(s, lifted_[i]) <= in_sq_) {
            ++counts_[i];
            disarm(i, std::sqrt(chord_sq(s, lifted_[i])));
        }
    });
}

NetOccupationAccumulator::NetOccupationAccumulator(const CoveringNet& net, std::vector<double> eps,
                                                   OccupationClock clock, double domain_radius)
    : net_(net), eps_(std::move(eps)), clock_(clock), query_radius_(0.0), grid_(net.chart, 1.0) {
    if (eps_.size() != net.size()) throw RegimeError("NetOccupationAccumulator: one radius per center required");
    double cmax = 0.0;
    for (double e : eps_) {
        if (!(e > 0.0)) throw RegimeError("NetOccupationAccumulator: radii must be positive");
        chord_.push_back(chord_of_geodesic(e));
        area_.push_back(cap_area(e));
        cmax = std::max(cmax, chord_.back());
    }
    const double R = std::max(domain_radius, chart_extent(net.chart));
    query_radius_ = cmax * (4.0 + R * R) / 4.0;
    grid_ = ChartGrid(net.chart, std::max(query_radius_, 1e-12));
    occ_.assign(net.size(), 0.0);
}

void NetOccupationAccumulator::segment(PlanePoint a, PlanePoint b, double t0, double t1) {
    const PlanePoint m{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
    const double w = clock_ == OccupationClock::Planar ? conformal_factor(m) * (t1 - t0) : t1 - t0;
    grid_.query(m, query_radius_, [&](std::size_t i) {
        if (chord_between(m, net_.chart[i]) < chord_[i]) occ_[i] += w;
    });
}

std::vector<double> NetOccupationAccumulator::normalized() const {
    std::vector<double> out(occ_.size());
    for (std::size_t i = 0; i < occ_.size(); ++i) out[i] = occ_[i] / area_[i];
    return out;
}

NetStatistic supremum_of(NetMode mode, std::vector<double> per_center) {
    NetStatistic s;
    s.mode = mode;
    if (per_center.empty()) throw RegimeError("net supremum: empty net");
    const auto it = std::max_element(per_center.begin(), per_center.end());
    s.value = *it;
    s.argmax = static_cast<std::size_t>(it - per_center.begin());
    s.per_center = std::move(per_center);
    return s;
}

NetStatistic net_supremum(const DiscretePath& path, const CoveringNet& net, const RadiiLadder& ladder, NetMode mode,
                          int level, const std::vector<double>& eps) {
    if (net.size() == 0) throw RegimeError("net_supremum: empty net");
    const double R = chart_extent(path.positions);
    if (mode == NetMode::Counts) {
        NetCountAccumulator acc(net, ladder, level, R);
        if (path.size() > 0) {
            acc.begin(path.positions[0]);
            for (std::size_t i = 1; i < path.size(); ++i) acc.vertex(path.positions[i]);
        }
        std::vector<double> v(net.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sqrt(2.0 * static_cast<double>(acc.counts()[i]));
        return supremum_of(mode, std::move(v));
    }
    if (level < 0 || level > ladder.depth) throw RegimeError("net_supremum: level outside the ladder");
    const double hL = ladder.geodesic(level);
    for (double e : eps)
        if (!(e >= hL / 100.0 * (1.0 - 1e-12)) || !(e <= hL * (1.0 + 1e-12)))
            throw RegimeError("net_supremum: occupation radii must lie in [h_L/100, h_L]");
    NetOccupationAccumulator acc(net, eps, OccupationClock::Path, R);
    for (std::size_t i = 1; i < path.size(); ++i)
        acc.segment(path.positions[i - 1], path.positions[i], path.times[i - 1], path.times[i]);
    return supremum_of(mode, acc.normalized());
}

}  // namespace thick

#include "thickpoints/galton_watson.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "thickpoints/errors.hpp"

namespace thick {

namespace {

constexpr double kRowCut = 1e-20;
constexpr double kCompareTol = 1e-12;

}  // namespace

double log_transition_pmf(long n, long j) {
    if (n < 0 || j < 0) throw RegimeError("transition_pmf: need n >= 0 and j >= 0");
    if (n == 0) return j == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
    const double nn = static_cast<double>(n), jj = static_cast<double>(j);
    return std::lgamma(nn + jj) - std::lgamma(jj + 1.0) - std::lgamma(nn) - (nn + jj) * std::numbers::ln2;
}

double transition_pmf(long n, long j) { return std::exp(log_transition_pmf(n, j)); }

GWTrajectory simulate_gw(long n0, int steps, Rng& rng) {
    if (n0 < 0 || steps < 0) throw RegimeError("simulate_gw: need n0 >= 0 and steps >= 0");
    GWTrajectory out;
    out.generations.reserve(static_cast<std::size_t>(steps) + 1);
    long t = n0;
    out.generations.push_back(t);
    for (int l = 0; l < steps; ++l) {
        if (t > 0) {
            std::negative_binomial_distribution<long> nb(t, 0.5);
            t = nb(rng.engine());
        }
        out.generations.push_back(t);
    }
    return out;
}

const TransitionTable::Row& TransitionTable::row(long n) {
    if (n < 0) throw RegimeError("TransitionTable: negative parent count");
    while (static_cast<long>(rows_.size()) <= n) {
        const long m = static_cast<long>(rows_.size());
        Row r;
        if (m == 0) {
            r.lo = 0;
            r.p = {1.0};
        } else {
            const long mode = m - 1;
            const double pm = transition_pmf(m, mode);
            const double cut = kRowCut * pm;
            // pmf(j+1)/pmf(j) = (m + j) / (2 (j + 1))
            std::vector<double> left, right{pm};
            double v = pm;
            long j = mode;
            while (j > 0) {
                v *= 2.0 * static_cast<double>(j) / static_cast<double>(m + j - 1);
                --j;
                if (v < cut) {
                    const double ratio = j > 0 ? 2.0 * j / static_cast<double>(m + j - 1) : 0.0;
                    r.lost += v / (1.0 - ratio);
                    break;
                }
                left.push_back(v);
            }
            const long lo = mode - static_cast<long>(left.size());
            v = pm;
            j = mode;
            for (;;) {
                const double ratio = static_cast<double>(m + j) / (2.0 * static_cast<double>(j + 1));
                v *= ratio;
                ++j;
                if (v < cut) {
                    const double next = static_cast<double>(m + j) / (2.0 * static_cast<double>(j + 1));
                    r.lost += v / (1.0 - next);
                    break;
                }
                right.push_back(v);
            }
            r.lo = lo;
            r.p.assign(left.rbegin(), left.rend());
            r.p.insert(r.p.end(), right.begin(), right.end());
        }
        rows_.push_back(std::move(r));
    }
    return rows_[static_cast<std::size_t>(n)];
}

long max_state_below(double b) {
    if (b == kInf) return std::numeric_limits<long>::max();
    if (b < 0.0) return -1;
    const double v = 0.5 * b * b * (1.0 + kCompareTol);
    return v >= 9e18 ? std::numeric_limits<long>::max() : static_cast<long>(std::floor(v));
}

long min_state_above(double a) {
    if (!(a > 0.0)) return 0;
    return static_cast<long>(std::ceil(0.5 * a * a * (1.0 - kCompareTol)));
}

namespace {

// One generation: q[j] = sum_n p[n] K(n, j) for j in [floor, cap]. Mass landing
// above `cap` counts as lost when cap_is_truncation, else it is discarded.
void dp_step(const std::vector<double>& p, long floor_, long cap, bool cap_is_truncation, TransitionTable& table,
             std::vector<double>& q, double& lost) {
    q.assign(cap >= 0 ? static_cast<std::size_t>(cap) + 1 : 0, 0.0);
    for (std::size_t n = 0; n < p.size(); ++n) {
        const double w = p[n];
        if (w == 0.0) continue;
        const TransitionTable::Row& r = table.row(static_cast<long>(n));
        lost += w * r.lost;
        const long hi = r.hi();
        const long j0 = std::max(r.lo, floor_);
        const long j1 = std::min(hi, cap);
        for (long j = j0; j <= j1; ++j) q[static_cast<std::size_t>(j)] += w * r.p[static_cast<std::size_t>(j - r.lo)];
        if (cap_is_truncation && hi > cap) {
            double over = 0.0;
            for (long j = std::max(cap + 1, r.lo); j <= hi; ++j) over += r.p[static_cast<std::size_t>(j - r.lo)];
            lost += w * over;
        }
    }
}

}  // namespace

GenerationLaws generation_laws(long n0, int steps, double target) {
    if (n0 < 0 || steps < 0) throw RegimeError("generation_laws: need n0 >= 0 and steps >= 0");
    TransitionTable table;
    long t_max = std::max<long>(256, 4 * n0 + 64L * steps);
    for (;;) {
        GenerationLaws out;
        out.n0 = n0;
        out.t_max = t_max;
        if (n0 > t_max) throw CertificateError("generation_laws: start exceeds the state budget");
        std::vector<double> p(static_cast<std::size_t>(n0) + 1, 0.0);
        p[static_cast<std::size_t>(n0)] = 1.0;
        out.pmf.push_back(p);
        double lost = 0.0;
        for (int l = 0; l < steps; ++l) {
            std::vector<double> q;
            dp_step(out.pmf.back(), 0, t_max, true, table, q, lost);
            out.pmf.push_back(std::move(q));
        }
        out.certificate = lost;
        if (lost < target) return out;
        if (t_max >= kMaxStates)
            throw CertificateError("generation_laws: truncation mass " + std::to_string(lost) + " above target");
        t_max *= 2;
    }
}

double sqrt_increment_tail(const GenerationLaws& laws, int l, double theta) {
    if (l < 0 || l >= static_cast<int>(laws.pmf.size())) throw RegimeError("sqrt_increment_tail: level outside the table");
    if (!(theta >= 0.0)) throw RegimeError("sqrt_increment_tail: need theta >= 0");
    if (theta == 0.0) return 1.0;
    const double s0 = std::sqrt(2.0 * static_cast<double>(laws.n0));
    const double th = theta * (1.0 - kCompareTol);
    const auto& p = laws.pmf[static_cast<std::size_t>(l)];
    double total = 0.0;
    for (std::size_t t = 0; t < p.size(); ++t)
        if (std::abs(std::sqrt(2.0 * static_cast<double>(t)) - s0) >= th) total += p[t];
    return std::min(1.0, total);
}

CertifiedValue sqrt_increment_tail(long n0, int l, double theta) {
    if (n0 < 1 || l < 1) throw RegimeError("sqrt_increment_tail: need n0 >= 1 and l >= 1");
    if (!(theta >= 0.0)) throw RegimeError("sqrt_increment_tail: need theta >= 0");
    const GenerationLaws laws = generation_laws(n0, l);
    return {sqrt_increment_tail(laws, l, theta), laws.certificate, laws.t_max};
}

void validate(const GWBarrierProblem& p) {
    if (p.start_mass < 0) throw RegimeError("barrier problem: negative start mass");
    if (p.L < 1) throw RegimeError("barrier problem: need L >= 1");
    if (p.upper.size() != static_cast<std::size_t>(p.L) + 1)
        throw RegimeError("barrier problem: upper curve needs L + 1 entries");
    if (!p.lower.empty() && p.lower.size() != static_cast<std::size_t>(p.L) + 1)
        throw RegimeError("barrier problem: lower curve needs L + 1 entries");
    if (!(p.terminal_lo <= p.terminal_hi)) throw RegimeError("barrier problem: empty terminal bin");
    for (int s : p.skip)
        if (s < 1 || s > p.L - 1) throw RegimeError("barrier problem: skip levels must lie in 1..L-1");
}

double TerminalLaw::mass_in(double lo, double hi) const {
    const long t0 = min_state_above(lo);
    const long t1 = std::min<long>(max_state_below(hi), static_cast<long>(pmf.size()) - 1);
    double s = 0.0;
    for (long t = t0; t <= t1; ++t) s += pmf[static_cast<std::size_t>(t)];
    return s;
}

TerminalLaw constrained_terminal_law(const GWBarrierProblem& p, TransitionTable& table) {
    validate(p);
    // every unconstrained level uses the same truncation t_max, doubled until certified
    long t_max = std::max<long>(256, 4 * p.start_mass + 64L * p.L);
    for (;;) {
        bool truncated = false;
        std::vector<double> cur(static_cast<std::size_t>(p.start_mass) + 1, 0.0);
        cur[static_cast<std::size_t>(p.start_mass)] = 1.0;
        double lost = 0.0;
        std::vector<double> next;
        for (int l = 1; l <= p.L; ++l) {
            const bool constrained = l < p.L && !p.skip.count(l);
            long cap, floor_ = 0;
            if (l == p.L) {
                cap = max_state_below(p.terminal_hi);
            } else if (constrained) {
                cap = max_state_below(p.upper[static_cast<std::size_t>(l)]);
                if (!p.lower.empty()) floor_ = min_state_above(p.lower[static_cast<std::size_t>(l)]);
            } else {
                cap = std::numeric_limits<long>::max();
            }
            const bool trunc = cap > t_max;
            if (trunc) {
                cap = t_max;
                truncated = true;
            }
            dp_step(cur, floor_, cap, trunc, table, next, lost);
            cur.swap(next);
        }
        if (lost < kCertificateTarget || !truncated) {
            if (lost >= kCertificateTarget)
                throw CertificateError("barrier DP: kernel truncation mass " + std::to_string(lost) + " above target");
            return {std::move(cur), lost, t_max};
        }
        if (t_max >= kMaxStates)
            throw CertificateError("barrier DP: truncation mass " + std::to_string(lost) + " above target");
        t_max *= 2;
    }
}

CertifiedValue barrier_probability(const GWBarrierProblem& p, TransitionTable& table) {
    const TerminalLaw law = constrained_terminal_law(p, table);
    return {std::min(1.0, law.mass_in(p.terminal_lo, p.terminal_hi)), law.certificate, law.t_max};
}

CertifiedValue barrier_probability(const GWBarrierProblem& p) {
    TransitionTable table;
    return barrier_probability(p, table);
}

double linear_curve(double a, double b, int l, int L) { return a + (b - a) * static_cast<double>(l) / L; }

double distance_to_ends(int l, int L) { return static_cast<double>(std::min(l, L - l)); }

namespace {

void check_theorem_regime(long start_mass, double a, double b, double y, const BarrierTheoremParams& prm) {
    const double x = std::sqrt(2.0 * static_cast<double>(start_mass));
    if (prm.L < 2) throw RegimeError("barrier theorem: need L >= 2");
    if (!(prm.eps > 0.0) || !(prm.eps < 0.5)) throw RegimeError("barrier theorem: need eps in (0, 1/2)");
    if (!(prm.delta > 0.0) || !(prm.C >= 0.0)) throw RegimeError("barrier theorem: need delta > 0 and C >= 0");
    if (x < std::sqrt(2.0) - 1e-12 || y < std::sqrt(2.0) - 1e-12) throw RegimeError("barrier theorem: need x, y >= sqrt 2");
    if (x > a || y > b) throw RegimeError("barrier theorem: need x <= a and y <= b");
}

}  // namespace

GWBarrierProblem theorem_upper_problem(long start_mass, double a, double b, double y, const BarrierTheoremParams& prm) {
    check_theorem_regime(start_mass, a, b, y, prm);
    GWBarrierProblem p;
    p.start_mass = start_mass;
    p.L = prm.L;
    p.upper.assign(static_cast<std::size_t>(prm.L) + 1, kInf);
    for (int l = 1; l < prm.L; ++l)
        p.upper[l] = linear_curve(a, b, l, prm.L) + prm.C * std::pow(distance_to_ends(l, prm.L), 0.5 - prm.eps);
    p.terminal_lo = y;
    p.terminal_hi = y + prm.delta;
    return p;
}

bool theorem_tube_problem(long start_mass, double y, double a, double b, const BarrierTheoremParams& prm,
                          GWBarrierProblem& out) {
    check_theorem_regime(start_mass, a, b, y, prm);
    const double x = std::sqrt(2.0 * static_cast<double>(start_mass));
    GWBarrierProblem p;
    p.start_mass = start_mass;
    p.L = prm.L;
    p.upper.assign(static_cast<std::size_t>(prm.L) + 1, kInf);
    p.lower.assign(static_cast<std::size_t>(prm.L) + 1, -kInf);
    for (int l = 1; l < prm.L; ++l) {
        const double d = distance_to_ends(l, prm.L);
        p.upper[l] = linear_curve(a, b, l, prm.L) - prm.C * std::pow(d, 0.5 - prm.eps);
        p.lower[l] = linear_curve(x, y, l, prm.L) - prm.C_tilde * std::pow(d, 0.5 + prm.eps);
        if (min_state_above(p.lower[l]) > max_state_below(p.upper[l])) return false;
    }
    p.terminal_lo = y;
    p.terminal_hi = y + prm.delta;
    out = std::move(p);
    return true;
}

EnvelopeReport envelope_check(const std::vector<EnvelopePoint>& points, bool upper) {
    EnvelopeReport r;
    r.upper = upper;
    r.max_ratio = -kInf;
    r.min_ratio = kInf;
    for (const EnvelopePoint& e : points) {
        if (!(e.envelope > 0.0) || !std::isfinite(e.envelope))
            throw RegimeError("envelope_check: envelope values must be positive and finite");
        const double ratio = e.dp / e.envelope;
        ++r.points;
        if (ratio > r.max_ratio) {
            r.max_ratio = ratio;
            if (upper) r.worst_label = e.label;
        }
        if (ratio < r.min_ratio) {
            r.min_ratio = ratio;
            if (!upper) r.worst_label = e.label;
        }
    }
    if (r.points == 0) throw RegimeError("envelope_check: no points");
    r.fitted_constant = upper ? r.max_ratio : r.min_ratio;
    return r;
}

}  // namespace thick

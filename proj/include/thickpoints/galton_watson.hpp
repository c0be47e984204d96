#pragma once

#include <cstddef>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "thickpoints/rng.hpp"

namespace thick {

// Offspring law: geometric(1/2) on {0, 1, 2, ...}, so n parents have a
// negative binomial number of children, C(n+j-1, j) 2^-(n+j).
double log_transition_pmf(long n, long j);
double transition_pmf(long n, long j);

struct GWTrajectory {
    std::vector<long> generations;  // T_0 .. T_l
};

GWTrajectory simulate_gw(long n0, int steps, Rng& rng);

// Banded rows of the transition kernel, built lazily. Row n covers the
// children counts whose mass is at least 1e-20 of the mode; the excluded mass
// is bounded and kept in `lost`.
class TransitionTable {
public:
    struct Row {
        long lo = 0;
        std::vector<double> p;
        double lost = 0.0;
        long hi() const { return lo + static_cast<long>(p.size()) - 1; }
    };

    const Row& row(long n);

private:
    std::vector<Row> rows_;
};

inline constexpr double kCertificateTarget = 1e-12;
inline constexpr long kMaxStates = 1L << 22;

// Law of T_l started from n0, for l = 0..steps. `certificate` bounds the total
// mass discarded by truncation, over all generations.
struct GenerationLaws {
    long n0 = 0;
    std::vector<std::vector<double>> pmf;  // pmf[l][t]
    double certificate = 0.0;
    long t_max = 0;
};

GenerationLaws generation_laws(long n0, int steps, double target = kCertificateTarget);

struct CertifiedValue {
    double value = 0.0;
    double certificate = 0.0;
    long t_max = 0;
};

// P(|sqrt(2 T_l) - sqrt(2 T_0)| >= theta) for T_0 = n0.
CertifiedValue sqrt_increment_tail(long n0, int l, double theta);
double sqrt_increment_tail(const GenerationLaws& laws, int l, double theta);

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Constraints on sqrt(2 T_l): lower[l] <= sqrt(2 T_l) <= upper[l] for l = 1..L-1
// outside `skip`, and sqrt(2 T_L) in [terminal_lo, terminal_hi]. Comparisons
// are non-strict up to a relative 1e-12.
struct GWBarrierProblem {
    long start_mass = 0;           // x^2 / 2
    int L = 1;
    std::vector<double> upper;     // size L + 1; +inf for no constraint
    std::vector<double> lower;     // size L + 1; empty or -inf for none
    double terminal_lo = -kInf;
    double terminal_hi = kInf;
    std::set<int> skip;
};

void validate(const GWBarrierProblem& p);

CertifiedValue barrier_probability(const GWBarrierProblem& p);
CertifiedValue barrier_probability(const GWBarrierProblem& p, TransitionTable& table);

// Sub-probability law of T_L on the event that levels 1..L-1 satisfy the
// constraints; terminal_lo is ignored and terminal_hi caps the state space.
struct TerminalLaw {
    std::vector<double> pmf;
    double certificate = 0.0;
    long t_max = 0;

    double mass_in(double lo, double hi) const;  // sqrt(2 T_L) in [lo, hi]
};

TerminalLaw constrained_terminal_law(const GWBarrierProblem& p, TransitionTable& table);

// State index ranges used for the non-strict sqrt-scale comparisons.
long max_state_below(double b);   // largest t with sqrt(2t) <= b, or -1
long min_state_above(double a);   // smallest t >= 0 with sqrt(2t) >= a

// ---- the barrier theorem's problem families ----

double linear_curve(double a, double b, int l, int L);  // f_{a,b}(l; L)
double distance_to_ends(int l, int L);                  // min(l, L - l)

struct BarrierTheoremParams {
    int L = 16;
    double C = 1.0;
    double C_tilde = 1.0;
    double eps = 0.25;
    double delta = 1.0;
};

// Upper-bound event: sqrt(2T_l) <= f_{a,b}(l) + C l_L^{1/2-eps}, sqrt(2T_L) in [y, y+delta].
GWBarrierProblem theorem_upper_problem(long start_mass, double a, double b, double y, const BarrierTheoremParams& prm);

// Tube event of the lower bound. Returns false (and leaves `out` untouched)
// when some level's tube holds no lattice point sqrt(2n).
bool theorem_tube_problem(long start_mass, double y, double a, double b, const BarrierTheoremParams& prm,
                          GWBarrierProblem& out);

// ---- fitted constants ----

struct EnvelopePoint {
    double dp = 0.0;
    double envelope = 0.0;
    std::string label;
};

struct EnvelopeReport {
    bool upper = true;
    std::size_t points = 0;
    double fitted_constant = 0.0;  // upper: max dp/env; lower: min dp/env
    double max_ratio = 0.0;
    double min_ratio = 0.0;
    std::string worst_label;
};

EnvelopeReport envelope_check(const std::vector<EnvelopePoint>& points, bool upper);

}  // namespace thick

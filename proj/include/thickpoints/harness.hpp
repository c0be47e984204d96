#pragma once

#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "thickpoints/errors.hpp"
#include "thickpoints/rng.hpp"

namespace thick {

using Json = nlohmann::json;

// ---- configuration ----

// Parses the TOML subset used by experiment files: tables, dotted keys,
// strings, numbers, booleans and (nested) arrays. Throws FormatError.
Json parse_toml(const std::string& text);

// Reads a .json or .toml file into a JSON tree. Throws FormatError on IO or syntax problems.
Json load_config_file(const std::string& path);

enum class ExperimentKind { OracleCheck, GwEnvelope, Occupation, ThickTail, LeftTail };

std::string to_string(ExperimentKind k);
ExperimentKind experiment_kind_from_string(const std::string& s);

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::ThickTail;

    // ladder and net
    double r0 = 0.5;
    int L = 5;
    double d0 = 0.5;
    int net_level = 0;              // 0 means L
    double subsample = 1.0;         // fraction of net centers kept
    long net_budget = 4'000'000;    // centers kept at most; the fraction shrinks to fit

    // paths
    double r_star = 0.0;            // 0 means h_0 / 2
    double dt = 0.0;                // 0 means (step_scale h_L)^2 or the kind's own default
    double step_scale = 0.15;
    double kappa = 0.04;
    double dt_floor = 1e-10;
    long max_steps = 400'000'000;

    // statistics
    std::vector<double> z_grid{1.0, 1.5, 2.0, 2.5, 3.0};
    long replicas = 2000;
    std::uint64_t seed = 20261016;
    int workers = 1;
    double wilson_threshold = 10.0; // Wilson interval when min(k, n - k) is below this
    std::string prefactor = "linear";  // none | linear | affine, for the tail fit
    std::string output;

    // kind-specific
    std::string mode = "counts";                       // thick-tail: counts | occupation
    std::string centering = "theory";                  // thick-tail: theory | median (of the sample)
    std::vector<std::vector<double>> triples{{0.05, 0.1, 0.4}, {0.1, 0.2, 0.4}, {0.02, 0.1, 0.3},
                                             {0.1, 0.3, 0.35}, {0.05, 0.06, 0.5}};  // oracle
    int occupation_level = 3;                          // occupation: k
    std::vector<double> eps_fractions{1.0, 0.1, 0.01}; // occupation: eps / h_k, thick/left: eps / h_L
    std::string family = "increment_tail";             // gw-envelope: increment_tail | barrier_upper | barrier_lower
    std::vector<int> gw_levels{16, 32, 64};
    long n0_max = 200;
    int l_max = 20;

    Json to_json() const;
    static ExperimentConfig from_json(const Json& j);
    // Applies the keys present in `j` on top of this config.
    void merge(const Json& j);
    // Regime checks for the targeted statements; throws RegimeError.
    void validate() const;
    std::string hash() const;  // SHA-256 of the canonical JSON, hex
};

// Default configuration for one experiment kind.
ExperimentConfig default_config(ExperimentKind kind);

// ---- replicas ----

// Raised when a replica throws; carries the replica's seed for exact replay.
class ReplicaFailure : public std::runtime_error {
public:
    ReplicaFailure(std::size_t index, std::uint64_t seed, std::exception_ptr cause, const std::string& what)
        : std::runtime_error(what), index_(index), seed_(seed), cause_(std::move(cause)) {}
    std::size_t index() const { return index_; }
    std::uint64_t seed() const { return seed_; }
    std::exception_ptr cause() const { return cause_; }

private:
    std::size_t index_;
    std::uint64_t seed_;
    std::exception_ptr cause_;
};

std::string describe(std::exception_ptr e);

// Runs fn(worker, index, rng) for index = 0..count-1 with rng seeded by
// derive_seed(master, index); results come back in index order whatever the
// number of workers.
template <class T, class Fn>
std::vector<T> run_replicas(std::size_t count, std::uint64_t master, int workers, Fn&& fn) {
    std::vector<T> out(count);
    if (count == 0) return out;
    const std::size_t nw = static_cast<std::size_t>(std::max(1, std::min<int>(workers, static_cast<int>(count))));
    std::vector<std::exception_ptr> errors(nw);
    std::vector<std::size_t> failed(nw, count);
    auto body = [&](std::size_t w) {
        for (std::size_t i = w; i < count; i += nw) {
            try {
                Rng rng(derive_seed(master, i));
                out[i] = fn(w, i, rng);
            } catch (...) {
                errors[w] = std::current_exception();
                failed[w] = i;
                return;
            }
        }
    };
    if (nw == 1) {
        body(0);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < nw; ++w) pool.emplace_back(body, w);
        for (auto& t : pool) t.join();
    }
    std::size_t first = count, wf = 0;
    for (std::size_t w = 0; w < nw; ++w)
        if (failed[w] < first) first = failed[w], wf = w;
    if (first < count) {
        const std::uint64_t s = derive_seed(master, first);
        throw ReplicaFailure(first, s, errors[wf],
                             "replica " + std::to_string(first) + " (seed " + std::to_string(s) +
                                 ") failed: " + describe(errors[wf]));
    }
    return out;
}

// ---- summaries ----

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

// Single-pass mean and variance. Integer-valued streams are summed exactly so
// that merging is bitwise order independent; otherwise Welford updates with
// the pairwise merge rule.
class EstimatorSummary {
public:
    void add(double x);
    void merge(const EstimatorSummary& other);

    long n() const { return n_; }
    double mean() const;
    double variance() const;  // unbiased; 0 when n < 2
    double stderr_() const;
    Interval ci95() const;    // mean +- 1.96 stderr

    std::string config_hash;
    std::uint64_t seed = 0;

    Json to_json() const;

private:
    long n_ = 0;
    bool integral_ = true;
    __int128 isum_ = 0;
    __int128 isq_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

Interval wilson_interval(long successes, long n, double z = 1.96);
Interval normal_interval(long successes, long n, double z = 1.96);

struct Proportion {
    long successes = 0;
    long n = 0;
    double estimate = 0.0;
    double stderr_ = 0.0;
    Interval ci;
    bool wilson = false;
};

Proportion estimate_proportion(long successes, long n, double wilson_threshold);

// ---- tail fits ----

enum class Prefactor { None, Linear, Affine };  // 1, z, 1 + z

Prefactor prefactor_from_string(const std::string& s);
std::string to_string(Prefactor p);

struct TailPoint {
    double z = 0.0;
    double p = 0.0;
    double stderr_ = 0.0;
};

struct TailFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    std::size_t points = 0;
};

// Weighted least squares for log p = intercept + slope z + log(prefactor(z)),
// weights (p / stderr)^2; equal weights when any stderr is zero. Points with
// p = 0 are dropped. Throws RegimeError for fewer than three usable points or
// a degenerate grid.
TailFit tail_fit(const std::vector<TailPoint>& points, Prefactor prefactor);

// Ordinary least squares y = a + b x with the slope's standard error.
TailFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

// ---- records and persistence ----

inline constexpr int kSchemaVersion = 1;

struct ResultRecord {
    static constexpr double kNone = std::numeric_limits<double>::quiet_NaN();

    std::string kind;
    std::map<std::string, double> params;
    double estimate = 0.0;
    double stderr_ = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double reference = kNone;        // closed-form or exact value, when there is one
    double envelope = kNone;         // bound shape with constant one
    double fitted_constant = kNone;
    long n = 0;
    std::string timestamp;
    std::uint64_t master_seed = 0;
    std::uint64_t first_replica = 0;
    std::uint64_t replica_count = 0;
    std::string config_hash;

    Json to_json() const;
    static ResultRecord from_json(const Json& j);
    bool operator==(const ResultRecord& o) const;
};

struct RunHeader {
    std::uint64_t seed = 0;
    std::string config_hash;
    std::string kind;
    Json config;
};

struct LoadedRecords {
    std::vector<RunHeader> headers;
    std::vector<ResultRecord> records;
};

// Appends one header line and the records. Throws FormatError on IO failure.
void persist(const std::vector<ResultRecord>& records, const RunHeader& header, const std::string& path);
// Throws FormatError naming the first bad line.
LoadedRecords load_records(const std::string& path);
void export_csv(const std::vector<ResultRecord>& records, const std::string& path);

std::string utc_timestamp();

// ---- experiments ----

struct ExperimentOutput {
    std::vector<ResultRecord> records;
    EstimatorSummary summary;          // the kind's main per-replica statistic
    std::optional<TailFit> fit;        // thick-tail and left-tail
    std::vector<std::string> notes;    // human-readable lines for the report
};

ExperimentOutput run_experiment(const ExperimentConfig& cfg);

// Plain-text report of a record set.
std::string render_report(const LoadedRecords& loaded, Prefactor prefactor);

// Exit code for an exception escaping an experiment: 2 regime, 3 certificate,
// 4 format or IO, 1 otherwise.
int exit_code_for(std::exception_ptr e);

}  // namespace thick

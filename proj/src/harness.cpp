#include "thickpoints/harness.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "thickpoints/analytic.hpp"
#include "thickpoints/geometry.hpp"

namespace thick {

// ---- configuration ----

std::string to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::OracleCheck: return "oracle-check";
        case ExperimentKind::GwEnvelope: return "gw-envelope";
        case ExperimentKind::Occupation: return "occupation";
        case ExperimentKind::ThickTail: return "thick-tail";
        case ExperimentKind::LeftTail: return "left-tail";
    }
    return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& s) {
    for (ExperimentKind k : {ExperimentKind::OracleCheck, ExperimentKind::GwEnvelope, ExperimentKind::Occupation,
                             ExperimentKind::ThickTail, ExperimentKind::LeftTail})
        if (to_string(k) == s) return k;
    throw RegimeError("unknown experiment kind '" + s + "'");
}

Json ExperimentConfig::to_json() const {
    Json j;
    j["kind"] = to_string(kind);
    j["ladder"] = {{"r0", r0}, {"L", L}};
    j["net"] = {{"d0", d0}, {"level", net_level}, {"subsample", subsample}, {"budget", net_budget}};
    j["path"] = {{"r_star", r_star}, {"dt", dt},           {"step_scale", step_scale},
                 {"kappa", kappa},   {"dt_floor", dt_floor}, {"max_steps", max_steps}};
    j["stats"] = {{"z_grid", z_grid},
                  {"replicas", replicas},
                  {"seed", seed},
                  {"workers", workers},
                  {"wilson_threshold", wilson_threshold},
                  {"prefactor", prefactor},
                  {"output", output}};
    j["thick"] = {{"mode", mode}, {"centering", centering}};
    j["oracle"] = {{"triples", triples}};
    j["occupation"] = {{"level", occupation_level}, {"eps_fractions", eps_fractions}};
    j["gw"] = {{"family", family}, {"levels", gw_levels}, {"n0_max", n0_max}, {"l_max", l_max}};
    return j;
}

namespace {

template <class T>
void take(const Json& j, const char* key, T& dst, const std::string& where, std::set<std::string>& seen) {
    if (!j.contains(key)) return;
    seen.insert(key);
    try {
        dst = j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw FormatError("config " + where + "." + key + ": " + e.what());
    }
}

void reject_unknown(const Json& j, const std::set<std::string>& seen, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!seen.count(it.key())) throw FormatError("config: unknown key " + where + it.key());
}

}  // namespace

void ExperimentConfig::merge(const Json& j) {
    if (!j.is_object()) throw FormatError("config: top level must be a table");
    std::set<std::string> top;
    if (j.contains("kind")) {
        top.insert("kind");
        if (!j["kind"].is_string()) throw FormatError("config: kind must be a string");
        kind = experiment_kind_from_string(j["kind"].get<std::string>());
    }
    auto section = [&](const char* name, auto&& fill) {
        if (!j.contains(name)) return;
        top.insert(name);
        const Json& s = j.at(name);
        if (!s.is_object()) throw FormatError(std::string("config: ") + name + " must be a table");
        std::set<std::string> seen;
        fill(s, seen);
        reject_unknown(s, seen, std::string(name) + ".");
    };
    section("ladder", [&](const Json& s, auto& seen) {
        take(s, "r0", r0, "ladder", seen);
        take(s, "L", L, "ladder", seen);
    });
    section("net", [&](const Json& s, auto& seen) {
        take(s, "d0", d0, "net", seen);
        take(s, "level", net_level, "net", seen);
        take(s, "subsample", subsample, "net", seen);
        take(s, "budget", net_budget, "net", seen);
    });
    section("path", [&](const Json& s, auto& seen) {
        take(s, "r_star", r_star, "path", seen);
        take(s, "dt", dt, "path", seen);
        take(s, "step_scale", step_scale, "path", seen);
        take(s, "kappa", kappa, "path", seen);
        take(s, "dt_floor", dt_floor, "path", seen);
        take(s, "max_steps", max_steps, "path", seen);
    });
    section("stats", [&](const Json& s, auto& seen) {
        take(s, "z_grid", z_grid, "stats", seen);
        take(s, "replicas", replicas, "stats", seen);
        take(s, "seed", seed, "stats", seen);
        take(s, "workers", workers, "stats", seen);
        take(s, "wilson_threshold", wilson_threshold, "stats", seen);
        take(s, "prefactor", prefactor, "stats", seen);
        take(s, "output", output, "stats", seen);
    });
    section("thick", [&](const Json& s, auto& seen) {
        take(s, "mode", mode, "thick", seen);
        take(s, "centering", centering, "thick", seen);
    });
    section("oracle", [&](const Json& s, auto& seen) { take(s, "triples", triples, "oracle", seen); });
    section("occupation", [&](const Json& s, auto& seen) {
        take(s, "level", occupation_level, "occupation", seen);
        take(s, "eps_fractions", eps_fractions, "occupation", seen);
    });
    section("gw", [&](const Json& s, auto& seen) {
        take(s, "family", family, "gw", seen);
        take(s, "levels", gw_levels, "gw", seen);
        take(s, "n0_max", n0_max, "gw", seen);
        take(s, "l_max", l_max, "gw", seen);
    });
    reject_unknown(j, top, "");
}

ExperimentConfig ExperimentConfig::from_json(const Json& j) {
    ExperimentConfig c;
    if (j.contains("kind") && j["kind"].is_string()) c = default_config(experiment_kind_from_string(j["kind"].get<std::string>()));
    c.merge(j);
    return c;
}

ExperimentConfig default_config(ExperimentKind kind) {
    ExperimentConfig c;
    c.kind = kind;
    switch (kind) {
        case ExperimentKind::OracleCheck:
            c.replicas = 100000;
            break;
        case ExperimentKind::GwEnvelope:
            c.replicas = 0;
            break;
        case ExperimentKind::Occupation:
            c.replicas = 10000;
            break;
        case ExperimentKind::ThickTail:
            break;
        case ExperimentKind::LeftTail:
            c.z_grid = {0.0, 0.4, 0.8, 1.2, 1.6};
            c.eps_fractions = {1.0};
            c.replicas = 1000;
            break;
    }
    return c;
}

void ExperimentConfig::validate() const {
    auto need = [](bool ok, const std::string& msg) {
        if (!ok) throw RegimeError("config: " + msg);
    };
    need(r0 > 0.0 && r0 < 2.0, "ladder.r0 must lie in (0, 2)");
    need(L >= 1 && L <= 60, "ladder.L must lie in [1, 60]");
    need(d0 > 0.0 && d0 <= 1.0, "net.d0 must lie in (0, 1]");
    need(net_level >= 0 && net_level <= L, "net.level must lie in [0, L]");
    need(subsample > 0.0 && subsample <= 1.0, "net.subsample must lie in (0, 1]");
    need(net_budget >= 1, "net.budget must be positive");
    need(r_star >= 0.0 && r_star < 3.14159, "path.r_star must lie in [0, pi)");
    need(dt >= 0.0 && step_scale > 0.0 && kappa > 0.0 && dt_floor > 0.0 && max_steps > 0,
         "path step parameters must be positive");
    need(replicas >= 0, "stats.replicas must be non-negative");
    need(workers >= 1, "stats.workers must be positive");
    need(wilson_threshold >= 0.0, "stats.wilson_threshold must be non-negative");
    prefactor_from_string(prefactor);
    const double hL = build_ladder(r0, L).geodesic(L);
    const double h0 = geodesic_of_euclidean(r0);

    switch (kind) {
        case ExperimentKind::OracleCheck:
            need(!triples.empty(), "oracle.triples must not be empty");
            for (const auto& t : triples)
                need(t.size() == 3 && t[0] > 0.0 && t[0] < t[1] && t[1] < t[2] && t[2] < 10.0,
                     "oracle triples need 0 < u1 < u2 < u3 < 10");
            break;
        case ExperimentKind::GwEnvelope:
            need(family == "increment_tail" || family == "barrier_upper" || family == "barrier_lower",
                 "gw.family must be increment_tail, barrier_upper or barrier_lower");
            need(n0_max >= 2 && l_max >= 1, "gw.n0_max >= 2 and gw.l_max >= 1 required");
            for (int l : gw_levels) need(l >= 4 && l <= 512, "gw.levels must lie in [4, 512]");
            break;
        case ExperimentKind::Occupation:
            need(occupation_level >= 1 && occupation_level <= L, "occupation.level must lie in [1, L]");
            need(!eps_fractions.empty(), "occupation.eps_fractions must not be empty");
            for (double f : eps_fractions)
                need(f >= 0.01 && f <= 1.0, "occupation radii must lie in [h_k/100, h_k]");
            break;
        case ExperimentKind::ThickTail:
        case ExperimentKind::LeftTail: {
            need(mode == "counts" || mode == "occupation", "thick.mode must be counts or occupation");
            need(centering == "theory" || centering == "median", "thick.centering must be theory or median");
            need(L >= 2, "ladder.L must be at least 2");
            const double rs = r_star > 0.0 ? r_star : h0 / 2.0;
            if (kind == ExperimentKind::ThickTail && mode == "counts")
                need(2.0 * rs <= h0 * (1.0 + 1e-12), "excursion counts need 2 r_star <= h_0");
            need(!z_grid.empty(), "stats.z_grid must not be empty");
            for (double f : eps_fractions)
                need(f >= 0.01 && f <= 1.0, "occupation radii must lie in [h_L/100, h_L]");
            need(hL > 0.0, "ladder too deep");
            if (kind == ExperimentKind::LeftTail) {
                for (double z : z_grid)
                    need(z >= 0.0 && z <= std::log(static_cast<double>(L)), "left-tail z must lie in [0, log L]");
            } else {
                for (double z : z_grid) need(z > 0.0, "thick-tail z must be positive");
            }
            break;
        }
    }
}

std::string ExperimentConfig::hash() const {
    Json j = to_json();
    // neither affects any result
    j["stats"].erase("workers");
    j["stats"].erase("output");
    const std::string text = j.dump();
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("config hash: digest failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return os.str();
}

// ---- replicas ----

std::string describe(std::exception_ptr e) {
    try {
        if (e) std::rethrow_exception(e);
    } catch (const std::exception& x) {
        return x.what();
    } catch (...) {
        return "unknown exception";
    }
    return "no exception";
}

// ---- summaries ----

namespace {
constexpr double kIntegralLimit = 2147483648.0;  // 2^31
}

void EstimatorSummary::add(double x) {
    if (integral_ && std::abs(x) <= kIntegralLimit && x == std::floor(x) && n_ < (1L << 30)) {
        const long long v = static_cast<long long>(x);
        ++n_;
        isum_ += v;
        isq_ += static_cast<__int128>(v) * v;
        return;
    }
    if (integral_) {
        mean_ = mean();
        m2_ = variance() * static_cast<double>(std::max<long>(n_ - 1, 0));
        integral_ = false;
    }
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
}

void EstimatorSummary::merge(const EstimatorSummary& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) {
        const std::string h = config_hash;
        const std::uint64_t s = seed;
        *this = o;
        if (!h.empty()) config_hash = h;
        if (s) seed = s;
        return;
    }
    if (integral_ && o.integral_ && n_ + o.n_ < (1L << 30)) {
        n_ += o.n_;
        isum_ += o.isum_;
        isq_ += o.isq_;
        return;
    }
    const double ma = mean(), mb = o.mean();
    const double m2a = variance() * static_cast<double>(n_ - 1), m2b = o.variance() * static_cast<double>(o.n_ - 1);
    const double na = static_cast<double>(n_), nb = static_cast<double>(o.n_), n = na + nb;
    const double d = mb - ma;
    mean_ = ma + d * nb / n;
    m2_ = m2a + m2b + d * d * na * nb / n;
    n_ += o.n_;
    integral_ = false;
}

double EstimatorSummary::mean() const {
    if (n_ == 0) return 0.0;
    if (integral_) return static_cast<double>(isum_) / static_cast<double>(n_);
    return mean_;
}

double EstimatorSummary::variance() const {
    if (n_ < 2) return 0.0;
    if (integral_) {
        const __int128 num = static_cast<__int128>(n_) * isq_ - isum_ * isum_;
        return static_cast<double>(num) / (static_cast<double>(n_) * static_cast<double>(n_ - 1));
    }
    return m2_ / static_cast<double>(n_ - 1);
}

double EstimatorSummary::stderr_() const { return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }

Interval EstimatorSummary::ci95() const {
    const double h = 1.96 * stderr_();
    return {mean() - h, mean() + h};
}

Json EstimatorSummary::to_json() const {
    const Interval ci = ci95();
    return {{"n", n_},          {"mean", mean()},    {"variance", variance()}, {"stderr", stderr_()},
            {"ci_lo", ci.lo},   {"ci_hi", ci.hi},    {"config_hash", config_hash}, {"seed", seed}};
}

Interval wilson_interval(long k, long n, double z) {
    if (n <= 0) return {0.0, 1.0};
    if (k < 0 || k > n) throw RegimeError("wilson_interval: need 0 <= k <= n");
    const double nn = static_cast<double>(n), p = static_cast<double>(k) / nn, z2 = z * z;
    const double den = 1.0 + z2 / nn;
    const double center = (p + z2 / (2.0 * nn)) / den;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / den;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

Interval normal_interval(long k, long n, double z) {
    if (n <= 0) return {0.0, 1.0};
    if (k < 0 || k > n) throw RegimeError("normal_interval: need 0 <= k <= n");
    const double p = static_cast<double>(k) / n;
    const double h = z * std::sqrt(p * (1.0 - p) / n);
    return {std::max(0.0, p - h), std::min(1.0, p + h)};
}

Proportion estimate_proportion(long k, long n, double threshold) {
    Proportion out;
    out.successes = k;
    out.n = n;
    if (n <= 0) {
        out.ci = {0.0, 1.0};
        out.wilson = true;
        return out;
    }
    out.estimate = static_cast<double>(k) / n;
    out.stderr_ = std::sqrt(out.estimate * (1.0 - out.estimate) / n);
    out.wilson = static_cast<double>(std::min(k, n - k)) < threshold;
    out.ci = out.wilson ? wilson_interval(k, n) : normal_interval(k, n);
    return out;
}

// ---- fits ----

Prefactor prefactor_from_string(const std::string& s) {
    if (s == "none") return Prefactor::None;
    if (s == "linear") return Prefactor::Linear;
    if (s == "affine") return Prefactor::Affine;
    throw RegimeError("prefactor must be none, linear or affine");
}

std::string to_string(Prefactor p) {
    switch (p) {
        case Prefactor::None: return "none";
        case Prefactor::Linear: return "linear";
        case Prefactor::Affine: return "affine";
    }
    return "none";
}

namespace {

TailFit weighted_fit(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& w,
                     bool inverse_variance) {
    const std::size_t n = x.size();
    double sw = 0.0, sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) sw += w[i], sx += w[i] * x[i], sy += w[i] * y[i];
    const double mx = sx / sw, my = sy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += w[i] * (x[i] - mx) * (x[i] - mx);
        sxy += w[i] * (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw RegimeError("fit: degenerate grid");
    TailFit f;
    f.points = n;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    if (inverse_variance) {
        f.slope_stderr = std::sqrt(1.0 / sxx);
    } else if (n > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = y[i] - f.intercept - f.slope * x[i];
            rss += w[i] * r * r;
        }
        f.slope_stderr = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
    }
    return f;
}

}  // namespace

TailFit tail_fit(const std::vector<TailPoint>& points, Prefactor pre) {
    std::vector<double> x, y, w;
    bool exact = false;
    for (const TailPoint& p : points) {
        if (!(p.p > 0.0)) continue;
        double f = 1.0;
        if (pre == Prefactor::Linear) f = p.z;
        if (pre == Prefactor::Affine) f = 1.0 + p.z;
        if (!(f > 0.0)) throw RegimeError("tail_fit: prefactor must be positive on the grid");
        x.push_back(p.z);
        y.push_back(std::log(p.p) - std::log(f));
        if (!(p.stderr_ > 0.0)) exact = true;
        w.push_back(p.stderr_ > 0.0 ? (p.p / p.stderr_) * (p.p / p.stderr_) : 1.0);
    }
    if (x.size() < 3) throw RegimeError("tail_fit: need at least three points with positive probability");
    if (exact) std::fill(w.begin(), w.end(), 1.0);
    return weighted_fit(x, y, w, !exact);
}

TailFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw RegimeError("linear_fit: need matching inputs of size >= 2");
    return weighted_fit(x, y, std::vector<double>(x.size(), 1.0), false);
}

// ---- records ----

namespace {

Json num_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double num_from(const Json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return ResultRecord::kNone;
    return j.at(key).get<double>();
}

bool same(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

}  // namespace

Json ResultRecord::to_json() const {
    Json p = Json::object();
    for (const auto& [k, v] : params) p[k] = num_or_null(v);
    return {{"type", "record"},
            {"kind", kind},
            {"params", p},
            {"estimate", num_or_null(estimate)},
            {"stderr", num_or_null(stderr_)},
            {"ci", {num_or_null(ci_lo), num_or_null(ci_hi)}},
            {"reference", num_or_null(reference)},
            {"envelope", num_or_null(envelope)},
            {"fitted_constant", num_or_null(fitted_constant)},
            {"n", n},
            {"timestamp", timestamp},
            {"seed_lineage",
             {{"master", master_seed}, {"split", "derive_seed"}, {"first", first_replica}, {"count", replica_count}}},
            {"config_hash", config_hash}};
}

ResultRecord ResultRecord::from_json(const Json& j) {
    ResultRecord r;
    r.kind = j.at("kind").get<std::string>();
    for (auto it = j.at("params").begin(); it != j.at("params").end(); ++it)
        r.params[it.key()] = it.value().is_null() ? kNone : it.value().get<double>();
    r.estimate = num_from(j, "estimate");
    r.stderr_ = num_from(j, "stderr");
    const Json& ci = j.at("ci");
    if (!ci.is_array() || ci.size() != 2) throw FormatError("record: ci must be a pair");
    r.ci_lo = ci[0].is_null() ? kNone : ci[0].get<double>();
    r.ci_hi = ci[1].is_null() ? kNone : ci[1].get<double>();
    r.reference = num_from(j, "reference");
    r.envelope = num_from(j, "envelope");
    r.fitted_constant = num_from(j, "fitted_constant");
    r.n = j.at("n").get<long>();
    r.timestamp = j.at("timestamp").get<std::string>();
    const Json& s = j.at("seed_lineage");
    r.master_seed = s.at("master").get<std::uint64_t>();
    r.first_replica = s.at("first").get<std::uint64_t>();
    r.replica_count = s.at("count").get<std::uint64_t>();
    r.config_hash = j.at("config_hash").get<std::string>();
    return r;
}

bool ResultRecord::operator==(const ResultRecord& o) const {
    if (params.size() != o.params.size()) return false;
    for (const auto& [k, v] : params) {
        const auto it = o.params.find(k);
        if (it == o.params.end() || !same(v, it->second)) return false;
    }
    return kind == o.kind && same(estimate, o.estimate) && same(stderr_, o.stderr_) && same(ci_lo, o.ci_lo) &&
           same(ci_hi, o.ci_hi) && same(reference, o.reference) && same(envelope, o.envelope) &&
           same(fitted_constant, o.fitted_constant) && n == o.n && timestamp == o.timestamp &&
           master_seed == o.master_seed && first_replica == o.first_replica && replica_count == o.replica_count &&
           config_hash == o.config_hash;
}

void persist(const std::vector<ResultRecord>& records, const RunHeader& header, const std::string& path) {
    std::ofstream out(path, std::ios::app);
    if (!out) throw FormatError("cannot open " + path + " for appending");
    const Json h = {{"type", "header"},        {"schema", "thickpoints.records"},
                    {"version", kSchemaVersion}, {"seed", header.seed},
                    {"config_hash", header.config_hash}, {"kind", header.kind},
                    {"config", header.config.is_null() ? Json::object() : header.config}};
    out << h.dump() << '\n';
    for (const ResultRecord& r : records) out << r.to_json().dump() << '\n';
    out.flush();
    if (!out) throw FormatError("write to " + path + " failed");
}

LoadedRecords load_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path);
    LoadedRecords out;
    std::string line;
    long number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty()) continue;
        try {
            const Json j = Json::parse(line);
            const std::string type = j.at("type").get<std::string>();
            if (type == "header") {
                if (j.at("schema").get<std::string>() != "thickpoints.records")
                    throw FormatError("unknown schema");
                if (j.at("version").get<int>() != kSchemaVersion) throw FormatError("unsupported schema version");
                RunHeader h;
                h.seed = j.at("seed").get<std::uint64_t>();
                h.config_hash = j.at("config_hash").get<std::string>();
                h.kind = j.at("kind").get<std::string>();
                h.config = j.at("config");
                out.headers.push_back(std::move(h));
            } else if (type == "record") {
                if (out.headers.empty()) throw FormatError("record before any header");
                out.records.push_back(ResultRecord::from_json(j));
            } else {
                throw FormatError("unknown line type '" + type + "'");
            }
        } catch (const FormatError& e) {
            throw FormatError(path + ":" + std::to_string(number) + ": " + e.what());
        } catch (const Json::exception& e) {
            throw FormatError(path + ":" + std::to_string(number) + ": " + e.what());
        }
    }
    if (in.bad()) throw FormatError("read error on " + path);
    return out;
}

void export_csv(const std::vector<ResultRecord>& records, const std::string& path) {
    std::set<std::string> keys;
    for (const ResultRecord& r : records)
        for (const auto& kv : r.params) keys.insert(kv.first);
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open " + path + " for writing");
    out << std::setprecision(17);
    out << "kind";
    for (const std::string& k : keys) out << ',' << k;
    out << ",estimate,stderr,ci_lo,ci_hi,reference,envelope,fitted_constant,n,master_seed,config_hash\n";
    auto cell = [&](double v) {
        if (std::isfinite(v)) out << v;
    };
    for (const ResultRecord& r : records) {
        out << r.kind;
        for (const std::string& k : keys) {
            out << ',';
            const auto it = r.params.find(k);
            if (it != r.params.end()) cell(it->second);
        }
        for (double v : {r.estimate, r.stderr_, r.ci_lo, r.ci_hi, r.reference, r.envelope, r.fitted_constant}) {
            out << ',';
            cell(v);
        }
        out << ',' << r.n << ',' << r.master_seed << ',' << r.config_hash << '\n';
    }
    if (!out) throw FormatError("write to " + path + " failed");
}

std::string utc_timestamp() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// ---- reporting ----

std::string render_report(const LoadedRecords& loaded, Prefactor prefactor) {
    std::ostringstream os;
    os << std::setprecision(6);
    os << "runs: " << loaded.headers.size() << ", records: " << loaded.records.size() << '\n';
    for (const RunHeader& h : loaded.headers)
        os << "  run kind=" << h.kind << " seed=" << h.seed << " config=" << h.config_hash.substr(0, 16) << '\n';

    std::map<std::string, std::vector<const ResultRecord*>> by_kind;
    for (const ResultRecord& r : loaded.records) by_kind[r.kind].push_back(&r);
    for (const auto& [kind, recs] : by_kind) {
        os << '\n' << kind << " (" << recs.size() << " records)\n";
        double worst_hi = -std::numeric_limits<double>::infinity(), worst_lo = std::numeric_limits<double>::infinity();
        std::vector<TailPoint> tail;
        for (const ResultRecord* r : recs) {
            os << "  ";
            for (const auto& [k, v] : r->params) os << k << '=' << v << ' ';
            os << "estimate=" << r->estimate << " [" << r->ci_lo << ", " << r->ci_hi << "]";
            if (std::isfinite(r->reference)) os << " reference=" << r->reference;
            if (std::isfinite(r->envelope)) os << " envelope=" << r->envelope;
            if (std::isfinite(r->fitted_constant)) {
                os << " ratio=" << r->fitted_constant;
                worst_hi = std::max(worst_hi, r->fitted_constant);
                worst_lo = std::min(worst_lo, r->fitted_constant);
            }
            os << '\n';
            const auto z = r->params.find("z");
            if (z != r->params.end()) tail.push_back({z->second, r->estimate, r->stderr_});
        }
        if (std::isfinite(worst_hi)) os << "  ratio range: [" << worst_lo << ", " << worst_hi << "]\n";
        if (tail.size() >= 3) {
            try {
                const TailFit f = tail_fit(tail, prefactor);
                os << "  tail fit (prefactor " << to_string(prefactor) << "): slope " << f.slope << " +- "
                   << f.slope_stderr << ", intercept " << f.intercept << ", points " << f.points << '\n';
            } catch (const RegimeError& e) {
                os << "  tail fit unavailable: " << e.what() << '\n';
            }
        }
    }
    return os.str();
}

int exit_code_for(std::exception_ptr e) {
    try {
        std::rethrow_exception(e);
    } catch (const ReplicaFailure& f) {
        return f.cause() ? exit_code_for(f.cause()) : 1;
    } catch (const RegimeError&) {
        return 2;
    } catch (const CertificateError&) {
        return 3;
    } catch (const FormatError&) {
        return 4;
    } catch (const std::ios_base::failure&) {
        return 4;
    } catch (...) {
        return 1;
    }
}

}  // namespace thick

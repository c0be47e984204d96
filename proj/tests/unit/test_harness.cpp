#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "thickpoints/harness.hpp"

using namespace thick;

namespace {

std::string temp_path(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("thickpoints_test_" + name);
    std::filesystem::remove(p);
    return p.string();
}

}  // namespace

TEST_CASE("toml subset") {
    const Json j = parse_toml(R"(
kind = "thick-tail"   # comment
[ladder]
r0 = 0.25
L = 6
[stats]
z_grid = [
  1.0, 2,  # trailing comment
  3.5,
]
seed = 1_000
prefactor = 'affine'
[oracle]
triples = [[0.1, 0.2, 0.3], [0.2, 0.3, 0.4]]
[path]
dt = 1e-6
a.b = true
)");
    CHECK(j["kind"] == "thick-tail");
    CHECK(j["ladder"]["r0"].get<double>() == 0.25);
    CHECK(j["ladder"]["L"].get<int>() == 6);
    CHECK(j["stats"]["z_grid"].size() == 3);
    CHECK(j["stats"]["seed"].get<long>() == 1000);
    CHECK(j["stats"]["prefactor"] == "affine");
    CHECK(j["oracle"]["triples"][1][2].get<double>() == 0.4);
    CHECK(j["path"]["a"]["b"] == true);

    auto line_of = [](const std::string& text) {
        try {
            parse_toml(text);
        } catch (const FormatError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(line_of("a = 1\nb = {x = 1}\n").find("line 2") != std::string::npos);
    CHECK(line_of("a = 1\na = 2\n").find("duplicate") != std::string::npos);
    CHECK(line_of("[[x]]\n").find("line 1") != std::string::npos);
    CHECK(line_of("a = 1 2\n") != "");
}

TEST_CASE("config merge, validation and hashing") {
    ExperimentConfig c = default_config(ExperimentKind::OracleCheck);
    c.merge(Json::parse(R"({"stats": {"replicas": 50, "seed": 9}, "ladder": {"L": 7}})"));
    CHECK(c.replicas == 50);
    CHECK(c.seed == 9);
    CHECK(c.L == 7);
    CHECK_THROWS_AS(c.merge(Json::parse(R"({"stats": {"replicaz": 1}})")), FormatError);
    CHECK_THROWS_AS(c.merge(Json::parse(R"({"stats": {"replicas": "many"}})")), FormatError);

    const ExperimentConfig round = ExperimentConfig::from_json(c.to_json());
    CHECK(round.hash() == c.hash());
    ExperimentConfig w = c;
    w.workers = 4;
    w.output = "elsewhere.jsonl";
    CHECK(w.hash() == c.hash());
    w.seed = 10;
    CHECK(w.hash() != c.hash());
    CHECK(c.hash().size() == 64);

    ExperimentConfig bad = default_config(ExperimentKind::LeftTail);
    bad.z_grid = {0.5, 3.0};  // above log L for L = 5
    CHECK_THROWS_AS(bad.validate(), RegimeError);
    ExperimentConfig occ = default_config(ExperimentKind::Occupation);
    occ.eps_fractions = {0.001};
    CHECK_THROWS_AS(occ.validate(), RegimeError);
}

TEST_CASE("replicas are independent of the worker count") {
    auto f = [](std::size_t, std::size_t, Rng& rng) { return rng.normal() + rng.uniform(); };
    const auto a = run_replicas<double>(101, 77, 1, f);
    const auto b = run_replicas<double>(101, 77, 4, f);
    CHECK(a == b);
    // a failing replica reports its index and seed; replaying the seed reproduces it
    try {
        run_replicas<int>(20, 5, 3, [](std::size_t, std::size_t i, Rng&) -> int {
            if (i == 7 || i == 13) throw CertificateError("boom");
            return 0;
        });
        FAIL("expected a failure");
    } catch (const ReplicaFailure& e) {
        CHECK(e.index() == 7);
        CHECK(e.seed() == derive_seed(5, 7));
        CHECK(exit_code_for(std::current_exception()) == 3);
    }
}

TEST_CASE("estimator summaries") {
    EstimatorSummary c;
    for (int i = 0; i < 10; ++i) c.add(2.5);
    CHECK(c.mean() == 2.5);
    CHECK(c.variance() == 0.0);

    std::mt19937_64 gen(1);
    std::uniform_int_distribution<int> u(0, 1000);
    EstimatorSummary all, left, right;
    for (int i = 0; i < 5000; ++i) {
        const double x = u(gen);
        all.add(x);
        (i % 3 ? left : right).add(x);
    }
    left.merge(right);
    CHECK(left.n() == all.n());
    CHECK(left.mean() == all.mean());
    CHECK(left.variance() == all.variance());

    Rng rng(derive_seed(20261016, 31));
    EstimatorSummary z;
    for (int i = 0; i < 1000000; ++i) z.add(rng.normal());
    CHECK(std::abs(z.mean()) < 3.0 * z.stderr_());
    CHECK(z.variance() == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("binomial intervals") {
    const Interval w = wilson_interval(0, 10);
    CHECK(w.lo == 0.0);
    CHECK(w.hi == doctest::Approx(0.38416 / 1.38416).epsilon(1e-5));
    const Proportion p = estimate_proportion(500, 1000, 10);
    CHECK_FALSE(p.wilson);
    CHECK(p.ci.lo == doctest::Approx(0.5 - 1.96 * std::sqrt(0.25 / 1000)));
    CHECK(estimate_proportion(3, 1000, 10).wilson);
}

TEST_CASE("tail fits") {
    std::vector<TailPoint> lin, pure;
    for (double z : {1.0, 1.5, 2.0, 2.5, 3.0}) {
        lin.push_back({z, z * std::exp(-2.0 * z), 0.0});
        pure.push_back({z, std::exp(-2.0 * z), 0.0});
    }
    CHECK(tail_fit(lin, Prefactor::Linear).slope == doctest::Approx(-2.0).epsilon(1e-6));
    CHECK(tail_fit(pure, Prefactor::None).slope == doctest::Approx(-2.0).epsilon(1e-9));
    std::vector<TailPoint> aff;
    for (double z : {1.0, 2.0, 3.0}) aff.push_back({z, (1 + z) * std::exp(-1.5 * z), 1e-3});
    CHECK(tail_fit(aff, Prefactor::Affine).slope == doctest::Approx(-1.5).epsilon(1e-9));
    CHECK_THROWS_AS(tail_fit({{1.0, 0.1, 0.0}, {2.0, 0.0, 0.0}, {3.0, 0.01, 0.0}}, Prefactor::None), RegimeError);
    CHECK_THROWS_AS(tail_fit({{1.0, 0.1, 0.0}, {1.0, 0.2, 0.0}, {1.0, 0.3, 0.0}}, Prefactor::None), RegimeError);
}

TEST_CASE("records persist and reload exactly") {
    const std::string path = temp_path("records.jsonl");
    ResultRecord r;
    r.kind = "oracle-check";
    r.params = {{"u1", 0.05}, {"u2", 0.1}};
    r.estimate = 0.123456789012345;
    r.stderr_ = 1e-3;
    r.ci_lo = 0.12;
    r.ci_hi = 0.13;
    r.reference = 2.0 / 3.0;
    r.n = 1000;
    r.timestamp = utc_timestamp();
    r.master_seed = 20261016;
    r.replica_count = 1000;
    r.config_hash = std::string(64, 'a');
    ResultRecord s = r;
    s.params["u1"] = 0.02;
    persist({r, s}, {20261016, r.config_hash, "oracle-check", Json::object()}, path);
    persist({r}, {20261016, r.config_hash, "oracle-check", Json::object()}, path);
    const LoadedRecords back = load_records(path);
    CHECK(back.headers.size() == 2);
    REQUIRE(back.records.size() == 3);
    CHECK(back.records[0] == r);
    CHECK(back.records[1] == s);
    CHECK(std::isnan(back.records[0].envelope));

    const std::string csv = temp_path("records.csv");
    export_csv(back.records, csv);
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header.find("estimate") != std::string::npos);

    const std::string broken = temp_path("broken.jsonl");
    persist({r}, {20261016, r.config_hash, "oracle-check", Json::object()}, broken);
    {
        std::ofstream out(broken, std::ios::app);
        out << "{not json\n";
    }
    const std::string orphan = temp_path("orphan.jsonl");
    {
        std::ofstream out(orphan);
        out << r.to_json().dump() << "\n";
    }
    CHECK_THROWS_AS(load_records(orphan), FormatError);
    try {
        load_records(broken);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find(":3") != std::string::npos);
    }
    CHECK(render_report(back, Prefactor::Linear).find("oracle-check") != std::string::npos);
}

TEST_CASE("exit codes") {
    auto code = [](auto ex) { return exit_code_for(std::make_exception_ptr(ex)); };
    CHECK(code(RegimeError("x")) == 2);
    CHECK(code(CertificateError("x")) == 3);
    CHECK(code(BudgetError("x")) == 3);
    CHECK(code(FormatError("x")) == 4);
    CHECK(code(std::runtime_error("x")) == 1);
}

TEST_CASE("a small experiment end to end, identical across worker counts") {
    ExperimentConfig c = default_config(ExperimentKind::OracleCheck);
    c.replicas = 200;
    c.triples = {{0.1, 0.2, 0.4}};
    const ExperimentOutput one = run_experiment(c);
    c.workers = 3;
    const ExperimentOutput three = run_experiment(c);
    REQUIRE(one.records.size() == 1);
    CHECK(one.records[0].estimate == three.records[0].estimate);
    CHECK(one.records[0].reference == doctest::Approx(0.5));
    CHECK(one.summary.mean() == three.summary.mean());
}

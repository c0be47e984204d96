// Command line front end for the experiments.
//
//   thickpoints oracle|gw|bm|thick|lefttail [--config FILE] [--section.key VALUE ...]
//   thickpoints report --input FILE [--input FILE ...] [--prefactor linear] [--csv OUT]
//
// Every config key has a flag of the same dotted name; values are parsed as
// JSON when possible (numbers, true/false, [1, 2, 3]) and taken as strings
// otherwise. Flags override the config file.
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "thickpoints/harness.hpp"

using namespace thick;

namespace {

void collect_leaves(const Json& j, const std::string& prefix, std::vector<std::string>& out) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (it->is_object())
            collect_leaves(*it, key, out);
        else if (key != "kind")
            out.push_back(key);
    }
}

Json parse_flag_value(const std::string& text) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error&) {
        return text;
    }
}

struct RunCommand {
    ExperimentKind kind;
    CLI::App* app = nullptr;
    std::string config_path;
    std::string csv_path;
    std::map<std::string, std::string> values;
};

int run(RunCommand& rc) {
    ExperimentConfig cfg = default_config(rc.kind);
    if (!rc.config_path.empty()) {
        const Json file = load_config_file(rc.config_path);
        if (file.contains("kind") && file["kind"] != to_string(rc.kind))
            throw FormatError("config file " + rc.config_path + " is for kind " + file["kind"].dump());
        cfg.merge(file);
    }
    Json over = Json::object();
    for (const auto& [key, text] : rc.values) {
        if (text.empty()) continue;
        const std::size_t dot = key.find('.');
        over[key.substr(0, dot)][key.substr(dot + 1)] = parse_flag_value(text);
    }
    cfg.merge(over);

    std::cerr << "kind " << to_string(cfg.kind) << ", seed " << cfg.seed << ", config " << cfg.hash().substr(0, 16)
              << '\n';
    const ExperimentOutput out = run_experiment(cfg);
    for (const std::string& line : out.notes) std::cout << line << '\n';
    std::cout << "summary: " << out.summary.to_json().dump() << '\n';
    if (!cfg.output.empty()) {
        RunHeader h{cfg.seed, cfg.hash(), to_string(cfg.kind), cfg.to_json()};
        persist(out.records, h, cfg.output);
        std::cout << out.records.size() << " records appended to " << cfg.output << '\n';
    }
    if (!rc.csv_path.empty()) export_csv(out.records, rc.csv_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"thick point experiments on the sphere and their discrete models"};
    app.require_subcommand(1);

    const std::vector<std::pair<std::string, ExperimentKind>> kinds{
        {"oracle", ExperimentKind::OracleCheck},
        {"gw", ExperimentKind::GwEnvelope},
        {"bm", ExperimentKind::Occupation},
        {"thick", ExperimentKind::ThickTail},
        {"lefttail", ExperimentKind::LeftTail}};
    const std::map<std::string, std::string> blurbs{
        {"oracle", "Monte Carlo check of the two-circle hitting probability"},
        {"gw", "exact Galton-Watson barrier and increment probabilities against their envelopes"},
        {"bm", "per-excursion occupation of small balls, mean and second moment"},
        {"thick", "right tail of the maximal excursion count (or occupation) over the net"},
        {"lefttail", "probability that the maximal occupation reaches its typical level minus z"}};

    std::vector<RunCommand> commands(kinds.size());
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        RunCommand& rc = commands[i];
        rc.kind = kinds[i].second;
        rc.app = app.add_subcommand(kinds[i].first, blurbs.at(kinds[i].first));
        rc.app->add_option("--config", rc.config_path, "TOML or JSON config file")->check(CLI::ExistingFile);
        rc.app->add_option("--csv", rc.csv_path, "also write the records as CSV");
        std::vector<std::string> leaves;
        collect_leaves(default_config(rc.kind).to_json(), "", leaves);
        for (const std::string& key : leaves) rc.app->add_option("--" + key, rc.values[key]);
    }

    std::vector<std::string> inputs;
    std::string prefactor = "linear", csv;
    CLI::App* report = app.add_subcommand("report", "summarize persisted records");
    report->add_option("--input", inputs, "JSON-lines record file")->required()->check(CLI::ExistingFile);
    report->add_option("--prefactor", prefactor, "tail fit prefactor: none, linear or affine");
    report->add_option("--csv", csv, "export all records as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        for (RunCommand& rc : commands)
            if (rc.app->parsed()) return run(rc);
        LoadedRecords all;
        for (const std::string& path : inputs) {
            LoadedRecords one = load_records(path);
            all.headers.insert(all.headers.end(), one.headers.begin(), one.headers.end());
            all.records.insert(all.records.end(), one.records.begin(), one.records.end());
        }
        std::cout << render_report(all, prefactor_from_string(prefactor));
        if (!csv.empty()) export_csv(all.records, csv);
        return 0;
    } catch (...) {
        const std::exception_ptr e = std::current_exception();
        std::cerr << "error: " << describe(e) << '\n';
        return exit_code_for(e);
    }
}

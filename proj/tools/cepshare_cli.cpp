// Command line front end: datagen, run, bench and report.

#include <exception>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "cepshare/workbench.hpp"

using namespace cepshare;

namespace {

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(path + ": " + e.what());
    }
}

void print_summary(const RunResult& r) {
    std::cout << r.config.name << " strategy=" << to_string(r.config.strategy) << " elements=" << r.elements
              << " triggers=" << r.reduced.triggers << " macro_recall=" << r.macro_recall << "\n";
    for (std::size_t i = 0; i < r.patterns.size(); ++i) {
        const auto& p = r.patterns[i];
        std::cout << "  pattern " << i + 1 << ": golden=" << p.golden << " matched=" << p.matched << " recall=" << p.recall
                  << " bound_ms=" << p.bound_ms << " latency_ms=" << p.reduced_mean_latency_ms << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Shared-plan complex event processing with latency-bounded state reduction"};
    app.require_subcommand(1);

    std::string spec_path, out_path;
    auto* datagen = app.add_subcommand("datagen", "Generate a stream from a generator spec and write it as CSV");
    datagen->add_option("--spec", spec_path, "Generator spec (JSON)")->required();
    datagen->add_option("--out", out_path, "Output CSV")->required();

    std::string config_path;
    auto* run_cmd = app.add_subcommand("run", "Run one configuration");
    run_cmd->add_option("--config", config_path, "Run configuration (JSON)")->required();

    std::string suite_path;
    int repeat = 1;
    auto* bench_cmd = app.add_subcommand("bench", "Run a suite of configurations with repeated seeds");
    bench_cmd->add_option("--suite", suite_path, "JSON array of run configurations")->required();
    bench_cmd->add_option("--repeat", repeat, "Repetitions per configuration")->check(CLI::PositiveNumber);

    std::string in_dir, report_out;
    auto* report_cmd = app.add_subcommand("report", "Aggregate metrics files into summary tables");
    report_cmd->add_option("--in", in_dir, "Directory holding *_metrics.csv files")->required();
    report_cmd->add_option("--out", report_out, "Summary CSV (a .json summary is written beside it)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*datagen) {
            auto spec = spec_from_json(load_json(spec_path));
            save_csv(out_path, generate(spec));
        } else if (*run_cmd) {
            auto result = run(config_from_json(load_json(config_path)));
            write_outputs(result);
            print_summary(result);
        } else if (*bench_cmd) {
            auto j = load_json(suite_path);
            if (!j.is_array()) throw InputError("suite must be a JSON array of configurations");
            std::vector<RunConfig> suite;
            for (const auto& c : j) suite.push_back(config_from_json(c));
            for (const auto& r : bench(suite, repeat)) print_summary(r);
        } else if (*report_cmd) {
            report(in_dir, report_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

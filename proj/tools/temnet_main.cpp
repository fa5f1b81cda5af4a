// temnet command line: run the full panel -> TE-network -> metrics pipeline,
// generate synthetic panels, or summarize a finished run directory.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "temnet/error.hpp"
#include "temnet/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 4;

int dispatch(const std::function<int()>& body) {
    try {
        return body();
    } catch (const temnet::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const temnet::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInternal;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"transfer-entropy market network analysis"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    bool quiet = false;

    auto* run = app.add_subcommand("run", "execute the full analysis pipeline");
    run->add_option("--config", config_path, "JSON run configuration")->required();
    run->add_option("--out", out_override, "override the configured output directory");
    run->add_flag("--quiet", quiet, "suppress progress output");

    std::string synth_out;
    auto* synth = app.add_subcommand("synth", "generate a synthetic price panel");
    synth->add_option("--config", config_path, "JSON configuration with a synth section")
        ->required();
    synth->add_option("--out", synth_out, "output CSV path");
    synth->add_flag("--quiet", quiet, "suppress progress output");

    std::string report_dir;
    auto* report = app.add_subcommand("report", "summarize a finished run directory");
    report->add_option("dir", report_dir, "run directory with manifest.json")->required();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        return dispatch([&] {
            temnet::RunConfig cfg = temnet::load_run_config(config_path);
            if (!out_override.empty()) cfg.output_dir = out_override;
            const auto result = temnet::run_pipeline(cfg, quiet);
            if (!quiet)
                std::cout << "wrote " << result.artifacts.size() << " artifacts to "
                          << result.out_dir.string() << '\n';
            return kExitOk;
        });
    }
    if (synth->parsed()) {
        return dispatch([&] {
            temnet::RunConfig cfg = temnet::load_run_config(config_path);
            const auto path = temnet::synth_panel(cfg, synth_out);
            if (!quiet) std::cout << "wrote synthetic panel " << path.string() << '\n';
            return kExitOk;
        });
    }
    return dispatch([&] {
        std::cout << temnet::report_text(report_dir);
        return kExitOk;
    });
}

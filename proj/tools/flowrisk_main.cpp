// flowrisk command-line front end.
//
// Subcommands wire the pipeline stages together:
//   simulate -> ingest -> rank -> assess -> state -> watch/report/recommend
//
// Exit codes: 0 success, 1 input error, 2 rank non-convergence,
// 3 timeline integrity error.

#include <cstdint>
#include <iostream>
#include <limits>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <flowrisk/flowrisk.hpp>

namespace {

using flowrisk::pipeline::run_config;

void add_common_options(CLI::App* cmd, run_config& cfg, std::string& config_path) {
    cmd->add_option("--config", config_path, "key=value configuration file");
    cmd->add_option("--out", cfg.out, "output directory");
    cmd->add_option("--threshold-s", cfg.thresholds.tau_s, "sensitivity threshold");
    cmd->add_option("--threshold-v", cfg.thresholds.tau_v, "vulnerability threshold");
    cmd->add_option("--threshold-c", cfg.thresholds.tau_c, "degree-of-compromise threshold");
    cmd->add_option("--damping", cfg.params.damping, "rank damping factor");
    cmd->add_option("--tolerance", cfg.params.tolerance, "rank convergence tolerance");
    cmd->add_option("--max-iterations", cfg.params.max_iterations, "rank iteration cap");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"network-flow security analytics"};
    app.require_subcommand(1);

    run_config cfg;
    std::string config_path;

    auto* ingest = app.add_subcommand("ingest", "build the entity graph from a flow log");
    ingest->add_option("--flows", cfg.flows, "NDJSON flow log")->required();
    ingest->add_option("--rules", cfg.rules, "hostname resolution rules");
    add_common_options(ingest, cfg, config_path);

    auto* rank = app.add_subcommand("rank", "compute sensitivity and vulnerability ranks");
    rank->add_option("--annotations", cfg.annotations, "vulnerability annotations NDJSON");
    add_common_options(rank, cfg, config_path);

    auto* assess = app.add_subcommand("assess", "compute compromise probability and degree");
    assess->add_option("--evidence", cfg.evidence, "behavioral evidence NDJSON");
    add_common_options(assess, cfg, config_path);

    auto* state = app.add_subcommand("state", "step per-device security states");
    add_common_options(state, cfg, config_path);

    auto* watch = app.add_subcommand("watch", "replay a flow log in epochs, alerting on DC crossings");
    watch->add_option("--flows", cfg.flows, "NDJSON flow log")->required();
    watch->add_option("--rules", cfg.rules, "hostname resolution rules");
    watch->add_option("--annotations", cfg.annotations, "vulnerability annotations NDJSON");
    watch->add_option("--evidence", cfg.evidence, "behavioral evidence NDJSON");
    watch->add_option("--epoch", cfg.epoch, "epoch length in simulated seconds");
    add_common_options(watch, cfg, config_path);

    auto* report = app.add_subcommand("report", "forensic breach report for one device");
    std::string report_device;
    std::optional<std::int64_t> report_from, report_to;
    report->add_option("--device", report_device, "device entity id")->required();
    report->add_option("--flows", cfg.flows, "NDJSON flow log")->required();
    report->add_option("--categories", cfg.categories, "pattern<TAB>category rules");
    report->add_option("--from", report_from, "window start (seconds since epoch)");
    report->add_option("--to", report_to, "window end (seconds since epoch)");
    add_common_options(report, cfg, config_path);

    auto* recommend = app.add_subcommand("recommend", "classify risk and recommend protection actions");
    recommend->add_flag("--infrastructure-compromised", cfg.infrastructure_compromised,
                        "assume the network's own policy engine is suspect");
    add_common_options(recommend, cfg, config_path);

    auto* simulate = app.add_subcommand("simulate", "generate a labeled synthetic scenario");
    flowrisk::scenario_config sim;
    std::string scenario_name = "Benign";
    simulate->add_option("--seed", sim.seed, "random seed");
    simulate->add_option("--scenario", scenario_name, "Benign|BeaconingApp|AdMalwarePropagation|Botnet");
    simulate->add_option("--devices", sim.devices, "device count");
    simulate->add_option("--apps-per-device", sim.apps_per_device, "apps per device");
    simulate->add_option("--duration", sim.duration, "simulated seconds");
    add_common_options(simulate, cfg, config_path);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        // Config file first, then re-parse so explicit flags win.
        if (!config_path.empty()) {
            flowrisk::pipeline::apply_config_file(cfg, config_path);
            app.clear();
            app.parse(argc, argv);
        }

        if (ingest->parsed()) {
            auto graph = flowrisk::pipeline::run_ingest(cfg);
            std::cerr << "ingested " << graph.entities().size() << " entities, " << graph.edges().size()
                      << " edges\n";
        } else if (rank->parsed()) {
            flowrisk::pipeline::run_rank(cfg);
        } else if (assess->parsed()) {
            flowrisk::pipeline::run_assess(cfg);
        } else if (state->parsed()) {
            flowrisk::pipeline::run_state(cfg);
        } else if (watch->parsed()) {
            auto result = flowrisk::pipeline::run_watch(cfg);
            std::cerr << "watched " << result.epochs << " epochs, " << result.alerts.size() << " alerts\n";
        } else if (report->parsed()) {
            std::optional<flowrisk::time_window> window;
            if (report_from || report_to) {
                flowrisk::time_window w;
                w.start = report_from.value_or(0);
                w.end = report_to.value_or(std::numeric_limits<std::int64_t>::max());
                window = w;
            }
            flowrisk::pipeline::run_report(cfg, report_device, window);
        } else if (recommend->parsed()) {
            flowrisk::pipeline::run_recommend(cfg);
        } else if (simulate->parsed()) {
            sim.scenario = flowrisk::scenario_kind_from_string(scenario_name);
            flowrisk::pipeline::run_simulate(sim, cfg.out);
        }
        return 0;
    } catch (const flowrisk::integrity_error& e) {
        std::cerr << "flowrisk: integrity error: " << e.what() << '\n';
        return 3;
    } catch (const flowrisk::convergence_error& e) {
        std::cerr << "flowrisk: " << e.what() << '\n';
        return 2;
    } catch (const flowrisk::error& e) {
        std::cerr << "flowrisk: error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "flowrisk: error: " << e.what() << '\n';
        return 1;
    }
}

#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <flowrisk/actions.hpp>
#include <flowrisk/compromise.hpp>
#include <flowrisk/detail/text.hpp>
#include <flowrisk/entity_graph.hpp>
#include <flowrisk/errors.hpp>
#include <flowrisk/flow_record.hpp>
#include <flowrisk/forensics.hpp>
#include <flowrisk/sensitivity.hpp>
#include <flowrisk/simgen.hpp>
#include <flowrisk/state_machine.hpp>
#include <flowrisk/vulnerability.hpp>

// Batch pipeline stages behind the CLI. Each stage reads either its
// command-line inputs or the fixed-name outputs of the previous stage in
// the output directory:
//   graph.ndjson, sensitivity.ndjson, vulnerability.ndjson,
//   assessments.ndjson, timeline.ndjson, alerts.ndjson,
//   recommendations.ndjson, report.ndjson
// plus flows.ndjson / annotations.ndjson / evidence.ndjson /
// ground_truth.json from the simulator. All stages are deterministic:
// identical inputs give byte-identical outputs.
namespace flowrisk::pipeline {

namespace fs = std::filesystem;

struct run_config {
    fs::path flows;
    fs::path rules;
    fs::path annotations;
    fs::path evidence;
    fs::path categories;
    fs::path out = ".";
    rank_params params;
    risk_thresholds thresholds;
    std::int64_t epoch = 60;
    bool infrastructure_compromised = false;

    state_thresholds state_taus() const { return {thresholds.tau_v, thresholds.tau_c}; }
};

/// Applies one key=value config file. Flags parsed later override these.
inline void apply_config_file(run_config& cfg, const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw not_found_error("cannot open config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    for (const auto& e : detail::parse_kv_text(buf.str())) {
        try {
            if (e.key == "flows") cfg.flows = e.value;
            else if (e.key == "rules") cfg.rules = e.value;
            else if (e.key == "annotations") cfg.annotations = e.value;
            else if (e.key == "evidence") cfg.evidence = e.value;
            else if (e.key == "categories") cfg.categories = e.value;
            else if (e.key == "out") cfg.out = e.value;
            else if (e.key == "epoch") cfg.epoch = std::stoll(e.value);
            else if (e.key == "threshold_s") cfg.thresholds.tau_s = std::stod(e.value);
            else if (e.key == "threshold_v") cfg.thresholds.tau_v = std::stod(e.value);
            else if (e.key == "threshold_c") cfg.thresholds.tau_c = std::stod(e.value);
            else if (e.key == "damping") cfg.params.damping = std::stod(e.value);
            else if (e.key == "tolerance") cfg.params.tolerance = std::stod(e.value);
            else if (e.key == "max_iterations") cfg.params.max_iterations = std::stoi(e.value);
            else if (e.key == "recency_half_life") cfg.params.recency_half_life = std::stod(e.value);
            else if (e.key == "history_decay") cfg.params.history_decay = std::stod(e.value);
            else throw config_error(path.string() + ":" + std::to_string(e.line_no) + ": unknown config key \"" + e.key + "\"");
        } catch (const std::invalid_argument&) {
            throw config_error(path.string() + ":" + std::to_string(e.line_no) + ": bad value for \"" + e.key + "\"");
        } catch (const std::out_of_range&) {
            throw config_error(path.string() + ":" + std::to_string(e.line_no) + ": bad value for \"" + e.key + "\"");
        }
    }
}

namespace detail {

inline std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw not_found_error("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline std::ofstream open_out(const fs::path& dir, const std::string& name) {
    fs::create_directories(dir);
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw error("cannot write " + (dir / name).string());
    return out;
}

inline std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw not_found_error("cannot open " + path.string());
    return in;
}

inline std::vector<flow_record> load_flows(const fs::path& path) {
    auto in = open_in(path);
    auto records = read_flow_log(in, path.filename().string());
    if (records.empty()) throw empty_input_error(path.string() + ": empty input");
    return records;
}

inline resolution_rules load_rules(const fs::path& path) {
    if (path.empty()) return {};
    return resolution_rules::parse(slurp(path));
}

inline vuln_annotations load_annotations(const fs::path& path, const rank_params& params) {
    if (path.empty()) return {};
    auto in = open_in(path);
    return parse_vuln_annotations(in, params, path.filename().string());
}

inline std::vector<compromise_evidence> load_evidence(const fs::path& path) {
    if (path.empty()) return {};
    auto in = open_in(path);
    return parse_evidence(in, path.filename().string());
}

inline evidence_map bind_evidence(const std::vector<compromise_evidence>& all, const entity_graph& graph,
                                  id_policy policy) {
    evidence_map out;
    for (const auto& ev : all) {
        if (!graph.contains(ev.id)) {
            if (policy == id_policy::require) throw not_found_error("unknown entity \"" + ev.id + "\"");
            continue;
        }
        out[ev.id] = ev;
    }
    return out;
}

inline entity_graph load_graph_file(const run_config& cfg) {
    auto in = open_in(cfg.out / "graph.ndjson");
    return read_graph(in, "graph.ndjson");
}

inline rank_vector load_rank_file(const run_config& cfg, const std::string& file, const std::string& field) {
    auto in = open_in(cfg.out / file);
    rank_vector rv;
    rv.values = read_rank(in, field, file);
    rv.converged = true;  // rank stages refuse to write unconverged output
    return rv;
}

inline void require_converged(const rank_vector& rv, const std::string& which) {
    if (!rv.converged) {
        throw convergence_error(which + " rank did not converge within max_iterations (residual " +
                                ndjson::format_value(rv.residual) + ")");
    }
}

}  // namespace detail

/// ingest: flows (+ rules) -> graph.ndjson
inline entity_graph run_ingest(const run_config& cfg) {
    auto records = detail::load_flows(cfg.flows);
    auto graph = resolve_entities(records, detail::load_rules(cfg.rules));
    auto out = detail::open_out(cfg.out, "graph.ndjson");
    write_graph(out, graph);
    return graph;
}

/// rank: graph.ndjson (+ annotations) -> sensitivity.ndjson, vulnerability.ndjson
inline void run_rank(const run_config& cfg) {
    auto graph = detail::load_graph_file(cfg);
    auto sensitivity = compute_sensitivity_rank(graph, default_data_profiles(graph), cfg.params);
    detail::require_converged(sensitivity, "sensitivity");

    auto ann = detail::load_annotations(cfg.annotations, cfg.params);
    auto vg = build_vuln_graph(graph, ann, cfg.params);
    auto vulnerability = compute_vulnerability_rank(vg, cfg.params);
    detail::require_converged(vulnerability, "vulnerability");

    auto s_out = detail::open_out(cfg.out, "sensitivity.ndjson");
    write_rank(s_out, sensitivity, "sensitivity");
    auto v_out = detail::open_out(cfg.out, "vulnerability.ndjson");
    write_rank(v_out, vulnerability, "vulnerability");
}

/// assess: graph + ranks (+ evidence) -> assessments.ndjson
inline assessment_map run_assess(const run_config& cfg) {
    auto graph = detail::load_graph_file(cfg);
    auto sensitivity = detail::load_rank_file(cfg, "sensitivity.ndjson", "sensitivity");
    auto vulnerability = detail::load_rank_file(cfg, "vulnerability.ndjson", "vulnerability");
    auto evidence = detail::bind_evidence(detail::load_evidence(cfg.evidence), graph, id_policy::require);
    auto assessments = compute_degree_of_compromise(graph, sensitivity, vulnerability, evidence);
    auto out = detail::open_out(cfg.out, "assessments.ndjson");
    write_assessments(out, assessments);
    return assessments;
}

/// state: graph + ranks + assessments -> timeline.ndjson (appends to an
/// existing timeline when one is present in the output directory)
inline security_timeline run_state(const run_config& cfg) {
    auto graph = detail::load_graph_file(cfg);
    auto sensitivity = detail::load_rank_file(cfg, "sensitivity.ndjson", "sensitivity");
    auto vulnerability = detail::load_rank_file(cfg, "vulnerability.ndjson", "vulnerability");
    auto in = std::ifstream(cfg.out / "assessments.ndjson");
    if (!in) throw not_found_error("cannot open " + (cfg.out / "assessments.ndjson").string());
    auto assessments = read_assessments(in, "assessments.ndjson");

    security_timeline timeline;
    if (fs::exists(cfg.out / "timeline.ndjson")) {
        auto tl_in = detail::open_in(cfg.out / "timeline.ndjson");
        timeline = read_timeline(tl_in, "timeline.ndjson");
    }

    const std::int64_t now = graph.latest_timestamp();
    for (const auto& [id, e] : graph.entities()) {
        if (e.kind != entity_kind::Device) continue;
        metric_snapshot m;
        m.sensitivity = sensitivity.at_or_zero(id);
        m.vulnerability = vulnerability.at_or_zero(id);
        auto it = assessments.find(id);
        m.degree_of_compromise = it == assessments.end() ? 0.0 : it->second.degree;
        timeline.advance(id, now, m, {}, cfg.state_taus());
    }

    auto out = detail::open_out(cfg.out, "timeline.ndjson");
    write_timeline(out, timeline);
    return timeline;
}

struct watch_result {
    security_timeline timeline;
    std::vector<alert> alerts;
    int epochs = 0;
};

/// watch: replays the flow log in epoch batches, re-ranking and stepping
/// the per-device state machine at every epoch boundary, accumulating
/// edge-triggered alerts. Writes the final graph/rank/assessment files
/// plus alerts.ndjson and timeline.ndjson.
inline watch_result run_watch(const run_config& cfg) {
    auto records = detail::load_flows(cfg.flows);
    auto rules = detail::load_rules(cfg.rules);
    auto ann = detail::load_annotations(cfg.annotations, cfg.params);
    auto evidence = detail::load_evidence(cfg.evidence);
    if (cfg.epoch <= 0) throw config_error("epoch must be > 0");
    cfg.thresholds.validate();

    std::int64_t t_first = records.front().timestamp, t_last = records.front().timestamp;
    for (const auto& r : records) {
        t_first = std::min(t_first, r.timestamp);
        t_last = std::max(t_last, r.timestamp);
    }

    watch_result result;
    compromise_monitor monitor(cfg.thresholds.tau_c);

    entity_graph graph;
    rank_vector sensitivity, vulnerability;
    assessment_map assessments;

    for (std::int64_t t = t_first + cfg.epoch;; t += cfg.epoch) {
        std::vector<flow_record> window;
        for (const auto& r : records) {
            if (r.timestamp < t) window.push_back(r);
        }
        if (!window.empty()) {
            result.epochs += 1;
            graph = resolve_entities(window, rules);
            sensitivity = compute_sensitivity_rank(graph, default_data_profiles(graph), cfg.params, t);
            detail::require_converged(sensitivity, "sensitivity");
            auto vg = build_vuln_graph(graph, ann, cfg.params, id_policy::ignore_unknown, t);
            vulnerability = compute_vulnerability_rank(vg, cfg.params);
            detail::require_converged(vulnerability, "vulnerability");
            auto em = detail::bind_evidence(evidence, graph, id_policy::ignore_unknown);
            assessments = compute_degree_of_compromise(graph, sensitivity, vulnerability, em);

            auto epoch_alerts = monitor.observe(graph, assessments, t);
            result.alerts.insert(result.alerts.end(), epoch_alerts.begin(), epoch_alerts.end());

            for (const auto& [id, e] : graph.entities()) {
                if (e.kind != entity_kind::Device) continue;
                metric_snapshot m;
                m.sensitivity = sensitivity.at_or_zero(id);
                m.vulnerability = vulnerability.at_or_zero(id);
                auto it = assessments.find(id);
                m.degree_of_compromise = it == assessments.end() ? 0.0 : it->second.degree;
                result.timeline.advance(id, t, m, {}, cfg.state_taus());
            }
        }
        if (t > t_last) break;
    }

    auto g_out = detail::open_out(cfg.out, "graph.ndjson");
    write_graph(g_out, graph);
    auto s_out = detail::open_out(cfg.out, "sensitivity.ndjson");
    write_rank(s_out, sensitivity, "sensitivity");
    auto v_out = detail::open_out(cfg.out, "vulnerability.ndjson");
    write_rank(v_out, vulnerability, "vulnerability");
    auto a_out = detail::open_out(cfg.out, "assessments.ndjson");
    write_assessments(a_out, assessments);
    auto al_out = detail::open_out(cfg.out, "alerts.ndjson");
    write_alerts(al_out, result.alerts);
    auto t_out = detail::open_out(cfg.out, "timeline.ndjson");
    write_timeline(t_out, result.timeline);
    return result;
}

/// report: graph + timeline + flows (+ categories) -> report.ndjson
inline breach_report run_report(const run_config& cfg, const std::string& device,
                                std::optional<time_window> window) {
    auto graph = detail::load_graph_file(cfg);
    auto records = detail::load_flows(cfg.flows);

    security_timeline timeline;
    if (fs::exists(cfg.out / "timeline.ndjson")) {
        auto tl_in = detail::open_in(cfg.out / "timeline.ndjson");
        timeline = read_timeline(tl_in, "timeline.ndjson");
    }
    category_rules rules;
    if (!cfg.categories.empty()) rules = category_rules::parse(detail::slurp(cfg.categories));

    time_window w;
    if (window) {
        w = *window;
    } else {
        w.start = 0;
        w.end = graph.latest_timestamp();
    }
    auto report = make_breach_report(graph, timeline, records, device, w, rules);
    auto out = detail::open_out(cfg.out, "report.ndjson");
    write_breach_report(out, report);
    return report;
}

/// recommend: ranks + assessments -> recommendations.ndjson
inline std::vector<action_recommendation> run_recommend(const run_config& cfg) {
    auto graph = detail::load_graph_file(cfg);
    auto sensitivity = detail::load_rank_file(cfg, "sensitivity.ndjson", "sensitivity");
    auto vulnerability = detail::load_rank_file(cfg, "vulnerability.ndjson", "vulnerability");
    auto in = std::ifstream(cfg.out / "assessments.ndjson");
    if (!in) throw not_found_error("cannot open " + (cfg.out / "assessments.ndjson").string());
    auto assessments = read_assessments(in, "assessments.ndjson");

    std::vector<action_recommendation> recs;
    for (const auto& [id, e] : graph.entities()) {
        auto it = assessments.find(id);
        const double dc = it == assessments.end() ? 0.0 : it->second.degree;
        risk_level risk =
            classify_risk(sensitivity.at_or_zero(id), vulnerability.at_or_zero(id), dc, cfg.thresholds);
        action_context ctx;
        ctx.id = id;
        ctx.kind = e.kind;
        ctx.infrastructure_compromised = cfg.infrastructure_compromised;
        recs.push_back(recommend_actions(risk, ctx));
    }
    auto out = detail::open_out(cfg.out, "recommendations.ndjson");
    write_recommendations(out, recs);
    return recs;
}

/// simulate: scenario -> flows.ndjson + annotations.ndjson +
/// evidence.ndjson + ground_truth.json
inline scenario_output run_simulate(const scenario_config& config, const fs::path& out_dir) {
    auto scenario = generate_trace(config);
    auto f_out = detail::open_out(out_dir, "flows.ndjson");
    write_flow_log(f_out, scenario.records);
    auto a_out = detail::open_out(out_dir, "annotations.ndjson");
    write_vuln_annotations(a_out, scenario.annotated_nodes, scenario.exploit_edges);
    auto e_out = detail::open_out(out_dir, "evidence.ndjson");
    write_evidence(e_out, scenario.evidence);

    ndjson::json truth{{"labeled_compromised",
                        std::vector<std::string>(scenario.labeled_compromised.begin(),
                                                 scenario.labeled_compromised.end())},
                       {"scenario", to_string(config.scenario)},
                       {"seed", config.seed}};
    auto g_out = detail::open_out(out_dir, "ground_truth.json");
    g_out << truth.dump() << '\n';
    return scenario;
}

}  // namespace flowrisk::pipeline

#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <flowrisk/compromise.hpp>
#include <flowrisk/detail/text.hpp>
#include <flowrisk/entity_graph.hpp>
#include <flowrisk/errors.hpp>
#include <flowrisk/flow_record.hpp>
#include <flowrisk/ndjson.hpp>
#include <flowrisk/state_machine.hpp>

namespace flowrisk {

/// Raised when an entity's degree of compromise crosses the threshold
/// upward. Contributors are containment children ordered by their own
/// degree, heaviest first.
struct alert {
    std::string device;
    std::int64_t at = 0;
    double degree = 0.0;
    double threshold = 0.0;
    std::vector<std::string> top_contributors;
};

/// Edge-triggered threshold watcher: one alert per upward crossing, no
/// repeats while the value stays above. Entities start below.
class compromise_monitor {
public:
    explicit compromise_monitor(double threshold) : threshold_(threshold) {
        if (!(threshold > 0.0)) throw config_error("monitor threshold must be > 0");
    }

    double threshold() const { return threshold_; }

    /// Feeds one epoch of assessments; returns alerts sorted by entity id.
    std::vector<alert> observe(const entity_graph& graph, const assessment_map& assessments, std::int64_t at) {
        std::vector<alert> alerts;
        for (const auto& [id, a] : assessments) {
            const bool above = a.degree > threshold_;
            const bool was_above = above_.count(id) ? above_[id] : false;
            above_[id] = above;
            if (!above || was_above) continue;

            alert al;
            al.device = id;
            al.at = at;
            al.degree = a.degree;
            al.threshold = threshold_;
            if (graph.contains(id)) {
                std::vector<std::pair<double, std::string>> kids;
                for (const auto& child : graph.children_of(id)) {
                    auto it = assessments.find(child);
                    if (it != assessments.end() && it->second.degree > 0.0) {
                        kids.emplace_back(-it->second.degree, child);
                    }
                }
                std::sort(kids.begin(), kids.end());
                for (const auto& [neg, child] : kids) al.top_contributors.push_back(child);
            }
            alerts.push_back(std::move(al));
        }
        return alerts;
    }

private:
    double threshold_;
    std::map<std::string, bool> above_;
};

inline void write_alerts(std::ostream& out, const std::vector<alert>& alerts) {
    for (const auto& a : alerts) {
        out << "{\"device\":" << ndjson::quote(a.device) << ",\"at\":" << a.at
            << ",\"dc\":" << ndjson::format_value(a.degree)
            << ",\"threshold\":" << ndjson::format_value(a.threshold) << ",\"top_contributors\":[";
        for (std::size_t i = 0; i < a.top_contributors.size(); ++i) {
            if (i) out << ',';
            out << ndjson::quote(a.top_contributors[i]);
        }
        out << "]}\n";
    }
}

enum class breach_category { Monetary, Political, Social, Private, Unknown };

inline const char* to_string(breach_category c) {
    switch (c) {
        case breach_category::Monetary: return "Monetary";
        case breach_category::Political: return "Political";
        case breach_category::Social: return "Social";
        case breach_category::Private: return "Private";
        case breach_category::Unknown: return "Unknown";
    }
    return "Unknown";
}

inline breach_category breach_category_from_string(const std::string& s) {
    if (s == "Monetary") return breach_category::Monetary;
    if (s == "Political") return breach_category::Political;
    if (s == "Social") return breach_category::Social;
    if (s == "Private") return breach_category::Private;
    if (s == "Unknown") return breach_category::Unknown;
    throw config_error("unknown breach category \"" + s + "\"");
}

/// Ordered hostname-pattern -> category rules; first match wins, file
/// order preserved. Hosts matching nothing are Unknown.
class category_rules {
public:
    static category_rules parse(std::string_view text) {
        category_rules rules;
        std::size_t line_no = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            auto nl = text.find('\n', pos);
            std::string_view line =
                text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
            ++line_no;
            pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;

            std::string stripped = detail::trim(line);
            if (stripped.empty() || stripped[0] == '#') continue;
            auto tab = stripped.find('\t');
            if (tab == std::string::npos) {
                throw parse_error("line " + std::to_string(line_no) + ": expected pattern<TAB>category");
            }
            std::string pattern = detail::trim(stripped.substr(0, tab));
            std::string category = detail::trim(stripped.substr(tab + 1));
            rules.rules_.emplace_back(pattern, breach_category_from_string(category));
        }
        return rules;
    }

    breach_category categorize(const std::string& host) const {
        for (const auto& [pattern, cat] : rules_) {
            if (detail::glob_match(pattern, host)) return cat;
        }
        return breach_category::Unknown;
    }

    std::size_t size() const { return rules_.size(); }

private:
    std::vector<std::pair<std::string, breach_category>> rules_;
};

struct time_window {
    std::int64_t start = 0;
    std::int64_t end = 0;

    void validate() const {
        if (start > end) throw validation_error("window start must be <= end");
    }
    bool contains(std::int64_t t) const { return t >= start && t <= end; }
};

struct endpoint_row {
    std::string host;
    std::int64_t flow_count = 0;
    std::int64_t total_bytes = 0;
    double total_duration = 0.0;
    breach_category category = breach_category::Unknown;
};

/// What a device talked to while (suspected) compromised: per-endpoint
/// aggregates, categorized, plus the state transitions in the window.
struct breach_report {
    std::string device;
    time_window window;
    std::vector<endpoint_row> endpoints;             // by total_bytes descending
    std::map<breach_category, int> categories;       // endpoint count per category
    std::vector<transition> state_excerpt;
};

inline breach_report make_breach_report(const entity_graph& graph, const security_timeline& timeline,
                                        const std::vector<flow_record>& records, const std::string& device,
                                        const time_window& window, const category_rules& rules) {
    window.validate();
    if (!graph.contains(device)) throw not_found_error("unknown device \"" + device + "\"");

    struct agg {
        std::int64_t flows = 0;
        std::int64_t bytes = 0;
        double duration = 0.0;
    };
    std::map<std::string, agg> per_host;
    for (const auto& r : records) {
        if (r.src_device != device || !window.contains(r.timestamp)) continue;
        auto& a = per_host[r.dst_host];
        a.flows += 1;
        a.bytes += r.total_bytes();
        a.duration += r.duration;
    }

    breach_report report;
    report.device = device;
    report.window = window;
    for (const auto& [host, a] : per_host) {
        endpoint_row row;
        row.host = host;
        row.flow_count = a.flows;
        row.total_bytes = a.bytes;
        row.total_duration = a.duration;
        row.category = rules.categorize(host);
        report.endpoints.push_back(std::move(row));
        report.categories[report.endpoints.back().category] += 1;
    }
    std::sort(report.endpoints.begin(), report.endpoints.end(), [](const endpoint_row& a, const endpoint_row& b) {
        if (a.total_bytes != b.total_bytes) return a.total_bytes > b.total_bytes;
        return a.host < b.host;
    });

    for (const auto& t : timeline.history(device)) {
        if (window.contains(t.at)) report.state_excerpt.push_back(t);
    }
    return report;
}

inline void write_breach_report(std::ostream& out, const breach_report& report) {
    using ndjson::json;
    json endpoints = json::array();
    for (const auto& e : report.endpoints) {
        endpoints.push_back(json{{"host", e.host},
                                 {"flow_count", e.flow_count},
                                 {"total_bytes", e.total_bytes},
                                 {"total_duration", e.total_duration},
                                 {"category", to_string(e.category)}});
    }
    json categories;
    for (const auto& [cat, n] : report.categories) categories[to_string(cat)] = n;
    json transitions = json::array();
    for (const auto& t : report.state_excerpt) transitions.push_back(to_json(t));
    json j{{"device", report.device},
           {"window", json{{"start", report.window.start}, {"end", report.window.end}}},
           {"endpoints", endpoints},
           {"categories", categories},
           {"transitions", transitions}};
    out << json{{"breach_report", j}}.dump() << '\n';
}

}  // namespace flowrisk

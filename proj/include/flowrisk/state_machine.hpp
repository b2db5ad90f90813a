#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <flowrisk/errors.hpp>
#include <flowrisk/ndjson.hpp>

namespace flowrisk {

enum class security_state { Protected, Vulnerable, Compromised, Recovering };

inline const char* to_string(security_state s) {
    switch (s) {
        case security_state::Protected: return "Protected";
        case security_state::Vulnerable: return "Vulnerable";
        case security_state::Compromised: return "Compromised";
        case security_state::Recovering: return "Recovering";
    }
    return "Protected";
}

inline security_state security_state_from_string(const std::string& s) {
    if (s == "Protected") return security_state::Protected;
    if (s == "Vulnerable") return security_state::Vulnerable;
    if (s == "Compromised") return security_state::Compromised;
    if (s == "Recovering") return security_state::Recovering;
    throw validation_error("unknown security state \"" + s + "\"");
}

enum class transition_cause { ThresholdV, ThresholdDC, CleanEvent, RecoveryComplete, ManualOverride };

inline const char* to_string(transition_cause c) {
    switch (c) {
        case transition_cause::ThresholdV: return "ThresholdV";
        case transition_cause::ThresholdDC: return "ThresholdDC";
        case transition_cause::CleanEvent: return "CleanEvent";
        case transition_cause::RecoveryComplete: return "RecoveryComplete";
        case transition_cause::ManualOverride: return "ManualOverride";
    }
    return "ManualOverride";
}

inline transition_cause transition_cause_from_string(const std::string& s) {
    if (s == "ThresholdV") return transition_cause::ThresholdV;
    if (s == "ThresholdDC") return transition_cause::ThresholdDC;
    if (s == "CleanEvent") return transition_cause::CleanEvent;
    if (s == "RecoveryComplete") return transition_cause::RecoveryComplete;
    if (s == "ManualOverride") return transition_cause::ManualOverride;
    throw validation_error("unknown transition cause \"" + s + "\"");
}

struct metric_snapshot {
    double sensitivity = 0.0;
    double vulnerability = 0.0;
    double degree_of_compromise = 0.0;
};

struct state_thresholds {
    double tau_v = 0.1;   // vulnerability threshold, in (0,1)
    double tau_c = 0.01;  // degree-of-compromise threshold, > 0

    void validate() const {
        if (!(tau_c > 0.0)) throw config_error("tau_c must be > 0");
        if (!(tau_v > 0.0 && tau_v < 1.0)) throw config_error("tau_v must be in (0,1)");
    }
};

enum class event_kind { Clean, ManualOverride };

/// External input to a device's state: a cleanup action was taken, or an
/// operator forced a state. The annotation travels onto the resulting
/// transition (e.g. "new installation of the application").
struct device_event {
    event_kind kind = event_kind::Clean;
    security_state override_target = security_state::Protected;
    std::string annotation;
};

struct transition {
    std::string device;
    security_state from = security_state::Protected;
    security_state to = security_state::Protected;
    std::int64_t at = 0;
    transition_cause cause = transition_cause::ThresholdDC;
    metric_snapshot metrics;
    std::string annotation;
};

struct step_result {
    security_state next = security_state::Protected;
    std::optional<transition_cause> cause;  // set only when the state changed
    std::string annotation;
};

/// One evaluation of the transition relation. Rules fire in priority
/// order; the DC threshold outranks everything, including events:
///   1. DC > tau_c            -> Compromised, from any state
///   2. manual override event -> its target state
///   3. clean event while Compromised -> Recovering
///   4. Recovering, DC <= tau_c       -> Protected (V <= tau_v)
///                                       or Vulnerable (V > tau_v)
///   5. Protected, V > tau_v, DC <= tau_c  -> Vulnerable
///   6. Vulnerable, V <= tau_v, DC <= tau_c -> Protected
/// No rule firing (or a rule naming the current state) means no change
/// and no transition.
inline step_result step(security_state current, const metric_snapshot& metrics,
                        const std::vector<device_event>& events, const state_thresholds& thresholds) {
    thresholds.validate();

    security_state next = current;
    std::optional<transition_cause> cause;
    std::string annotation;

    auto first_event = [&](event_kind kind) -> const device_event* {
        for (const auto& e : events)
            if (e.kind == kind) return &e;
        return nullptr;
    };

    if (metrics.degree_of_compromise > thresholds.tau_c) {
        next = security_state::Compromised;
        cause = transition_cause::ThresholdDC;
    } else if (const device_event* manual = first_event(event_kind::ManualOverride)) {
        next = manual->override_target;
        cause = transition_cause::ManualOverride;
        annotation = manual->annotation;
    } else if (current == security_state::Compromised) {
        if (const device_event* clean = first_event(event_kind::Clean)) {
            next = security_state::Recovering;
            cause = transition_cause::CleanEvent;
            annotation = clean->annotation;
        }
    } else if (current == security_state::Recovering) {
        if (metrics.vulnerability > thresholds.tau_v) {
            next = security_state::Vulnerable;
            cause = transition_cause::ThresholdV;
        } else {
            next = security_state::Protected;
            cause = transition_cause::RecoveryComplete;
        }
    } else if (current == security_state::Protected && metrics.vulnerability > thresholds.tau_v) {
        next = security_state::Vulnerable;
        cause = transition_cause::ThresholdV;
    } else if (current == security_state::Vulnerable && metrics.vulnerability <= thresholds.tau_v) {
        next = security_state::Protected;
        cause = transition_cause::RecoveryComplete;
    }

    if (next == current) return {current, std::nullopt, {}};
    return {next, cause, annotation};
}

/// Append-only per-device transition history. New devices start
/// Protected; timestamps must strictly increase per device.
class security_timeline {
public:
    security_state current(const std::string& device) const {
        auto it = state_.find(device);
        return it == state_.end() ? security_state::Protected : it->second;
    }

    /// Steps one device, appending (and returning) the transition if the
    /// state changed.
    std::optional<transition> advance(const std::string& device, std::int64_t at, const metric_snapshot& metrics,
                                      const std::vector<device_event>& events, const state_thresholds& thresholds) {
        security_state cur = current(device);
        step_result r = step(cur, metrics, events, thresholds);
        if (!r.cause) return std::nullopt;

        auto& hist = history_[device];
        if (!hist.empty() && at <= hist.back().at) {
            throw integrity_error("device \"" + device + "\": timestamps must strictly increase");
        }
        transition t;
        t.device = device;
        t.from = cur;
        t.to = r.next;
        t.at = at;
        t.cause = *r.cause;
        t.metrics = metrics;
        t.annotation = r.annotation;
        hist.push_back(t);
        state_[device] = r.next;
        return t;
    }

    void append(const transition& t) {
        auto& hist = history_[t.device];
        security_state expected = hist.empty() ? security_state::Protected : hist.back().to;
        if (t.from != expected) {
            throw integrity_error("device \"" + t.device + "\": transition chain broken (from=" +
                                  to_string(t.from) + ", expected " + to_string(expected) + ")");
        }
        if (!hist.empty() && t.at <= hist.back().at) {
            throw integrity_error("device \"" + t.device + "\": timestamps must strictly increase");
        }
        if (t.to == t.from) {
            throw integrity_error("device \"" + t.device + "\": transition must change the state");
        }
        hist.push_back(t);
        state_[t.device] = t.to;
    }

    const std::vector<transition>& history(const std::string& device) const {
        static const std::vector<transition> empty;
        auto it = history_.find(device);
        return it == history_.end() ? empty : it->second;
    }

    const std::map<std::string, std::vector<transition>>& all() const { return history_; }

    std::vector<std::string> devices() const {
        std::vector<std::string> out;
        for (const auto& [id, h] : history_) out.push_back(id);
        return out;
    }

private:
    std::map<std::string, std::vector<transition>> history_;
    std::map<std::string, security_state> state_;
};

/// Replays one device's transition sequence from the initial Protected
/// state, validating the chain. Returns the final state.
inline security_state replay(const std::vector<transition>& transitions) {
    security_state state = security_state::Protected;
    std::int64_t last_at = -1;
    for (const auto& t : transitions) {
        if (t.from != state) {
            throw integrity_error("transition chain broken at t=" + std::to_string(t.at) + " (from=" +
                                  to_string(t.from) + ", expected " + to_string(state) + ")");
        }
        if (t.at <= last_at) throw integrity_error("timestamps must strictly increase");
        if (t.to == t.from) throw integrity_error("transition must change the state");
        state = t.to;
        last_at = t.at;
    }
    return state;
}

inline ndjson::json to_json(const transition& t) {
    ndjson::json m{{"s", t.metrics.sensitivity},
                   {"v", t.metrics.vulnerability},
                   {"dc", t.metrics.degree_of_compromise}};
    return ndjson::json{{"device", t.device}, {"from", to_string(t.from)},   {"to", to_string(t.to)},
                        {"at", t.at},         {"cause", to_string(t.cause)}, {"metrics", m},
                        {"annotation", t.annotation}};
}

/// Timeline export: one transition per line, ordered by (device, at).
inline void write_timeline(std::ostream& out, const security_timeline& timeline) {
    for (const auto& [device, hist] : timeline.all()) {
        for (const auto& t : hist) out << to_json(t).dump() << '\n';
    }
}

inline security_timeline read_timeline(std::istream& in, const std::string& name = "<timeline>") {
    security_timeline tl;
    ndjson::for_each_line(in, [&](std::size_t line_no, const std::string& line) {
        try {
            ndjson::json j = ndjson::parse_object(line);
            transition t;
            t.device = ndjson::require_as<std::string>(j, "device");
            t.from = security_state_from_string(ndjson::require_as<std::string>(j, "from"));
            t.to = security_state_from_string(ndjson::require_as<std::string>(j, "to"));
            t.at = ndjson::require_as<std::int64_t>(j, "at");
            t.cause = transition_cause_from_string(ndjson::require_as<std::string>(j, "cause"));
            const auto& m = ndjson::require(j, "metrics");
            t.metrics.sensitivity = ndjson::require_as<double>(m, "s");
            t.metrics.vulnerability = ndjson::require_as<double>(m, "v");
            t.metrics.degree_of_compromise = ndjson::require_as<double>(m, "dc");
            t.annotation = ndjson::optional_as<std::string>(j, "annotation").value_or("");
            tl.append(t);
        } catch (const error&) {
            ndjson::rethrow_with_location(name, line_no);
        }
    });
    return tl;
}

}  // namespace flowrisk

#pragma once

#include <array>
#include <ostream>
#include <string>
#include <vector>

#include <flowrisk/entity_graph.hpp>
#include <flowrisk/errors.hpp>
#include <flowrisk/ndjson.hpp>

namespace flowrisk {

enum class risk_level { Low, Elevated, High, Critical };

inline const char* to_string(risk_level r) {
    switch (r) {
        case risk_level::Low: return "Low";
        case risk_level::Elevated: return "Elevated";
        case risk_level::High: return "High";
        case risk_level::Critical: return "Critical";
    }
    return "Low";
}

inline risk_level risk_level_from_string(const std::string& s) {
    if (s == "Low") return risk_level::Low;
    if (s == "Elevated") return risk_level::Elevated;
    if (s == "High") return risk_level::High;
    if (s == "Critical") return risk_level::Critical;
    throw validation_error("unknown risk level \"" + s + "\"");
}

/// The protection-action catalog. One code per catalog entry; the numeric
/// values are stable and exported by name only.
enum class action_code {
    TightenAccessControl,
    RestartTrustedMode,
    NotifyUser,
    EnforceUserPolicy,
    EnforceMixedPolicy,
    DisableFeatureOrSensor,
    BackupAndWipeSensitive,
    BlockThirdPartySync,
    NetworkLockdown,
    AlternativeDefense,
    RemoteDisable,
};

inline constexpr std::array<action_code, 11> all_action_codes = {
    action_code::TightenAccessControl, action_code::RestartTrustedMode,
    action_code::NotifyUser,           action_code::EnforceUserPolicy,
    action_code::EnforceMixedPolicy,   action_code::DisableFeatureOrSensor,
    action_code::BackupAndWipeSensitive, action_code::BlockThirdPartySync,
    action_code::NetworkLockdown,      action_code::AlternativeDefense,
    action_code::RemoteDisable,
};

inline const char* to_string(action_code a) {
    switch (a) {
        case action_code::TightenAccessControl: return "TightenAccessControl";
        case action_code::RestartTrustedMode: return "RestartTrustedMode";
        case action_code::NotifyUser: return "NotifyUser";
        case action_code::EnforceUserPolicy: return "EnforceUserPolicy";
        case action_code::EnforceMixedPolicy: return "EnforceMixedPolicy";
        case action_code::DisableFeatureOrSensor: return "DisableFeatureOrSensor";
        case action_code::BackupAndWipeSensitive: return "BackupAndWipeSensitive";
        case action_code::BlockThirdPartySync: return "BlockThirdPartySync";
        case action_code::NetworkLockdown: return "NetworkLockdown";
        case action_code::AlternativeDefense: return "AlternativeDefense";
        case action_code::RemoteDisable: return "RemoteDisable";
    }
    return "NotifyUser";
}

inline const char* action_rationale(action_code a) {
    switch (a) {
        case action_code::TightenAccessControl:
            return "tighten access control and authorization policies for affected components";
        case action_code::RestartTrustedMode:
            return "restart the component into a trusted execution mode and monitor future transactions";
        case action_code::NotifyUser: return "notify the user of the current security state";
        case action_code::EnforceUserPolicy: return "enforce user behavior policies for sensitive destinations";
        case action_code::EnforceMixedPolicy: return "enforce mixed user/system behavior policies";
        case action_code::DisableFeatureOrSensor: return "disable risky applications, features or sensors";
        case action_code::BackupAndWipeSensitive: return "back up device data and remove sensitive data and apps";
        case action_code::BlockThirdPartySync: return "block third-party app synchronization with other devices";
        case action_code::NetworkLockdown: return "lock down network communication at the affected granularity";
        case action_code::AlternativeDefense:
            return "fall back to alternative defenses; the policy engine may be compromised";
        case action_code::RemoteDisable: return "remotely disable the device by exhausting its energy sources";
    }
    return "";
}

struct risk_thresholds {
    double tau_s = 0.5;   // sensitivity threshold, in (0,1)
    double tau_v = 0.1;   // vulnerability threshold, in (0,1)
    double tau_c = 0.01;  // degree-of-compromise threshold, > 0

    void validate() const {
        if (!(tau_s > 0.0 && tau_s < 1.0)) throw config_error("tau_s must be in (0,1)");
        if (!(tau_v > 0.0 && tau_v < 1.0)) throw config_error("tau_v must be in (0,1)");
        if (!(tau_c > 0.0)) throw config_error("tau_c must be > 0");
    }
};

/// Threshold rule for the four-level risk scale. Monotone in every
/// argument: raising S, V or DC never lowers the level.
inline risk_level classify_risk(double sensitivity, double vulnerability, double degree_of_compromise,
                                const risk_thresholds& thresholds) {
    thresholds.validate();
    if (degree_of_compromise > thresholds.tau_c) return risk_level::Critical;
    const bool v_high = vulnerability > thresholds.tau_v;
    const bool s_high = sensitivity > thresholds.tau_s;
    if (v_high && s_high) return risk_level::High;
    if (v_high || s_high) return risk_level::Elevated;
    return risk_level::Low;
}

/// Facts about the entity the recommendation is for.
struct action_context {
    std::string id;
    entity_kind kind = entity_kind::Device;
    bool infrastructure_compromised = false;
};

struct action_recommendation {
    std::string id;
    risk_level risk = risk_level::Low;
    std::vector<action_code> actions;
    std::vector<std::string> rationales;  // parallel to actions
};

/// Static escalation table. Each level keeps everything recommended at
/// the levels below it; the two infrastructure fallbacks are appended at
/// Critical when the context says the network's own defenses are
/// suspect.
inline action_recommendation recommend_actions(risk_level risk, const action_context& context) {
    action_recommendation rec;
    rec.id = context.id;
    rec.risk = risk;

    auto add = [&rec](action_code a) {
        rec.actions.push_back(a);
        rec.rationales.emplace_back(action_rationale(a));
    };

    if (risk >= risk_level::Elevated) {
        add(action_code::NotifyUser);
        add(action_code::TightenAccessControl);
    }
    if (risk >= risk_level::High) {
        add(action_code::EnforceUserPolicy);
        add(action_code::BlockThirdPartySync);
        add(action_code::DisableFeatureOrSensor);
    }
    if (risk >= risk_level::Critical) {
        add(action_code::RestartTrustedMode);
        add(action_code::BackupAndWipeSensitive);
        add(action_code::NetworkLockdown);
        if (context.infrastructure_compromised) {
            add(action_code::AlternativeDefense);
            add(action_code::RemoteDisable);
        }
    }
    return rec;
}

inline void write_recommendations(std::ostream& out, const std::vector<action_recommendation>& recs) {
    using ndjson::json;
    for (const auto& r : recs) {
        json actions = json::array();
        for (std::size_t i = 0; i < r.actions.size(); ++i) {
            actions.push_back(json{{"action", to_string(r.actions[i])}, {"rationale", r.rationales[i]}});
        }
        out << json{{"entity", r.id}, {"risk", to_string(r.risk)}, {"actions", actions}}.dump() << '\n';
    }
}

}  // namespace flowrisk

#pragma once

// Umbrella header: flow-log analytics for device security. Builds an
// entity graph from network flows, ranks sensitivity and vulnerability as
// damped fixed points, derives compromise probability and degree of
// compromise, and drives per-device security states, alerts, breach
// reports and protection-action recommendations.

#include <flowrisk/actions.hpp>
#include <flowrisk/compromise.hpp>
#include <flowrisk/entity_graph.hpp>
#include <flowrisk/errors.hpp>
#include <flowrisk/flow_record.hpp>
#include <flowrisk/forensics.hpp>
#include <flowrisk/ndjson.hpp>
#include <flowrisk/pipeline.hpp>
#include <flowrisk/rank.hpp>
#include <flowrisk/sensitivity.hpp>
#include <flowrisk/simgen.hpp>
#include <flowrisk/state_machine.hpp>
#include <flowrisk/vulnerability.hpp>

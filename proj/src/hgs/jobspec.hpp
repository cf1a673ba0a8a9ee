/*
 * Copyright (C) 2026 The hgs Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef HGS_JOBSPEC_HPP
#define HGS_JOBSPEC_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hgs/resource_types.hpp"

namespace hgs {

// `count` is per instance of the enclosing entry (per request at top level).
struct RequestEntry {
    ResourceType type = ResourceType::Core;
    std::int64_t count = 1;
    std::vector<RequestEntry> children;

    bool operator==(const RequestEntry&) const = default;
};

enum class FleetPolicy { CheapestFirst, SeededRandom };

struct FleetHint {
    std::int64_t total_count = 0;
    std::vector<std::string> allowed_types;
    FleetPolicy policy = FleetPolicy::CheapestFirst;

    bool operator==(const FleetHint&) const = default;
};

struct JobSpec {
    std::vector<RequestEntry> resources;
    std::optional<std::string> instance_type;
    std::optional<FleetHint> fleet;

    bool operator==(const JobSpec&) const = default;
};

/*
 * Request text:
 *
 *   kind:count ...          a chain; each entry nests under the previous one
 *   [ ... ]                 a group nested under the last entry before it
 *   instance-type=NAME      provider hint
 *   fleet=N fleet-types=a,b fleet-policy=cheapest_first|seeded_random
 *   # comment
 *
 * Counts are totals for the whole request and are split evenly across the
 * instances of the parent entry: "node:1 socket:2 core:32" asks for one node
 * with two sockets of 16 cores each.
 */
JobSpec parse_jobspec(std::string_view text);
std::string to_text(const JobSpec& spec);

// Vertices plus in-edges of a subgraph that satisfies `spec` exactly.
std::int64_t request_size(const JobSpec& spec);

// Total number of requested vertices of `type` across the request.
std::int64_t total_count(const JobSpec& spec, ResourceType type);

// Free pruning-kind vertices one instance of `entry` needs in its subtree.
std::int64_t prune_demand(const RequestEntry& entry);

nlohmann::json to_json(const JobSpec& spec);
JobSpec jobspec_from_json(const nlohmann::json& body);

const char* to_string(FleetPolicy policy) noexcept;

} // namespace hgs

#endif

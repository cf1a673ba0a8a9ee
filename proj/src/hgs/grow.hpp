/*
 * Copyright (C) 2026 The hgs Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef HGS_GROW_HPP
#define HGS_GROW_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hgs/perfmodel.hpp"
#include "hgs/resource_graph.hpp"
#include "hgs/subgraph.hpp"

namespace hgs {

enum class GrowOutcome { SatisfiedLocally, SatisfiedByParent, SatisfiedByProvider, Failed };

const char* to_string(GrowOutcome outcome) noexcept;
std::optional<GrowOutcome> parse_grow_outcome(std::string_view name) noexcept;

// Phase durations at one level, in seconds. `comms_s` excludes the time the
// parent spent serving the request.
struct LevelTiming {
    int level = 0;
    double match_s = 0;
    double comms_s = 0;
    double add_update_s = 0;
    double total_s = 0;
    std::int64_t n = 0;
    Transport transport = Transport::Intra;
};

struct GrowResult {
    GrowOutcome outcome = GrowOutcome::Failed;
    std::optional<Subgraph> subgraph;
    int levels_traversed = 1;
    // This level first, then each level above it that took part.
    std::vector<LevelTiming> timings;
};

nlohmann::json to_json(const LevelTiming& timing);
LevelTiming level_timing_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GrowResult& result);

struct RunGrowStats {
    std::size_t add_touched = 0;
    std::size_t update_touched = 0;
    std::vector<std::string> inserted;
};

// Insert the missing part of `subgraph`; the new granted vertices belong to
// `job`. Idempotent.
AddResult add_subgraph(ResourceGraph& graph, const Subgraph& subgraph, JobId job);

// Allocate the granted vertices of `subgraph` to `job`. Returns the number of
// vertices touched.
std::size_t update_metadata(ResourceGraph& graph, const Subgraph& subgraph, JobId job);

// Add (when `add`) then update.
RunGrowStats run_grow(ResourceGraph& graph, const Subgraph& subgraph, bool add, JobId job);

} // namespace hgs

#endif

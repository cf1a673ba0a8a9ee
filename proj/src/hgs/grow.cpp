/*
 * Copyright (C) 2026 The hgs Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "hgs/grow.hpp"

#include "hgs/error.hpp"

namespace hgs {

const char* to_string(GrowOutcome outcome) noexcept
{
    switch (outcome) {
    case GrowOutcome::SatisfiedLocally:
        return "satisfied_locally";
    case GrowOutcome::SatisfiedByParent:
        return "satisfied_by_parent";
    case GrowOutcome::SatisfiedByProvider:
        return "satisfied_by_provider";
    case GrowOutcome::Failed:
        return "failed";
    }
    return "failed";
}

std::optional<GrowOutcome> parse_grow_outcome(std::string_view name) noexcept
{
    for (auto o : {GrowOutcome::SatisfiedLocally, GrowOutcome::SatisfiedByParent, GrowOutcome::SatisfiedByProvider,
                   GrowOutcome::Failed}) {
        if (name == to_string(o)) {
            return o;
        }
    }
    return std::nullopt;
}

nlohmann::json to_json(const LevelTiming& t)
{
    return {{"level", t.level},         {"match_s", t.match_s}, {"comms_s", t.comms_s},
            {"add_update_s", t.add_update_s}, {"total_s", t.total_s}, {"n", t.n},
            {"transport", to_string(t.transport)}};
}

LevelTiming level_timing_from_json(const nlohmann::json& j)
{
    LevelTiming t;
    t.level = j.at("level").get<int>();
    t.match_s = j.at("match_s").get<double>();
    t.comms_s = j.at("comms_s").get<double>();
    t.add_update_s = j.at("add_update_s").get<double>();
    t.total_s = j.at("total_s").get<double>();
    t.n = j.at("n").get<std::int64_t>();
    t.transport = parse_transport(j.at("transport").get<std::string>()).value_or(Transport::Intra);
    return t;
}

nlohmann::json to_json(const GrowResult& r)
{
    nlohmann::json timings = nlohmann::json::array();
    for (const auto& t : r.timings) {
        timings.push_back(to_json(t));
    }
    return {{"outcome", to_string(r.outcome)},
            {"levels_traversed", r.levels_traversed},
            {"subgraph_size", r.subgraph ? static_cast<std::int64_t>(r.subgraph->size()) : 0},
            {"timings", std::move(timings)}};
}

AddResult add_subgraph(ResourceGraph& graph, const Subgraph& subgraph, JobId job)
{
    return graph.add_subgraph(subgraph, job, AllocationSource::MatchGrow);
}

std::size_t update_metadata(ResourceGraph& graph, const Subgraph& subgraph, JobId job)
{
    return graph.update_metadata(subgraph, job, AllocationSource::MatchGrow);
}

RunGrowStats run_grow(ResourceGraph& graph, const Subgraph& subgraph, bool add, JobId job)
{
    RunGrowStats stats;
    if (add) {
        auto r = add_subgraph(graph, subgraph, job);
        stats.add_touched = r.touched;
        stats.inserted = std::move(r.inserted);
    }
    stats.update_touched = update_metadata(graph, subgraph, job);
    return stats;
}

} // namespace hgs

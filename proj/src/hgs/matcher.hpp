/*
 * Copyright (C) 2026 The hgs Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef HGS_MATCHER_HPP
#define HGS_MATCHER_HPP

#include <optional>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "hgs/jobspec.hpp"
#include "hgs/resource_graph.hpp"
#include "hgs/subgraph.hpp"

namespace hgs {

struct MatchOptions {
    // Skip subtrees whose free-core aggregate cannot cover the demand.
    bool prune = true;
    // Vertices the search may pass through but never select.
    const std::unordered_set<VertexId>* reserved = nullptr;
};

/*
 * Pick vertices satisfying `spec` without touching the graph.
 *
 * Every request entry instance maps to a free vertex of its kind inside the
 * vertex chosen for its parent entry (inside the root at top level). The
 * vertices passed on the way down must be free and not themselves chosen.
 * Instances of one entry are chosen in ascending path order. Of all valid
 * choices the search returns the first in depth-first order, i.e. the one
 * whose chosen paths, listed in request order, are lexicographically least
 * (paths compared component by component).
 */
std::optional<std::vector<VertexId>> select(const ResourceGraph& graph, const JobSpec& spec,
                                            const MatchOptions& options = {});

// Component-wise path order used by the selection policy.
bool path_less(std::string_view a, std::string_view b) noexcept;

// Allocate a match to `job` and return the grant. Absent on no match, in
// which case the graph is untouched.
std::optional<Subgraph> match_allocate(ResourceGraph& graph, const JobSpec& spec, JobId job,
                                       AllocationSource source = AllocationSource::MatchAllocate,
                                       const MatchOptions& options = {});

void cancel(ResourceGraph& graph, JobId job);

} // namespace hgs

#endif

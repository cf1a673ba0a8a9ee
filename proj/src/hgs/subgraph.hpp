/*
 * Copyright (C) 2026 The hgs Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef HGS_SUBGRAPH_HPP
#define HGS_SUBGRAPH_HPP

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hgs/resource_types.hpp"

namespace hgs {

struct VertexRecord {
    VertexId id = 0;
    ResourceType type = ResourceType::Core;
    std::string basename;
    std::int64_t unit_size = 1;
    std::string path;
    std::int64_t rank = -1;
    std::vector<JobId> jobs;

    // A vertex carrying a job id is part of the grant; one without is context.
    bool granted() const noexcept { return !jobs.empty(); }

    bool operator==(const VertexRecord&) const = default;
};

// Edges are held by path; JGF maps them to node ids on the wire.
struct EdgeRecord {
    std::string source;
    std::string target;
    std::string relation = "contains";

    bool operator==(const EdgeRecord&) const = default;
};

// An attachment point: a vertex the receiving graph must already hold.
struct AnchorRecord {
    VertexId id = 0;
    std::string path;

    bool operator==(const AnchorRecord&) const = default;
};

/// Serializable vertex/edge set. Used both for whole graphs (no anchors, the
/// root is a vertex) and for inter-level payloads (anchored at the root, which
/// is not counted).
struct Subgraph {
    std::vector<AnchorRecord> anchors;
    std::vector<VertexRecord> vertices;
    std::vector<EdgeRecord> edges;

    std::size_t size() const noexcept { return vertices.size() + edges.size(); }
    bool empty() const noexcept { return vertices.empty() && edges.empty(); }

    // Vertices by path, edges by (source, target), anchors by path.
    void canonicalize();

    // Granted vertices whose parent is not itself granted.
    std::vector<std::string> granted_roots() const;

    bool operator==(const Subgraph&) const = default;
};

nlohmann::json to_jgf(const Subgraph& subgraph);
Subgraph from_jgf(const nlohmann::json& document);

std::string serialize_jgf(const Subgraph& subgraph, bool pretty = false);
Subgraph deserialize_jgf(std::string_view text);

} // namespace hgs

#endif

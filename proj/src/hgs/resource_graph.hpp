/*
 * Copyright (C) 2026 The hgs Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef HGS_RESOURCE_GRAPH_HPP
#define HGS_RESOURCE_GRAPH_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "hgs/resource_types.hpp"
#include "hgs/subgraph.hpp"

namespace hgs {

inline constexpr VertexId kNoVertex = -1;

struct ClusterSpec {
    std::int64_t nodes = 0;
    std::int64_t sockets_per_node = 0;
    std::int64_t cores_per_socket = 0;
    std::int64_t gpus_per_node = 0;
    std::int64_t memory_per_socket = 0;
    std::string name = "cluster0";
};

struct Vertex {
    VertexId id = kNoVertex;
    ResourceType type = ResourceType::Core;
    std::string basename;
    std::int64_t unit_size = 1;
    std::string path;
    std::int64_t rank = -1;
    std::optional<JobId> job;

    VertexId parent = kNoVertex;
    std::vector<VertexId> children; // ordered by basename, i.e. by path
    int depth = 0;

    // Free vertices of the pruning kind in the subtree rooted here.
    std::int64_t free_count = 0;

    bool is_free() const noexcept { return !job.has_value(); }
};

enum class AllocationSource { MatchAllocate, MatchGrow };

struct Allocation {
    JobId job = 0;
    std::unordered_set<VertexId> vertices;
    AllocationSource created_from = AllocationSource::MatchAllocate;
};

struct AddResult {
    std::size_t touched = 0;
    std::vector<std::string> inserted; // vertex paths, canonical order
    std::size_t inserted_edges = 0;
};

/// Tree-shaped containment graph with a path index and per-vertex
/// free-core aggregates. Single writer.
class ResourceGraph {
public:
    ResourceGraph() = default;

    // Whole-graph document (no anchors, exactly one root). Ids are preserved.
    static ResourceGraph from_subgraph(const Subgraph& whole);
    Subgraph to_subgraph() const;

    std::size_t vertex_count() const noexcept { return vertices_.size(); }
    std::size_t edge_count() const noexcept { return vertices_.empty() ? 0 : vertices_.size() - roots_; }
    std::size_t size() const noexcept { return vertex_count() + edge_count(); }

    VertexId root() const noexcept { return root_; }
    std::optional<VertexId> lookup(std::string_view path) const;
    bool contains(VertexId id) const { return vertices_.contains(id); }
    const Vertex& vertex(VertexId id) const;
    const std::unordered_map<VertexId, Vertex>& vertices() const noexcept { return vertices_; }

    // Paths in lexicographic order.
    std::vector<std::string> sorted_paths() const;

    bool has_edge(std::string_view source, std::string_view target) const;

    const std::map<JobId, Allocation>& jobs() const noexcept { return jobs_; }
    bool has_job(JobId job) const { return jobs_.contains(job); }
    std::vector<std::string> job_paths(JobId job) const;

    // Graph construction. The caller supplies ids only when reproducing a
    // serialized graph.
    VertexId add_root(ResourceType type, std::string basename, std::int64_t unit_size = 1, std::int64_t rank = -1,
                      std::optional<VertexId> id = std::nullopt);
    VertexId add_child(VertexId parent, ResourceType type, std::string basename, std::int64_t unit_size = 1,
                       std::int64_t rank = -1, std::optional<VertexId> id = std::nullopt);

    // Insert the part of `subgraph` missing from this graph, following the
    // edge-wise case analysis of AddSubgraph. New granted vertices are born
    // allocated to `owner` (or to the job the document carries when absent),
    // so aggregates stay exact without walking ancestors.
    AddResult add_subgraph(const Subgraph& subgraph, std::optional<JobId> owner, AllocationSource source);

    // Mark every granted subgraph vertex as allocated to `job` and refresh
    // aggregates on the subgraph and its ancestor chain. Returns the number of
    // vertices touched (n + p).
    std::size_t update_metadata(const Subgraph& subgraph, JobId job, AllocationSource source);

    // Allocate the given (free) vertices to `job`, creating or extending it.
    void allocate(std::span<const VertexId> ids, JobId job, AllocationSource source);

    // Free every vertex of `job` and forget it.
    void release_job(JobId job);

    // Free the given vertices from `job`; the job is dropped once empty.
    void release_vertices(std::span<const VertexId> ids, JobId job);

    // Remove the subtree rooted at `id`; returns removed paths.
    std::vector<std::string> remove_subtree(VertexId id);

    // Subtree vertex ids in pre-order.
    std::vector<VertexId> subtree(VertexId id) const;

    // Payload for a grant: granted vertices, their non-root ancestors as
    // context, the in-edge of each, anchored at the root.
    // Granted records carry `grant_job` when given, else the vertex's job.
    Subgraph emit(std::span<const VertexId> granted, std::optional<JobId> grant_job = std::nullopt) const;

    bool verify_aggregates() const;

    // FNV-1a over canonical content; vertex ids excluded.
    std::uint64_t hash() const;

    // Test hook for the aggregate checker.
    void debug_set_free_count(VertexId id, std::int64_t value) { vertices_.at(id).free_count = value; }

private:
    Vertex& mut(VertexId id);
    VertexId insert(Vertex v, std::optional<VertexId> id, AllocationSource source);
    void link(VertexId parent, VertexId child);
    std::size_t propagate(const std::unordered_map<VertexId, std::int64_t>& deltas, bool walk_all_ancestors);
    void set_job(Vertex& v, std::optional<JobId> job, AllocationSource source);

    std::unordered_map<VertexId, Vertex> vertices_;
    std::unordered_map<std::string, VertexId> path_index_;
    std::map<JobId, Allocation> jobs_;
    VertexId root_ = kNoVertex;
    std::size_t roots_ = 0;
    VertexId next_id_ = 0;
};

ResourceGraph build_synthetic_cluster(const ClusterSpec& spec);

std::optional<VertexId> lookup_by_path(const ResourceGraph& graph, std::string_view path);
bool verify_aggregates(const ResourceGraph& graph);

} // namespace hgs

#endif

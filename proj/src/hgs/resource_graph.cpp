/*
 * Copyright (C) 2026 The hgs Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "hgs/resource_graph.hpp"

#include <algorithm>
#include <functional>

#include "hgs/error.hpp"

namespace hgs {

namespace {

int path_depth(std::string_view path) noexcept
{
    return static_cast<int>(std::count(path.begin(), path.end(), '/')) - 1;
}

std::int64_t own_free(ResourceType type, bool free) noexcept
{
    return (type == kPruneType && free) ? 1 : 0;
}

class Fnv1a {
public:
    void add(std::string_view s) noexcept
    {
        for (unsigned char c : s) {
            state_ = (state_ ^ c) * 1099511628211ULL;
        }
        state_ = (state_ ^ 0x1fU) * 1099511628211ULL;
    }
    void add(std::int64_t v) { add(std::string_view(std::to_string(v))); }
    std::uint64_t value() const noexcept { return state_; }

private:
    std::uint64_t state_ = 14695981039346656037ULL;
};

} // namespace

const Vertex& ResourceGraph::vertex(VertexId id) const
{
    auto it = vertices_.find(id);
    if (it == vertices_.end()) {
        throw Error(ErrorKind::InvalidArgument, "no vertex with id " + std::to_string(id));
    }
    return it->second;
}

Vertex& ResourceGraph::mut(VertexId id)
{
    return const_cast<Vertex&>(std::as_const(*this).vertex(id));
}

std::optional<VertexId> ResourceGraph::lookup(std::string_view path) const
{
    auto it = path_index_.find(std::string(path));
    if (it == path_index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::vector<std::string> ResourceGraph::sorted_paths() const
{
    std::vector<std::string> paths;
    paths.reserve(path_index_.size());
    for (const auto& [path, id] : path_index_) {
        paths.push_back(path);
    }
    std::sort(paths.begin(), paths.end());
    return paths;
}

bool ResourceGraph::has_edge(std::string_view source, std::string_view target) const
{
    auto s = lookup(source);
    auto t = lookup(target);
    return s && t && vertices_.at(*t).parent == *s;
}

std::vector<std::string> ResourceGraph::job_paths(JobId job) const
{
    std::vector<std::string> paths;
    auto it = jobs_.find(job);
    if (it == jobs_.end()) {
        return paths;
    }
    for (auto id : it->second.vertices) {
        paths.push_back(vertices_.at(id).path);
    }
    std::sort(paths.begin(), paths.end());
    return paths;
}

VertexId ResourceGraph::insert(Vertex v, std::optional<VertexId> id, AllocationSource source)
{
    v.id = id.value_or(next_id_);
    if (vertices_.contains(v.id)) {
        throw Error(ErrorKind::InvalidArgument, "duplicate vertex id " + std::to_string(v.id));
    }
    if (v.unit_size < 1) {
        throw Error(ErrorKind::InvalidArgument, v.path + ": unit_size must be >= 1");
    }
    if (!path_index_.emplace(v.path, v.id).second) {
        throw Error(ErrorKind::InvalidArgument, "duplicate path " + v.path);
    }
    next_id_ = std::max(next_id_, v.id + 1);
    v.depth = path_depth(v.path);
    v.free_count = own_free(v.type, v.is_free());
    if (v.job) {
        auto [it, fresh] = jobs_.try_emplace(*v.job);
        if (fresh) {
            it->second.job = *v.job;
            it->second.created_from = source;
        }
        it->second.vertices.insert(v.id);
    }
    auto vid = v.id;
    vertices_.emplace(vid, std::move(v));
    ++roots_;
    return vid;
}

void ResourceGraph::link(VertexId parent, VertexId child)
{
    auto& c = mut(child);
    auto& p = mut(parent);
    if (c.parent != kNoVertex) {
        throw Error(ErrorKind::InvalidArgument, c.path + " already has a parent");
    }
    if (parent_path(c.path) != p.path) {
        throw Error(ErrorKind::InvalidArgument, "edge " + p.path + " -> " + c.path + " is inconsistent with paths");
    }
    c.parent = parent;
    auto pos = std::lower_bound(p.children.begin(), p.children.end(), c.basename,
                                [this](VertexId id, const std::string& name) { return vertices_.at(id).basename < name; });
    p.children.insert(pos, child);
    --roots_;
}

VertexId ResourceGraph::add_root(ResourceType type, std::string basename, std::int64_t unit_size, std::int64_t rank,
                                 std::optional<VertexId> id)
{
    if (root_ != kNoVertex) {
        throw Error(ErrorKind::InvalidArgument, "graph already has a root");
    }
    Vertex v;
    v.type = type;
    v.path = "/" + basename;
    v.basename = std::move(basename);
    v.unit_size = unit_size;
    v.rank = rank;
    root_ = insert(std::move(v), id, AllocationSource::MatchAllocate);
    return root_;
}

VertexId ResourceGraph::add_child(VertexId parent, ResourceType type, std::string basename, std::int64_t unit_size,
                                  std::int64_t rank, std::optional<VertexId> id)
{
    const auto& p = vertex(parent);
    Vertex v;
    v.type = type;
    v.path = p.path + "/" + basename;
    v.basename = std::move(basename);
    v.unit_size = unit_size;
    v.rank = rank;
    auto vid = insert(std::move(v), id, AllocationSource::MatchAllocate);
    link(parent, vid);
    auto delta = vertices_.at(vid).free_count;
    if (delta != 0) {
        propagate({{parent, delta}}, false);
    }
    return vid;
}

std::size_t ResourceGraph::propagate(const std::unordered_map<VertexId, std::int64_t>& deltas, bool walk_all_ancestors)
{
    if (deltas.empty()) {
        return 0;
    }
    int max_depth = 0;
    for (const auto& [id, d] : deltas) {
        max_depth = std::max(max_depth, vertices_.at(id).depth);
    }
    std::vector<std::vector<VertexId>> buckets(static_cast<std::size_t>(max_depth) + 1);
    std::unordered_map<VertexId, std::int64_t> pending;
    pending.reserve(deltas.size() * 2);
    for (const auto& [id, d] : deltas) {
        pending[id] += d;
        buckets[static_cast<std::size_t>(vertices_.at(id).depth)].push_back(id);
    }
    std::size_t touched = 0;
    for (int depth = max_depth; depth >= 0; --depth) {
        for (auto id : buckets[static_cast<std::size_t>(depth)]) {
            auto& v = vertices_.at(id);
            auto d = pending[id];
            v.free_count += d;
            ++touched;
            if (v.parent == kNoVertex || (d == 0 && !walk_all_ancestors)) {
                continue;
            }
            auto [it, fresh] = pending.try_emplace(v.parent, 0);
            it->second += d;
            if (fresh) {
                buckets[static_cast<std::size_t>(depth - 1)].push_back(v.parent);
            }
        }
    }
    return touched;
}

void ResourceGraph::set_job(Vertex& v, std::optional<JobId> job, AllocationSource source)
{
    if (v.job) {
        auto it = jobs_.find(*v.job);
        if (it != jobs_.end()) {
            it->second.vertices.erase(v.id);
            if (it->second.vertices.empty()) {
                jobs_.erase(it);
            }
        }
    }
    v.job = job;
    if (job) {
        auto [it, fresh] = jobs_.try_emplace(*job);
        if (fresh) {
            it->second.job = *job;
            it->second.created_from = source;
        }
        it->second.vertices.insert(v.id);
    }
}

AddResult ResourceGraph::add_subgraph(const Subgraph& sg, std::optional<JobId> owner, AllocationSource source)
{
    std::unordered_map<std::string_view, const VertexRecord*> records;
    for (const auto& v : sg.vertices) {
        if (!records.emplace(v.path, &v).second) {
            throw Error(ErrorKind::InvalidArgument, "subgraph repeats vertex " + v.path);
        }
    }

    // Validate everything before the first mutation.
    for (const auto& a : sg.anchors) {
        if (!path_index_.contains(a.path)) {
            throw Error(ErrorKind::InvalidArgument, "subgraph anchor " + a.path + " is not in the graph");
        }
    }
    std::unordered_set<std::string_view> has_in_edge;
    bool attached = !sg.anchors.empty();
    for (const auto& e : sg.edges) {
        if (parent_path(e.target) != e.source || e.source == e.target) {
            throw Error(ErrorKind::InvalidArgument, "malformed edge " + e.source + " -> " + e.target);
        }
        bool source_known = path_index_.contains(e.source);
        if (!source_known && !records.contains(e.source)) {
            throw Error(ErrorKind::InvalidArgument,
                        "edge " + e.source + " -> " + e.target + " has no attachment point in the graph");
        }
        if (!records.contains(e.target)) {
            throw Error(ErrorKind::InvalidArgument, "edge " + e.source + " -> " + e.target + " targets an unknown vertex");
        }
        if (!has_in_edge.insert(e.target).second) {
            throw Error(ErrorKind::InvalidArgument, e.target + " has two in-edges in the subgraph");
        }
        if (auto t = lookup(e.target)) {
            const auto& tv = vertices_.at(*t);
            if (!source_known || (tv.parent != kNoVertex && vertices_.at(tv.parent).path != e.source)) {
                throw Error(ErrorKind::InvalidArgument, e.target + " would get a second parent");
            }
        }
        attached = attached || source_known;
    }
    for (const auto& v : sg.vertices) {
        if (auto existing = lookup(v.path)) {
            attached = true;
            if (vertices_.at(*existing).type != v.type) {
                throw Error(ErrorKind::InvalidArgument, v.path + " exists with a different type");
            }
        } else if (!has_in_edge.contains(v.path)) {
            throw Error(ErrorKind::InvalidArgument, "subgraph vertex " + v.path + " has no attachment point");
        }
    }
    if (!sg.empty() && !attached) {
        throw Error(ErrorKind::InvalidArgument, "subgraph is an orphan forest with no attachment point");
    }

    std::vector<const EdgeRecord*> edges;
    edges.reserve(sg.edges.size());
    for (const auto& e : sg.edges) {
        edges.push_back(&e);
    }
    std::sort(edges.begin(), edges.end(),
              [](const auto* a, const auto* b) { return std::tie(a->source, a->target) < std::tie(b->source, b->target); });

    AddResult result;
    std::vector<VertexId> fresh;
    fresh.reserve(sg.vertices.size());
    result.inserted.reserve(sg.vertices.size());
    // One rehash up front instead of several while inserting.
    vertices_.reserve(vertices_.size() + sg.vertices.size());
    path_index_.reserve(path_index_.size() + sg.vertices.size());
    auto add_vertex = [&](const std::string& path) {
        const auto* r = records.at(path);
        Vertex v;
        v.type = r->type;
        v.basename = r->basename;
        v.unit_size = r->unit_size;
        v.path = r->path;
        v.rank = r->rank;
        if (r->granted()) {
            v.job = owner.value_or(r->jobs.front());
        }
        auto id = insert(std::move(v), std::nullopt, source);
        fresh.push_back(id);
        result.inserted.push_back(path);
        ++result.touched;
        return id;
    };

    for (const auto* e : edges) {
        ++result.touched;
        auto s = lookup(e->source);
        auto t = lookup(e->target);
        if (s && t) {
            if (vertices_.at(*t).parent != *s) {
                link(*s, *t);
                ++result.inserted_edges;
            }
            continue;
        }
        VertexId sid = s ? *s : add_vertex(e->source);
        VertexId tid = t ? *t : add_vertex(e->target);
        link(sid, tid);
        ++result.inserted_edges;
    }

    // Fold the new vertices' aggregates bottom-up; only a nonzero remainder
    // reaches pre-existing ancestors.
    std::sort(fresh.begin(), fresh.end(),
              [this](VertexId a, VertexId b) { return vertices_.at(a).depth > vertices_.at(b).depth; });
    std::unordered_set<VertexId> fresh_set(fresh.begin(), fresh.end());
    std::unordered_map<VertexId, std::int64_t> outside;
    for (auto id : fresh) {
        const auto& v = vertices_.at(id);
        if (v.parent == kNoVertex || v.free_count == 0) {
            continue;
        }
        if (fresh_set.contains(v.parent)) {
            vertices_.at(v.parent).free_count += v.free_count;
        } else {
            outside[v.parent] += v.free_count;
        }
    }
    result.touched += propagate(outside, false);
    std::sort(result.inserted.begin(), result.inserted.end());
    return result;
}

std::size_t ResourceGraph::update_metadata(const Subgraph& sg, JobId job, AllocationSource source)
{
    std::vector<Vertex*> targets;
    std::unordered_map<VertexId, std::int64_t> deltas;
    for (const auto& r : sg.vertices) {
        auto id = lookup(r.path);
        if (!id) {
            throw Error(ErrorKind::InvalidArgument, "update_metadata: " + r.path + " is not in the graph");
        }
        auto& v = vertices_.at(*id);
        deltas.emplace(*id, 0);
        if (!r.granted()) {
            continue;
        }
        if (v.job && *v.job != job) {
            throw Error(ErrorKind::Refused, r.path + " is allocated to job " + std::to_string(*v.job));
        }
        targets.push_back(&v);
    }
    for (auto* v : targets) {
        if (!v->job) {
            deltas[v->id] -= own_free(v->type, true);
            set_job(*v, job, source);
        }
    }
    return propagate(deltas, true);
}

void ResourceGraph::allocate(std::span<const VertexId> ids, JobId job, AllocationSource source)
{
    for (auto id : ids) {
        const auto& v = vertex(id);
        if (!v.is_free()) {
            throw Error(ErrorKind::Refused, v.path + " is already allocated");
        }
    }
    std::unordered_map<VertexId, std::int64_t> deltas;
    for (auto id : ids) {
        auto& v = vertices_.at(id);
        set_job(v, job, source);
        if (auto d = own_free(v.type, true)) {
            deltas[id] -= d;
        }
    }
    propagate(deltas, false);
}

void ResourceGraph::release_job(JobId job)
{
    auto it = jobs_.find(job);
    if (it == jobs_.end()) {
        throw Error(ErrorKind::UnknownJob, "unknown job " + std::to_string(job));
    }
    std::vector<VertexId> ids(it->second.vertices.begin(), it->second.vertices.end());
    release_vertices(ids, job);
}

void ResourceGraph::release_vertices(std::span<const VertexId> ids, JobId job)
{
    for (auto id : ids) {
        const auto& v = vertex(id);
        if (v.job != job) {
            throw Error(ErrorKind::Refused, v.path + " is not allocated to job " + std::to_string(job));
        }
    }
    std::unordered_map<VertexId, std::int64_t> deltas;
    for (auto id : ids) {
        auto& v = vertices_.at(id);
        set_job(v, std::nullopt, AllocationSource::MatchAllocate);
        if (auto d = own_free(v.type, true)) {
            deltas[id] += d;
        }
    }
    propagate(deltas, false);
}

std::vector<VertexId> ResourceGraph::subtree(VertexId id) const
{
    std::vector<VertexId> out;
    std::vector<VertexId> stack {id};
    while (!stack.empty()) {
        auto cur = stack.back();
        stack.pop_back();
        out.push_back(cur);
        const auto& children = vertex(cur).children;
        stack.insert(stack.end(), children.rbegin(), children.rend());
    }
    return out;
}

std::vector<std::string> ResourceGraph::remove_subtree(VertexId id)
{
    const auto& top = vertex(id);
    if (top.parent == kNoVertex) {
        throw Error(ErrorKind::InvalidArgument, "cannot remove root vertex " + top.path);
    }
    auto parent = top.parent;
    auto lost = top.free_count;
    auto ids = subtree(id);

    auto& siblings = vertices_.at(parent).children;
    siblings.erase(std::find(siblings.begin(), siblings.end(), id));

    std::vector<std::string> removed;
    removed.reserve(ids.size());
    for (auto vid : ids) {
        auto& v = vertices_.at(vid);
        set_job(v, std::nullopt, AllocationSource::MatchAllocate);
        path_index_.erase(v.path);
        removed.push_back(std::move(v.path));
        vertices_.erase(vid);
    }
    if (lost != 0) {
        propagate({{parent, -lost}}, false);
    }
    return removed;
}

Subgraph ResourceGraph::emit(std::span<const VertexId> granted, std::optional<JobId> grant_job) const
{
    Subgraph sg;
    std::unordered_set<VertexId> included;
    auto record = [grant_job](const Vertex& v, bool grant) {
        VertexRecord r {v.id, v.type, v.basename, v.unit_size, v.path, v.rank, {}};
        if (grant && (grant_job || v.job)) {
            r.jobs.push_back(grant_job ? *grant_job : *v.job);
        }
        return r;
    };
    for (auto id : granted) {
        if (included.insert(id).second) {
            sg.vertices.push_back(record(vertex(id), true));
        }
    }
    for (auto id : granted) {
        auto p = vertex(id).parent;
        while (p != kNoVertex && vertices_.at(p).parent != kNoVertex && included.insert(p).second) {
            sg.vertices.push_back(record(vertices_.at(p), false));
            p = vertices_.at(p).parent;
        }
    }
    for (const auto& r : sg.vertices) {
        const auto& v = vertices_.at(r.id);
        if (v.parent != kNoVertex) {
            sg.edges.push_back({vertices_.at(v.parent).path, v.path, "contains"});
        }
    }
    if (root_ != kNoVertex && !included.contains(root_)) {
        sg.anchors.push_back({root_, vertices_.at(root_).path});
    }
    sg.canonicalize();
    return sg;
}

bool ResourceGraph::verify_aggregates() const
{
    bool ok = true;
    std::function<std::int64_t(const Vertex&)> expect = [&](const Vertex& v) -> std::int64_t {
        std::int64_t sum = own_free(v.type, v.is_free());
        for (auto c : v.children) {
            sum += expect(vertices_.at(c));
        }
        if (sum != v.free_count) {
            ok = false;
        }
        return sum;
    };
    for (const auto& [id, v] : vertices_) {
        if (v.parent == kNoVertex) {
            expect(v);
        }
    }
    return ok;
}

std::uint64_t ResourceGraph::hash() const
{
    Fnv1a h;
    for (const auto& path : sorted_paths()) {
        const auto& v = vertices_.at(path_index_.at(path));
        h.add(v.path);
        h.add(to_string(v.type));
        h.add(v.basename);
        h.add(v.unit_size);
        h.add(v.rank);
        h.add(v.job ? *v.job : std::int64_t {-1});
        h.add(v.parent == kNoVertex ? std::string_view {} : std::string_view(vertices_.at(v.parent).path));
    }
    return h.value();
}

Subgraph ResourceGraph::to_subgraph() const
{
    Subgraph sg;
    sg.vertices.reserve(vertices_.size());
    for (const auto& [id, v] : vertices_) {
        VertexRecord r {v.id, v.type, v.basename, v.unit_size, v.path, v.rank, {}};
        if (v.job) {
            r.jobs.push_back(*v.job);
        }
        sg.vertices.push_back(std::move(r));
        if (v.parent != kNoVertex) {
            sg.edges.push_back({vertices_.at(v.parent).path, v.path, "contains"});
        }
    }
    sg.canonicalize();
    return sg;
}

ResourceGraph ResourceGraph::from_subgraph(const Subgraph& whole)
{
    if (!whole.anchors.empty()) {
        throw Error(ErrorKind::InvalidArgument, "a whole-graph document cannot carry anchors");
    }
    std::unordered_set<std::string_view> targets;
    for (const auto& e : whole.edges) {
        targets.insert(e.target);
    }
    const VertexRecord* root = nullptr;
    for (const auto& v : whole.vertices) {
        if (!targets.contains(v.path)) {
            if (root) {
                throw Error(ErrorKind::InvalidArgument, "graph has more than one root: " + root->path + ", " + v.path);
            }
            root = &v;
        }
    }
    if (!root) {
        throw Error(ErrorKind::InvalidArgument, "graph has no root vertex");
    }

    Subgraph sorted = whole;
    sorted.canonicalize();
    ResourceGraph g;
    std::unordered_map<std::string_view, std::string_view> parent_of;
    for (const auto& e : sorted.edges) {
        parent_of.emplace(e.target, e.source);
    }
    for (const auto& r : sorted.vertices) {
        Vertex v;
        v.type = r.type;
        v.basename = r.basename;
        v.unit_size = r.unit_size;
        v.path = r.path;
        v.rank = r.rank;
        if (r.granted()) {
            v.job = r.jobs.front();
        }
        auto id = g.insert(std::move(v), r.id, AllocationSource::MatchAllocate);
        if (r.path == root->path) {
            g.root_ = id;
        } else {
            auto p = g.lookup(parent_of.at(r.path));
            if (!p) {
                throw Error(ErrorKind::InvalidArgument, "parent of " + r.path + " is missing");
            }
            g.link(*p, id);
        }
    }
    // Vertices were inserted parents-first; fold aggregates in one pass.
    std::vector<VertexId> order;
    for (const auto& [id, v] : g.vertices_) {
        order.push_back(id);
    }
    std::sort(order.begin(), order.end(),
              [&g](VertexId a, VertexId b) { return g.vertices_.at(a).depth > g.vertices_.at(b).depth; });
    for (auto id : order) {
        const auto& v = g.vertices_.at(id);
        if (v.parent != kNoVertex) {
            g.vertices_.at(v.parent).free_count += v.free_count;
        }
    }
    return g;
}

ResourceGraph build_synthetic_cluster(const ClusterSpec& spec)
{
    if (spec.nodes < 0 || spec.sockets_per_node < 0 || spec.cores_per_socket < 0 || spec.gpus_per_node < 0
        || spec.memory_per_socket < 0) {
        throw Error(ErrorKind::InvalidArgument, "cluster spec counts must be >= 0");
    }
    if (spec.nodes == 0) {
        throw Error(ErrorKind::InvalidArgument, "cluster spec must contain at least one node");
    }
    if (spec.name.empty() || spec.name.find('/') != std::string::npos) {
        throw Error(ErrorKind::InvalidArgument, "invalid cluster name '" + spec.name + "'");
    }

    ResourceGraph g;
    auto root = g.add_root(ResourceType::Cluster, spec.name);
    for (std::int64_t n = 0; n < spec.nodes; ++n) {
        auto node = g.add_child(root, ResourceType::Node, "node" + std::to_string(n), 1, n);
        for (std::int64_t s = 0; s < spec.sockets_per_node; ++s) {
            auto socket = g.add_child(node, ResourceType::Socket, "socket" + std::to_string(s), 1, n);
            for (std::int64_t c = 0; c < spec.cores_per_socket; ++c) {
                g.add_child(socket, ResourceType::Core, "core" + std::to_string(c), 1, n);
            }
            for (std::int64_t m = 0; m < spec.memory_per_socket; ++m) {
                g.add_child(socket, ResourceType::Memory, "memory" + std::to_string(m), 1, n);
            }
        }
        for (std::int64_t gpu = 0; gpu < spec.gpus_per_node; ++gpu) {
            g.add_child(node, ResourceType::Gpu, "gpu" + std::to_string(gpu), 1, n);
        }
    }
    return g;
}

std::optional<VertexId> lookup_by_path(const ResourceGraph& graph, std::string_view path)
{
    return graph.lookup(path);
}

bool verify_aggregates(const ResourceGraph& graph)
{
    return graph.verify_aggregates();
}

} // namespace hgs

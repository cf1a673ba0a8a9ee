/*
 * Copyright (C) 2026 The hgs Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "hgs/subgraph.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "hgs/error.hpp"

namespace hgs {

using nlohmann::json;

void Subgraph::canonicalize()
{
    std::sort(anchors.begin(), anchors.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
    std::sort(vertices.begin(), vertices.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
    std::sort(edges.begin(), edges.end(), [](const auto& a, const auto& b) {
        return std::tie(a.source, a.target) < std::tie(b.source, b.target);
    });
}

std::vector<std::string> Subgraph::granted_roots() const
{
    std::unordered_set<std::string_view> granted;
    for (const auto& v : vertices) {
        if (v.granted()) {
            granted.insert(v.path);
        }
    }
    std::vector<std::string> roots;
    for (const auto& v : vertices) {
        if (v.granted() && !granted.contains(parent_path(v.path))) {
            roots.push_back(v.path);
        }
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

json to_jgf(const Subgraph& input)
{
    Subgraph sg = input;
    sg.canonicalize();

    std::unordered_map<std::string_view, VertexId> ids;
    for (const auto& a : sg.anchors) {
        ids.emplace(a.path, a.id);
    }
    for (const auto& v : sg.vertices) {
        ids.emplace(v.path, v.id);
    }

    json nodes = json::array();
    for (const auto& v : sg.vertices) {
        json meta = {
            {"id", v.id},
            {"type", std::string(to_string(v.type))},
            {"basename", v.basename},
            {"unit_size", v.unit_size},
            {"path", v.path},
            {"rank", v.rank},
            {"allocated_job_ids", v.jobs},
        };
        nodes.push_back({{"id", std::to_string(v.id)}, {"metadata", std::move(meta)}});
    }

    json edges = json::array();
    for (const auto& e : sg.edges) {
        auto s = ids.find(e.source);
        auto t = ids.find(e.target);
        if (s == ids.end() || t == ids.end()) {
            throw Error(ErrorKind::Internal, "edge " + e.source + " -> " + e.target + " has an unknown endpoint");
        }
        edges.push_back(
            {{"source", std::to_string(s->second)}, {"target", std::to_string(t->second)}, {"relation", e.relation}});
    }

    json graph = {{"directed", true}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
    if (!sg.anchors.empty()) {
        json anchors = json::array();
        for (const auto& a : sg.anchors) {
            anchors.push_back({{"id", std::to_string(a.id)}, {"path", a.path}});
        }
        graph["metadata"] = {{"anchors", std::move(anchors)}};
    }
    return json {{"graph", std::move(graph)}};
}

namespace {

[[noreturn]] void reject(const std::string& what)
{
    throw Error(ErrorKind::Parse, "invalid JGF: " + what);
}

const json& field(const json& obj, const char* key, const std::string& where)
{
    if (!obj.is_object()) {
        reject(where + " is not an object");
    }
    auto it = obj.find(key);
    if (it == obj.end()) {
        reject(where + " is missing required field '" + key + "'");
    }
    return *it;
}

template <typename T>
T typed(const json& obj, const char* key, const std::string& where)
{
    const auto& value = field(obj, key, where);
    try {
        return value.get<T>();
    } catch (const json::exception&) {
        reject(where + " field '" + key + "' has the wrong type");
    }
}

VertexId parse_id(const std::string& text, const std::string& where)
{
    try {
        std::size_t used = 0;
        auto id = std::stoll(text, &used);
        if (used != text.size()) {
            reject(where + " has a non-integer id '" + text + "'");
        }
        return id;
    } catch (const std::logic_error&) {
        reject(where + " has a non-integer id '" + text + "'");
    }
}

} // namespace

Subgraph from_jgf(const json& document)
{
    const auto& graph = field(document, "graph", "document");
    const auto& nodes = field(graph, "nodes", "graph");
    const auto& edges = field(graph, "edges", "graph");
    if (!nodes.is_array() || !edges.is_array()) {
        reject("graph nodes/edges must be arrays");
    }

    Subgraph sg;
    std::unordered_map<VertexId, std::string> by_id;
    std::unordered_set<std::string> paths;

    if (auto meta = graph.find("metadata"); meta != graph.end() && meta->contains("anchors")) {
        std::size_t i = 0;
        for (const auto& a : (*meta)["anchors"]) {
            auto where = "anchor[" + std::to_string(i++) + "]";
            AnchorRecord anchor {parse_id(typed<std::string>(a, "id", where), where), typed<std::string>(a, "path", where)};
            if (!by_id.emplace(anchor.id, anchor.path).second || !paths.insert(anchor.path).second) {
                reject(where + " duplicates id or path '" + anchor.path + "'");
            }
            sg.anchors.push_back(std::move(anchor));
        }
    }

    std::size_t i = 0;
    for (const auto& node : nodes) {
        auto where = "node[" + std::to_string(i++) + "]";
        const auto& meta = field(node, "metadata", where);
        VertexRecord v;
        v.id = parse_id(typed<std::string>(node, "id", where), where);
        auto meta_id = typed<VertexId>(meta, "id", where + ".metadata");
        if (meta_id != v.id) {
            reject(where + " id does not match metadata id");
        }
        auto type_name = typed<std::string>(meta, "type", where);
        auto type = parse_resource_type(type_name);
        if (!type) {
            reject(where + " has unknown type '" + type_name + "'");
        }
        v.type = *type;
        v.basename = typed<std::string>(meta, "basename", where);
        v.unit_size = typed<std::int64_t>(meta, "unit_size", where);
        v.path = typed<std::string>(meta, "path", where);
        v.rank = typed<std::int64_t>(meta, "rank", where);
        v.jobs = typed<std::vector<JobId>>(meta, "allocated_job_ids", where);
        if (v.unit_size < 1) {
            reject(where + " (" + v.path + ") has unit_size < 1");
        }
        if (v.path.empty() || v.path.front() != '/' || basename_of(v.path) != v.basename) {
            reject(where + " path '" + v.path + "' does not end in basename '" + v.basename + "'");
        }
        if (v.jobs.size() > 1) {
            reject(where + " (" + v.path + ") is allocated to more than one job");
        }
        if (!paths.insert(v.path).second) {
            reject(where + " duplicates path '" + v.path + "'");
        }
        if (!by_id.emplace(v.id, v.path).second) {
            reject(where + " duplicates id " + std::to_string(v.id));
        }
        sg.vertices.push_back(std::move(v));
    }

    std::set<std::pair<std::string, std::string>> seen;
    std::unordered_set<std::string> has_parent;
    i = 0;
    for (const auto& edge : edges) {
        auto where = "edge[" + std::to_string(i++) + "]";
        auto source_id = typed<std::string>(edge, "source", where);
        auto target_id = typed<std::string>(edge, "target", where);
        auto s = by_id.find(parse_id(source_id, where));
        auto t = by_id.find(parse_id(target_id, where));
        if (s == by_id.end() || t == by_id.end()) {
            reject(where + " (" + source_id + " -> " + target_id + ") references a nonexistent vertex");
        }
        EdgeRecord e {s->second, t->second, "contains"};
        if (auto rel = edge.find("relation"); rel != edge.end()) {
            e.relation = rel->get<std::string>();
        }
        if (e.relation != "contains") {
            reject(where + " has unsupported relation '" + e.relation + "'");
        }
        if (e.source == e.target) {
            reject(where + " is a self-edge on " + e.source);
        }
        if (parent_path(e.target) != e.source) {
            reject(where + " (" + e.source + " -> " + e.target + ") is inconsistent with vertex paths");
        }
        if (!seen.emplace(e.source, e.target).second) {
            reject(where + " duplicates edge " + e.source + " -> " + e.target);
        }
        if (!has_parent.insert(e.target).second) {
            reject(where + " gives " + e.target + " a second parent");
        }
        sg.edges.push_back(std::move(e));
    }

    sg.canonicalize();
    return sg;
}

std::string serialize_jgf(const Subgraph& subgraph, bool pretty)
{
    return pretty ? to_jgf(subgraph).dump(2) + "\n" : to_jgf(subgraph).dump();
}

Subgraph deserialize_jgf(std::string_view text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Parse, std::string("invalid JGF: ") + e.what());
    }
    return from_jgf(doc);
}

} // namespace hgs

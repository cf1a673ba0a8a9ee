/*
 * Copyright (C) 2026 The hgs Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

// Reference implementations used by the tests. They share no code with the
// library beyond reading a graph's public state.

#ifndef HGS_TESTS_ORACLES_HPP
#define HGS_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hgs/jobspec.hpp"
#include "hgs/resource_graph.hpp"
#include "hgs/subgraph.hpp"

namespace oracle {

inline std::vector<std::string> split_path(const std::string& path)
{
    std::vector<std::string> out;
    std::size_t i = 1;
    while (i <= path.size()) {
        auto j = path.find('/', i);
        if (j == std::string::npos) {
            j = path.size();
        }
        out.push_back(path.substr(i, j - i));
        i = j + 1;
    }
    return out;
}

// Component-wise path order.
inline bool path_before(const std::string& a, const std::string& b)
{
    return split_path(a) < split_path(b);
}

inline bool strictly_below(const std::string& path, const std::string& ancestor)
{
    return path.size() > ancestor.size() && path.compare(0, ancestor.size(), ancestor) == 0
        && path[ancestor.size()] == '/';
}

struct Flat {
    std::string path;
    hgs::ResourceType type;
    bool free;
};

// One slot per entry instance, in depth-first request order, with the slot
// index of its parent instance (-1 at top level) and of the previous
// instance of the same entry under the same parent (-1 for the first).
struct Slot {
    hgs::ResourceType type;
    int parent;
    int previous;
};

inline void expand(const std::vector<hgs::RequestEntry>& entries, int parent, std::vector<Slot>& out)
{
    for (const auto& e : entries) {
        int prev = -1;
        for (std::int64_t k = 0; k < e.count; ++k) {
            int me = static_cast<int>(out.size());
            out.push_back({e.type, parent, prev});
            prev = me;
            expand(e.children, me, out);
        }
    }
}

/*
 * Exhaustive matcher. Every slot takes a free vertex of its kind strictly
 * below its parent slot's vertex (below the root at top level); same-entry
 * siblings ascend in path order; vertices are distinct; every vertex strictly
 * between a slot's vertex and its parent's is free and unused. Of all valid
 * assignments the least path sequence (in slot order) wins.
 */
inline std::optional<std::vector<std::string>> brute_force_match(const hgs::ResourceGraph& g,
                                                                 const hgs::JobSpec& spec)
{
    std::vector<Flat> verts;
    for (const auto& [id, v] : g.vertices()) {
        verts.push_back({v.path, v.type, v.is_free()});
    }
    std::sort(verts.begin(), verts.end(), [](const Flat& a, const Flat& b) { return path_before(a.path, b.path); });
    std::map<std::string, bool> free_of;
    for (const auto& v : verts) {
        free_of[v.path] = v.free;
    }
    const std::string root = g.vertex(g.root()).path;
    std::vector<Slot> slots;
    expand(spec.resources, -1, slots);

    std::vector<std::string> pick(slots.size());
    std::optional<std::vector<std::string>> best;

    auto valid_final = [&]() {
        std::set<std::string> used(pick.begin(), pick.end());
        if (used.size() != pick.size()) {
            return false;
        }
        for (std::size_t i = 0; i < slots.size(); ++i) {
            std::string top = slots[i].parent < 0 ? root : pick[static_cast<std::size_t>(slots[i].parent)];
            // Walk from the pick up to its parent slot's vertex.
            auto parts = split_path(pick[i]);
            std::string cur;
            std::vector<std::string> chain;
            for (const auto& part : parts) {
                cur += "/" + part;
                chain.push_back(cur);
            }
            for (const auto& mid : chain) {
                if (strictly_below(mid, top) && mid != pick[i]) {
                    if (!free_of.at(mid) || used.contains(mid)) {
                        return false;
                    }
                }
            }
        }
        return true;
    };

    std::function<void(std::size_t)> rec = [&](std::size_t i) {
        if (best && !(pick.empty()) && i > 0) {
            // Prefix already worse than the best: nothing below can win.
            std::vector<std::string> prefix(pick.begin(), pick.begin() + static_cast<long>(i));
            std::vector<std::string> bprefix(best->begin(), best->begin() + static_cast<long>(i));
            auto less = [](const std::vector<std::string>& a, const std::vector<std::string>& b) {
                return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), path_before);
            };
            if (less(bprefix, prefix)) {
                return;
            }
        }
        if (i == slots.size()) {
            if (valid_final()) {
                auto less = [](const std::vector<std::string>& a, const std::vector<std::string>& b) {
                    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), path_before);
                };
                if (!best || less(pick, *best)) {
                    best = pick;
                }
            }
            return;
        }
        const auto& s = slots[i];
        std::string top = s.parent < 0 ? root : pick[static_cast<std::size_t>(s.parent)];
        for (const auto& v : verts) {
            if (v.type != s.type || !v.free || !strictly_below(v.path, top)) {
                continue;
            }
            if (s.previous >= 0 && !path_before(pick[static_cast<std::size_t>(s.previous)], v.path)) {
                continue;
            }
            if (std::find(pick.begin(), pick.begin() + static_cast<long>(i), v.path) != pick.begin() + static_cast<long>(i)) {
                continue;
            }
            pick[i] = v.path;
            rec(i + 1);
        }
    };
    rec(0);
    return best;
}

// Free pruning-kind vertices in each subtree, recomputed from scratch.
inline std::map<std::string, std::int64_t> free_cores(const hgs::ResourceGraph& g)
{
    std::map<std::string, std::int64_t> out;
    for (const auto& [id, v] : g.vertices()) {
        out.try_emplace(v.path, 0);
        if (v.type == hgs::kPruneType && v.is_free()) {
            for (auto a = id; a != hgs::kNoVertex; a = g.vertex(a).parent) {
                ++out[g.vertex(a).path];
            }
        }
    }
    return out;
}

inline bool aggregates_match(const hgs::ResourceGraph& g)
{
    auto expect = free_cores(g);
    for (const auto& [id, v] : g.vertices()) {
        if (v.free_count != expect.at(v.path)) {
            return false;
        }
    }
    return true;
}

// Vertex paths and (source, target) edges of a graph.
struct PathSets {
    std::set<std::string> vertices;
    std::set<std::pair<std::string, std::string>> edges;

    bool operator==(const PathSets&) const = default;
};

inline PathSets path_sets(const hgs::ResourceGraph& g)
{
    PathSets s;
    for (const auto& [id, v] : g.vertices()) {
        s.vertices.insert(v.path);
        if (v.parent != hgs::kNoVertex) {
            s.edges.insert({g.vertex(v.parent).path, v.path});
        }
    }
    return s;
}

// Expected graph after adding `sg`: plain set union by path.
inline PathSets union_with(PathSets host, const hgs::Subgraph& sg)
{
    for (const auto& v : sg.vertices) {
        host.vertices.insert(v.path);
    }
    for (const auto& e : sg.edges) {
        host.edges.insert({e.source, e.target});
    }
    return host;
}

// sum_{k=0}^{K-1} (beta s0 / b^k + beta0) with K = floor(log_b s0) levels.
inline double bound_partial_sum(double b, double s0, double beta, double beta0)
{
    auto terms = static_cast<long>(std::floor(std::log(s0) / std::log(b) + 1e-12));
    double sum = 0;
    for (long k = 0; k < terms; ++k) {
        sum += beta * s0 / std::pow(b, static_cast<double>(k)) + beta0;
    }
    return sum;
}

} // namespace oracle

#endif

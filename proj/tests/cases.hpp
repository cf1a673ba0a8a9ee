/*
 * Copyright (C) 2026 The hgs Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

// Small graphs, allocation states and requests for exhaustive matcher checks.

#ifndef HGS_TESTS_CASES_HPP
#define HGS_TESTS_CASES_HPP

#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "hgs/resource_graph.hpp"

namespace cases {

// Every request shape fitting in `nodes` x `sockets` x `cores`.
inline std::vector<std::string> requests(int nodes, int sockets, int cores)
{
    std::vector<std::string> out;
    int all_sockets = nodes * sockets;
    for (int c = 1; c <= all_sockets * cores; ++c) {
        out.push_back(fmt::format("core:{}", c));
    }
    for (int s = 1; s <= all_sockets; ++s) {
        out.push_back(fmt::format("socket:{}", s));
        for (int k = 1; k <= cores; ++k) {
            out.push_back(fmt::format("socket:{} core:{}", s, s * k));
        }
    }
    for (int n = 1; n <= nodes; ++n) {
        out.push_back(fmt::format("node:{}", n));
        for (int k = 1; k <= sockets * cores; ++k) {
            out.push_back(fmt::format("node:{} core:{}", n, n * k));
        }
        for (int j = 1; j <= sockets; ++j) {
            out.push_back(fmt::format("node:{} socket:{}", n, n * j));
            for (int k = 1; k <= cores; ++k) {
                out.push_back(fmt::format("node:{} socket:{} core:{}", n, n * j, n * j * k));
            }
        }
    }
    for (int k = 1; k <= cores; ++k) {
        out.push_back(fmt::format("[core:1] [socket:1 core:{}]", k));
        out.push_back(fmt::format("[socket:1] [core:{}]", k));
        out.push_back(fmt::format("node:1 [core:1] [socket:1 core:{}]", k));
        out.push_back(fmt::format("[node:1 core:{}] [socket:1]", k));
    }
    return out;
}

inline hgs::ResourceGraph graph(int nodes, int sockets, int cores)
{
    hgs::ClusterSpec spec;
    spec.nodes = nodes;
    spec.sockets_per_node = sockets;
    spec.cores_per_socket = cores;
    return hgs::build_synthetic_cluster(spec);
}

/*
 * Allocation states as lists of allocated paths: every subset of cores when
 * there are at most `exhaustive_cores`, else `sampled` seeded subsets; plus
 * each node or socket allocated on its own and with sampled core subsets.
 */
inline std::vector<std::vector<hgs::VertexId>> states(const hgs::ResourceGraph& g, std::size_t exhaustive_cores,
                                                      int sampled, std::uint64_t seed)
{
    std::vector<hgs::VertexId> cores;
    std::vector<hgs::VertexId> inner;
    for (const auto& [id, v] : g.vertices()) {
        if (v.type == hgs::ResourceType::Core) {
            cores.push_back(id);
        } else if (id != g.root()) {
            inner.push_back(id);
        }
    }
    std::sort(cores.begin(), cores.end());
    std::sort(inner.begin(), inner.end());
    std::mt19937_64 rng(seed);
    auto random_subset = [&] {
        std::vector<hgs::VertexId> s;
        for (auto c : cores) {
            if (rng() % 2) {
                s.push_back(c);
            }
        }
        return s;
    };
    std::vector<std::vector<hgs::VertexId>> out;
    if (cores.size() <= exhaustive_cores) {
        for (std::uint64_t mask = 0; mask < (std::uint64_t {1} << cores.size()); ++mask) {
            std::vector<hgs::VertexId> s;
            for (std::size_t i = 0; i < cores.size(); ++i) {
                if (mask >> i & 1) {
                    s.push_back(cores[i]);
                }
            }
            out.push_back(std::move(s));
        }
    } else {
        out.push_back({});
        for (int i = 0; i < sampled; ++i) {
            out.push_back(random_subset());
        }
    }
    for (auto v : inner) {
        out.push_back({v});
        for (int i = 0; i < 4; ++i) {
            auto s = random_subset();
            std::erase_if(s, [&](hgs::VertexId c) { return c == v; });
            s.push_back(v);
            out.push_back(std::move(s));
        }
    }
    return out;
}

} // namespace cases

#endif

/*
 * Copyright (C) 2026 The hgs Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include <random>

#include <gtest/gtest.h>

#include "hgs/error.hpp"
#include "hgs/hierarchy.hpp"
#include "hgs/matcher.hpp"
#include "hgs/resource_graph.hpp"
#include "hgs/subgraph.hpp"
#include "oracles.hpp"

using namespace hgs;

namespace {

ClusterSpec shape(std::int64_t nodes, std::int64_t sockets = 2, std::int64_t cores = 16)
{
    ClusterSpec c;
    c.nodes = nodes;
    c.sockets_per_node = sockets;
    c.cores_per_socket = cores;
    return c;
}

std::vector<VertexId> ids_of_type(const ResourceGraph& g, ResourceType type)
{
    std::vector<VertexId> out;
    for (const auto& [id, v] : g.vertices()) {
        if (v.type == type) {
            out.push_back(id);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Root plus the granted subtree, everything free.
ResourceGraph root_only(const ResourceGraph& like)
{
    ResourceGraph g;
    const auto& r = like.vertex(like.root());
    g.add_root(r.type, r.basename, r.unit_size, r.rank);
    return g;
}

} // namespace

TEST(ResourceGraph, SyntheticClusterSize)
{
    for (auto [n, s, c] : {std::tuple {1, 2, 16}, {2, 2, 16}, {4, 2, 16}, {8, 2, 16}, {3, 1, 5}}) {
        auto g = build_synthetic_cluster(shape(n, s, c));
        std::int64_t vertices = 1 + n * (1 + s * (1 + c));
        EXPECT_EQ(g.vertex_count(), static_cast<std::size_t>(vertices));
        EXPECT_EQ(g.size(), static_cast<std::size_t>(2 * vertices - 1));
        EXPECT_TRUE(oracle::aggregates_match(g));
    }
}

TEST(ResourceGraph, LadderLevelSizes)
{
    // One root plus whole nodes of 2 sockets x 16 cores.
    EXPECT_EQ(build_synthetic_cluster(shape(8)).size(), 561u);
    EXPECT_EQ(build_synthetic_cluster(shape(4)).size(), 281u);
    EXPECT_EQ(build_synthetic_cluster(shape(2)).size(), 141u);
    EXPECT_EQ(build_synthetic_cluster(shape(1)).size(), 71u);
}

TEST(ResourceGraph, TableRequestSubgraphSizes)
{
    const std::int64_t expected[] = {4480, 2240, 1120, 560, 280, 140, 70, 36};
    for (int k = 1; k <= 8; ++k) {
        auto g = build_synthetic_cluster(shape(128));
        auto sg = match_allocate(g, table_request(k), 1);
        ASSERT_TRUE(sg) << "t" << k;
        EXPECT_EQ(static_cast<std::int64_t>(sg->size()), expected[k - 1]) << "t" << k;
    }
}

TEST(ResourceGraph, PathsAndLookup)
{
    auto g = build_synthetic_cluster(shape(2, 2, 2));
    auto core = lookup_by_path(g, "/cluster0/node1/socket0/core1");
    ASSERT_TRUE(core);
    EXPECT_EQ(g.vertex(*core).type, ResourceType::Core);
    EXPECT_EQ(g.vertex(g.vertex(*core).parent).path, "/cluster0/node1/socket0");
    EXPECT_FALSE(lookup_by_path(g, "/cluster0/node2"));
    EXPECT_TRUE(g.has_edge("/cluster0/node1", "/cluster0/node1/socket0"));
    EXPECT_FALSE(g.has_edge("/cluster0", "/cluster0/node1/socket0"));
}

TEST(ResourceGraph, JgfRoundTripKeepsSize)
{
    auto g = build_synthetic_cluster(shape(128));
    auto sg = match_allocate(g, table_request(2), 7);
    ASSERT_TRUE(sg);
    ASSERT_EQ(sg->size(), 2240u);
    auto text = serialize_jgf(*sg);
    auto back = deserialize_jgf(text);
    EXPECT_EQ(back.size(), 2240u);
    EXPECT_EQ(serialize_jgf(back), text);

    auto whole = g.to_subgraph();
    auto copy = ResourceGraph::from_subgraph(deserialize_jgf(serialize_jgf(whole)));
    EXPECT_EQ(copy.hash(), g.hash());
    EXPECT_TRUE(oracle::aggregates_match(copy));
}

TEST(ResourceGraph, JgfRejectsMalformedDocuments)
{
    auto good = to_jgf(build_synthetic_cluster(shape(1, 1, 1)).to_subgraph());
    ASSERT_NO_THROW(from_jgf(good));
    auto rejected = [](const nlohmann::json& doc) {
        try {
            from_jgf(doc);
        } catch (const Error& e) {
            return e.kind() == ErrorKind::Parse;
        }
        return false;
    };
    auto doc = good;
    doc["graph"]["nodes"][1]["metadata"]["type"] = "warp";
    EXPECT_TRUE(rejected(doc));
    doc = good;
    doc["graph"]["edges"][0]["source"] = "99";
    EXPECT_TRUE(rejected(doc));
    doc = good;
    doc["graph"]["nodes"][2]["id"] = "1";
    EXPECT_TRUE(rejected(doc));
    doc = good;
    doc["graph"].erase("nodes");
    EXPECT_TRUE(rejected(doc));
    try {
        deserialize_jgf("not json");
        ADD_FAILURE();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Parse);
    }
}

TEST(ResourceGraph, AddSubgraphIsSetUnion)
{
    auto source = build_synthetic_cluster(shape(4, 2, 4));
    auto sg = match_allocate(source, parse_jobspec("node:2 socket:4 core:12"), 5);
    ASSERT_TRUE(sg);

    auto g = root_only(source);
    auto before = oracle::path_sets(g);
    auto r = g.add_subgraph(*sg, std::nullopt, AllocationSource::MatchGrow);
    EXPECT_EQ(oracle::path_sets(g), oracle::union_with(before, *sg));
    EXPECT_EQ(r.inserted.size(), sg->vertices.size());
    EXPECT_LE(r.touched, sg->vertices.size() + sg->edges.size());
    EXPECT_TRUE(oracle::aggregates_match(g));
    EXPECT_TRUE(g.has_job(5));

    auto h = g.hash();
    auto again = g.add_subgraph(*sg, std::nullopt, AllocationSource::MatchGrow);
    EXPECT_TRUE(again.inserted.empty());
    EXPECT_EQ(again.inserted_edges, 0u);
    EXPECT_EQ(g.hash(), h);
}

TEST(ResourceGraph, AddSubgraphPartialOverlap)
{
    auto source = build_synthetic_cluster(shape(2, 2, 2));
    auto first = match_allocate(source, parse_jobspec("core:1"), 1);
    auto second = match_allocate(source, parse_jobspec("core:1"), 2);
    ASSERT_TRUE(first && second);

    auto g = root_only(source);
    g.add_subgraph(*first, std::nullopt, AllocationSource::MatchGrow);
    auto before = oracle::path_sets(g);
    auto r = g.add_subgraph(*second, std::nullopt, AllocationSource::MatchGrow);
    // Shared node and socket context exist already; only the core is new.
    EXPECT_EQ(r.inserted, std::vector<std::string> {"/cluster0/node0/socket0/core1"});
    EXPECT_EQ(r.inserted_edges, 1u);
    EXPECT_EQ(oracle::path_sets(g), oracle::union_with(before, *second));
    EXPECT_TRUE(oracle::aggregates_match(g));
}

TEST(ResourceGraph, AddSubgraphRejectsBadInput)
{
    auto g = build_synthetic_cluster(shape(1, 1, 1));
    Subgraph orphan;
    orphan.vertices.push_back({0, ResourceType::Node, "n9", 1, "/elsewhere/n9", -1, {1}});
    EXPECT_THROW(g.add_subgraph(orphan, std::nullopt, AllocationSource::MatchGrow), Error);

    Subgraph retyped;
    retyped.anchors.push_back({0, "/cluster0"});
    retyped.vertices.push_back({1, ResourceType::Socket, "node0", 1, "/cluster0/node0", -1, {1}});
    retyped.edges.push_back({"/cluster0", "/cluster0/node0", "contains"});
    auto h = g.hash();
    EXPECT_THROW(g.add_subgraph(retyped, std::nullopt, AllocationSource::MatchGrow), Error);
    EXPECT_EQ(g.hash(), h);
}

TEST(ResourceGraph, UpdateMetadataTouchesSubgraphAndAncestors)
{
    auto g = build_synthetic_cluster(shape(4, 2, 4));
    auto ids = select(g, parse_jobspec("socket:1 core:4"));
    ASSERT_TRUE(ids);
    auto sg = g.emit(*ids, 9);
    std::size_t n = 0;
    for (const auto& v : sg.vertices) {
        n += v.granted();
    }
    // Ancestors above the subgraph: the root.
    std::size_t p = 1;
    auto touched = g.update_metadata(sg, 9, AllocationSource::MatchGrow);
    EXPECT_LE(touched, sg.vertices.size() + p);
    EXPECT_GE(touched, n);
    EXPECT_TRUE(oracle::aggregates_match(g));
    EXPECT_EQ(g.vertex(g.root()).free_count, 4 * 2 * 4 - 4);
}

TEST(ResourceGraph, RandomAllocateReleaseKeepsAggregates)
{
    std::mt19937_64 rng(42);
    auto g = build_synthetic_cluster(shape(3, 2, 3));
    auto cores = ids_of_type(g, ResourceType::Core);
    std::map<JobId, std::vector<VertexId>> held;
    JobId next = 1;
    for (int step = 0; step < 500; ++step) {
        if (held.empty() || rng() % 2) {
            std::vector<VertexId> pick;
            for (auto c : cores) {
                if (g.vertex(c).is_free() && rng() % 4 == 0) {
                    pick.push_back(c);
                }
            }
            if (!pick.empty()) {
                g.allocate(pick, next, AllocationSource::MatchAllocate);
                held[next++] = pick;
            }
        } else {
            auto it = std::next(held.begin(), static_cast<long>(rng() % held.size()));
            if (rng() % 2) {
                g.release_job(it->first);
                held.erase(it);
            } else {
                std::vector<VertexId> part(it->second.begin(), it->second.begin() + 1);
                g.release_vertices(part, it->first);
                it->second.erase(it->second.begin());
                if (it->second.empty()) {
                    held.erase(it);
                }
            }
        }
        ASSERT_TRUE(oracle::aggregates_match(g)) << "step " << step;
        ASSERT_TRUE(g.verify_aggregates());
    }
}

TEST(ResourceGraph, RemoveThenReaddRestoresHash)
{
    auto g = build_synthetic_cluster(shape(2, 2, 2));
    auto h = g.hash();
    auto node = *g.lookup("/cluster0/node1");
    auto whole = g.to_subgraph();
    auto removed = g.remove_subtree(node);
    EXPECT_EQ(removed.size(), 1u + 2 * 3);
    EXPECT_FALSE(g.lookup("/cluster0/node1/socket1/core0"));
    EXPECT_TRUE(oracle::aggregates_match(g));
    g.add_subgraph(whole, std::nullopt, AllocationSource::MatchAllocate);
    EXPECT_EQ(g.hash(), h);
}

TEST(ResourceGraph, HashIgnoresVertexIds)
{
    ResourceGraph a;
    auto ra = a.add_root(ResourceType::Cluster, "c");
    a.add_child(ra, ResourceType::Node, "n0");
    a.add_child(ra, ResourceType::Node, "n1");

    ResourceGraph b;
    auto rb = b.add_root(ResourceType::Cluster, "c", 1, -1, 50);
    b.add_child(rb, ResourceType::Node, "n1", 1, -1, 3);
    b.add_child(rb, ResourceType::Node, "n0", 1, -1, 9);
    EXPECT_EQ(a.hash(), b.hash());

    b.allocate(std::vector<VertexId> {3}, 1, AllocationSource::MatchAllocate);
    EXPECT_NE(a.hash(), b.hash());
}

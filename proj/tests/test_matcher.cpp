/*
 * Copyright (C) 2026 The hgs Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include <chrono>

#include <gtest/gtest.h>

#include "cases.hpp"
#include "hgs/error.hpp"
#include "hgs/matcher.hpp"
#include "oracles.hpp"

using namespace hgs;

namespace {

std::optional<std::vector<std::string>> matched_paths(const ResourceGraph& g, const JobSpec& spec,
                                                      MatchOptions options = {})
{
    auto ids = select(g, spec, options);
    if (!ids) {
        return std::nullopt;
    }
    std::vector<std::string> out;
    for (auto id : *ids) {
        out.push_back(g.vertex(id).path);
    }
    return out;
}

void allocate_paths(ResourceGraph& g, const std::vector<std::string>& paths, JobId job)
{
    std::vector<VertexId> ids;
    for (const auto& p : paths) {
        ids.push_back(*g.lookup(p));
    }
    g.allocate(ids, job, AllocationSource::MatchAllocate);
}

} // namespace

TEST(Matcher, LowestPathsFirst)
{
    auto g = cases::graph(2, 2, 4);
    auto got = matched_paths(g, parse_jobspec("core:2"));
    ASSERT_TRUE(got);
    EXPECT_EQ(*got, (std::vector<std::string> {"/cluster0/node0/socket0/core0", "/cluster0/node0/socket0/core1"}));

    allocate_paths(g, {"/cluster0/node0/socket0/core0"}, 1);
    got = matched_paths(g, parse_jobspec("socket:1 core:4"));
    ASSERT_TRUE(got);
    EXPECT_EQ(got->front(), "/cluster0/node0/socket1");
}

TEST(Matcher, BacktracksAcrossSiblingEntries)
{
    // socket0 has 3 cores and socket1 has 2; taking the first core from
    // socket0 would leave no socket with 3 free cores.
    ResourceGraph g;
    auto root = g.add_root(ResourceType::Cluster, "cluster0");
    auto node = g.add_child(root, ResourceType::Node, "node0");
    auto s0 = g.add_child(node, ResourceType::Socket, "socket0");
    auto s1 = g.add_child(node, ResourceType::Socket, "socket1");
    for (int i = 0; i < 3; ++i) {
        g.add_child(s0, ResourceType::Core, "core" + std::to_string(i));
    }
    for (int i = 0; i < 2; ++i) {
        g.add_child(s1, ResourceType::Core, "core" + std::to_string(i));
    }
    auto spec = parse_jobspec("[core:1] [socket:1 core:3]");
    auto got = matched_paths(g, spec);
    ASSERT_TRUE(got);
    EXPECT_EQ(*got, oracle::brute_force_match(g, spec).value());
    EXPECT_EQ(got->front(), "/cluster0/node0/socket1/core0");
}

TEST(Matcher, AllocatedIntermediateBlocksSubtree)
{
    auto g = cases::graph(1, 2, 2);
    allocate_paths(g, {"/cluster0/node0/socket0"}, 1);
    auto got = matched_paths(g, parse_jobspec("core:2"));
    ASSERT_TRUE(got);
    EXPECT_EQ(got->front(), "/cluster0/node0/socket1/core0");
    EXPECT_FALSE(matched_paths(g, parse_jobspec("core:3")));
}

TEST(Matcher, SelectedVertexIsNotPassedThrough)
{
    auto g = cases::graph(1, 2, 2);
    // The socket taken by the first entry cannot also supply its cores.
    auto got = matched_paths(g, parse_jobspec("[socket:1] [core:2]"));
    ASSERT_TRUE(got);
    EXPECT_EQ((*got)[0], "/cluster0/node0/socket0");
    EXPECT_EQ((*got)[1], "/cluster0/node0/socket1/core0");
    EXPECT_FALSE(matched_paths(g, parse_jobspec("[socket:1] [core:3]")));
}

TEST(Matcher, AgreesWithBruteForceOnSmallGraphs)
{
    auto requests = cases::requests(2, 2, 2);
    std::size_t checked = 0;
    for (int n = 1; n <= 2; ++n) {
        for (int s = 1; s <= 2; ++s) {
            for (int c = 0; c <= 2; ++c) {
                auto base = cases::graph(n, s, c);
                for (const auto& state : cases::states(base, 4, 16, 7)) {
                    auto g = base;
                    if (!state.empty()) {
                        g.allocate(state, 99, AllocationSource::MatchAllocate);
                    }
                    for (const auto& text : requests) {
                        auto spec = parse_jobspec(text);
                        auto want = oracle::brute_force_match(g, spec);
                        ASSERT_EQ(matched_paths(g, spec), want) << text << " on " << n << "x" << s << "x" << c;
                        ASSERT_EQ(matched_paths(g, spec, {.prune = false}), want) << text;
                        ++checked;
                    }
                }
            }
        }
    }
    EXPECT_GT(checked, 1000u);
}

TEST(Matcher, MatchAllocateAndCancel)
{
    auto g = cases::graph(2, 2, 2);
    auto h = g.hash();
    auto spec = parse_jobspec("node:1 socket:2 core:4");
    auto sg = match_allocate(g, spec, 3);
    ASSERT_TRUE(sg);
    EXPECT_TRUE(g.has_job(3));
    EXPECT_TRUE(oracle::aggregates_match(g));
    EXPECT_THROW(match_allocate(g, spec, 3), Error);

    auto after = g.hash();
    EXPECT_FALSE(match_allocate(g, parse_jobspec("node:2"), 4));
    EXPECT_EQ(g.hash(), after);

    cancel(g, 3);
    EXPECT_EQ(g.hash(), h);
    EXPECT_FALSE(g.has_job(3));
}

TEST(Matcher, InfeasibleCountsFailFast)
{
    auto g = cases::graph(128, 2, 16);
    auto start = std::chrono::steady_clock::now();
    EXPECT_FALSE(select(g, parse_jobspec("node:200")));
    EXPECT_FALSE(select(g, parse_jobspec("node:129 socket:258 core:4128")));
    // Every node missing one core: no node can host a full request.
    std::vector<VertexId> one_each;
    for (const auto& [id, v] : g.vertices()) {
        if (v.type == ResourceType::Core && v.basename == "core0" && v.path.find("socket0") != std::string::npos) {
            one_each.push_back(id);
        }
    }
    g.allocate(one_each, 1, AllocationSource::MatchAllocate);
    EXPECT_FALSE(select(g, parse_jobspec("node:2 socket:4 core:64")));
    EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 5.0);
}

TEST(Matcher, EmptyRequestIsRejected)
{
    auto g = cases::graph(1, 1, 1);
    EXPECT_THROW(select(g, parse_jobspec("instance-type=t2.micro")), Error);
}

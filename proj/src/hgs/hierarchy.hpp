/*
 * Copyright (C) 2026 The hgs Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef HGS_HIERARCHY_HPP
#define HGS_HIERARCHY_HPP

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "hgs/instance.hpp"
#include "hgs/jobspec.hpp"
#include "hgs/provider.hpp"
#include "hgs/resource_graph.hpp"
#include "hgs/rpc.hpp"

namespace hgs {

// Job ids used when building a ladder. Each level holds its child's
// resources under kChildJob and the rest under kFillerJob; the leaf holds
// everything under kLeafJob. Experiments grow kGrowJob at the leaf.
inline constexpr JobId kChildJob = 1;
inline constexpr JobId kFillerJob = 2;
inline constexpr JobId kLeafJob = 1;
inline constexpr JobId kGrowJob = 100;

// Child graph: a copy of the parent's root plus the granted subgraph, all free.
std::unique_ptr<SchedulerInstance> spawn_child(SchedulerInstance& parent, const JobSpec& spec, JobId job);

// True iff every child vertex and edge not in `excluded` exists in `parent`
// (compared by path).
bool check_inclusion(const ResourceGraph& child, const ResourceGraph& parent,
                     const std::set<std::string>& excluded = {});

struct LevelConfig {
    ClusterSpec cluster;            // level 0
    std::int64_t nodes = 0;         // deeper levels: whole nodes shaped like level 0's
    std::optional<JobSpec> request; // deeper levels: explicit request instead
};

struct ProviderConfig {
    int level = 0;
    bool specialization = false;
    std::uint64_t seed = 0;
    std::string name = "ec2";
    Catalog catalog = default_catalog();
};

struct SuiteEntry {
    std::string name;
    JobSpec spec;
};

enum class TransportMode { InProcess, Tcp };

struct ExperimentConfig {
    std::vector<LevelConfig> levels;
    std::vector<SuiteEntry> suite;
    int repetitions = 1;
    TransportMode transport = TransportMode::InProcess;
    std::set<int> inter_links {1}; // link i joins level i to level i-1
    double inter_latency_ms = 0.0;
    double timeout_s = 30.0;
    bool fill = true;
    std::optional<ProviderConfig> provider;
    std::uint64_t seed = 0;
    std::string out = "out";
    std::string host = "127.0.0.1";
    std::uint16_t base_port = 0; // multi-process mode: level i listens on base_port + i
};

ExperimentConfig config_from_json(const nlohmann::json& body, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& config);

// Table-1 style requests: k = 1..7 ask for 64 >> (k-1) nodes of 2 sockets
// with 16 cores each; k = 8 asks for one socket of 16 cores.
JobSpec table_request(int k);
// "t1..t8", "t1,t4,t7", or a path to a file with one request per line.
std::vector<SuiteEntry> parse_suite(const std::string& text);

// Request spawning level `index` (>= 1) from its parent.
JobSpec level_request(const ExperimentConfig& config, std::size_t index);

// Build every level without links. Deterministic for a given config.
std::vector<std::unique_ptr<SchedulerInstance>> build_chain(const ExperimentConfig& config);

Transport link_transport(const ExperimentConfig& config, int level);

/// A whole hierarchy in this process, wired with in-process or TCP links.
class Hierarchy {
public:
    explicit Hierarchy(const ExperimentConfig& config);
    ~Hierarchy();
    Hierarchy(const Hierarchy&) = delete;
    Hierarchy& operator=(const Hierarchy&) = delete;

    std::size_t depth() const noexcept { return levels_.size(); }
    SchedulerInstance& level(std::size_t i) { return *levels_.at(i); }
    SchedulerInstance& leaf() { return *levels_.back(); }
    MockProvider* provider() noexcept { return provider_.get(); }

    // Inclusion between every adjacent pair, ignoring the child's external set.
    bool inclusion_holds() const;
    std::vector<std::uint64_t> hashes() const;
    // Restore the state captured right after construction.
    void reset();
    std::vector<TimingSample> take_samples();
    // Events from all levels in process-wide order.
    std::vector<InstanceEvent> take_events();

private:
    ExperimentConfig config_;
    std::vector<std::unique_ptr<SchedulerInstance>> levels_;
    std::vector<std::unique_ptr<TcpServer>> servers_;
    std::vector<InstanceState> snapshots_;
    std::shared_ptr<MockProvider> provider_;
};

} // namespace hgs

#endif

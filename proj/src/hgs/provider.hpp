/*
 * Copyright (C) 2026 The hgs Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef HGS_PROVIDER_HPP
#define HGS_PROVIDER_HPP

#include <cstdint>
#include <mutex>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hgs/jobspec.hpp"
#include "hgs/subgraph.hpp"

namespace hgs {

struct InstanceType {
    std::string name;
    std::int64_t cpus = 1;
    std::int64_t memory_gb = 1;
    std::int64_t gpus = 0;
    std::vector<std::string> zones;
    int cost_rank = 0;
};

struct Catalog {
    std::vector<InstanceType> types;
    std::size_t max_fleet_types = 300;

    const InstanceType* find(std::string_view name) const;
};

Catalog default_catalog();
Catalog catalog_from_json(const nlohmann::json& body);
nlohmann::json to_json(const Catalog& catalog);

/// Source of resources outside the hierarchy. `root` is the requesting
/// graph's root path; returned subgraphs are anchored at zone vertices
/// below it and every vertex is granted to `job`.
class ExternalApi {
public:
    virtual ~ExternalApi() = default;
    virtual Subgraph external_api(const JobSpec& spec, std::string_view root, JobId job) = 0;
    // Give back instances previously returned (by node path).
    virtual void release(const std::vector<std::string>& node_paths) = 0;
};

/// Deterministic stand-in for a cloud API. Instances are named by a counter;
/// type and zone choices for seeded_random fleets come from the seeded
/// generator.
class MockProvider final : public ExternalApi {
public:
    explicit MockProvider(Catalog catalog = default_catalog(), std::uint64_t seed = 0, std::string name = "ec2");

    Subgraph external_api(const JobSpec& spec, std::string_view root, JobId job) override;
    Subgraph fleet_request(const FleetHint& request, std::string_view root, JobId job);
    void release(const std::vector<std::string>& node_paths) override;

    const Catalog& catalog() const noexcept { return catalog_; }
    // Cheapest type covering the plain request (per node instance).
    const InstanceType& covering_type(const JobSpec& spec) const;
    std::size_t live_instances() const;

    // Zone vertex basename for `zone`.
    std::string zone_basename(std::string_view zone) const;

private:
    void add_instance(Subgraph& sg, const InstanceType& type, const std::string& zone, std::string_view root, JobId job);

    Catalog catalog_;
    std::string name_;
    std::mt19937_64 rng_;
    std::uint64_t counter_ = 0;
    std::set<std::string> live_;
    mutable std::mutex mu_;
};

// Vertices plus in-edges of one instance subtree of `type`.
std::int64_t instance_size(const InstanceType& type) noexcept;

} // namespace hgs

#endif

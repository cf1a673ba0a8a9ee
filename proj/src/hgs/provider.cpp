/*
 * Copyright (C) 2026 The hgs Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "hgs/provider.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "hgs/error.hpp"

namespace hgs {

const InstanceType* Catalog::find(std::string_view name) const
{
    auto it = std::find_if(types.begin(), types.end(), [name](const InstanceType& t) { return t.name == name; });
    return it == types.end() ? nullptr : &*it;
}

Catalog default_catalog()
{
    const std::vector<std::string> zones {"us-east-1a", "us-east-1b"};
    Catalog c;
    c.types = {
        {"t2.micro", 1, 1, 0, zones, 0},   {"t2.small", 1, 2, 0, zones, 1},    {"t2.medium", 2, 4, 0, zones, 2},
        {"t2.large", 2, 8, 0, zones, 3},   {"t2.xlarge", 4, 16, 0, zones, 4},  {"t2.2xlarge", 8, 32, 0, zones, 5},
        {"g2.2xlarge", 8, 15, 1, zones, 6}, {"g3.4xlarge", 16, 128, 4, zones, 7},
    };
    return c;
}

Catalog catalog_from_json(const nlohmann::json& body)
{
    try {
        Catalog c;
        c.max_fleet_types = body.value("max_fleet_types", std::size_t {300});
        for (const auto& t : body.at("types")) {
            InstanceType it;
            it.name = t.at("name").get<std::string>();
            it.cpus = t.at("cpus").get<std::int64_t>();
            it.memory_gb = t.at("memory_gb").get<std::int64_t>();
            it.gpus = t.value("gpus", std::int64_t {0});
            it.zones = t.at("zones").get<std::vector<std::string>>();
            it.cost_rank = t.value("cost_rank", static_cast<int>(c.types.size()));
            if (it.cpus < 1 || it.memory_gb < 1 || it.gpus < 0 || it.zones.empty()) {
                throw Error(ErrorKind::Config, "catalog type " + it.name + " has invalid resources or no zones");
            }
            if (c.find(it.name)) {
                throw Error(ErrorKind::Config, "catalog repeats type " + it.name);
            }
            c.types.push_back(std::move(it));
        }
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Config, std::string("bad catalog: ") + e.what());
    }
}

nlohmann::json to_json(const Catalog& catalog)
{
    nlohmann::json types = nlohmann::json::array();
    for (const auto& t : catalog.types) {
        types.push_back({{"name", t.name},
                         {"cpus", t.cpus},
                         {"memory_gb", t.memory_gb},
                         {"gpus", t.gpus},
                         {"zones", t.zones},
                         {"cost_rank", t.cost_rank}});
    }
    return {{"max_fleet_types", catalog.max_fleet_types}, {"types", types}};
}

std::int64_t instance_size(const InstanceType& type) noexcept
{
    return 2 * (1 + type.cpus + type.memory_gb + type.gpus);
}

MockProvider::MockProvider(Catalog catalog, std::uint64_t seed, std::string name)
    : catalog_(std::move(catalog)), name_(std::move(name)), rng_(seed)
{
    if (catalog_.types.empty()) {
        throw Error(ErrorKind::Config, "provider catalog is empty");
    }
}

std::string MockProvider::zone_basename(std::string_view zone) const
{
    return fmt::format("{}{}.{}", kExternalPrefix, name_, zone);
}

std::size_t MockProvider::live_instances() const
{
    std::lock_guard lock(mu_);
    return live_.size();
}

void MockProvider::add_instance(Subgraph& sg, const InstanceType& type, const std::string& zone,
                                std::string_view root, JobId job)
{
    auto next_id = static_cast<VertexId>(sg.anchors.size() + sg.vertices.size());
    auto zone_path = fmt::format("{}/{}", root, zone_basename(zone));
    if (std::none_of(sg.anchors.begin(), sg.anchors.end(), [&](const AnchorRecord& a) { return a.path == zone_path; })) {
        sg.anchors.push_back({next_id++, zone_path});
    }
    auto node_name = fmt::format("i-{:08x}", ++counter_);
    auto node_path = zone_path + "/" + node_name;
    auto vertex = [&](ResourceType kind, std::string basename, const std::string& parent) {
        auto path = parent + "/" + basename;
        sg.vertices.push_back({next_id++, kind, std::move(basename), 1, path, -1, {job}});
        sg.edges.push_back({parent, path, "contains"});
    };
    vertex(ResourceType::Node, node_name, zone_path);
    for (std::int64_t i = 0; i < type.cpus; ++i) {
        vertex(ResourceType::Core, "core" + std::to_string(i), node_path);
    }
    for (std::int64_t i = 0; i < type.gpus; ++i) {
        vertex(ResourceType::Gpu, "gpu" + std::to_string(i), node_path);
    }
    for (std::int64_t i = 0; i < type.memory_gb; ++i) {
        vertex(ResourceType::Memory, "memory" + std::to_string(i), node_path);
    }
    live_.insert(node_path);
}

const InstanceType& MockProvider::covering_type(const JobSpec& spec) const
{
    std::int64_t nodes = std::max<std::int64_t>(1, total_count(spec, ResourceType::Node));
    auto per_node = [&](ResourceType t) { return (total_count(spec, t) + nodes - 1) / nodes; };
    auto cpus = per_node(ResourceType::Core);
    auto gpus = per_node(ResourceType::Gpu);
    auto memory = per_node(ResourceType::Memory);
    const InstanceType* best = nullptr;
    for (const auto& t : catalog_.types) {
        if (t.cpus >= cpus && t.gpus >= gpus && t.memory_gb >= memory
            && (!best || std::tie(t.cost_rank, t.name) < std::tie(best->cost_rank, best->name))) {
            best = &t;
        }
    }
    if (!best) {
        throw Error(ErrorKind::Provider, "no catalog type covers the request");
    }
    return *best;
}

Subgraph MockProvider::external_api(const JobSpec& spec, std::string_view root, JobId job)
{
    if (spec.fleet) {
        return fleet_request(*spec.fleet, root, job);
    }
    std::lock_guard lock(mu_);
    Subgraph sg;
    if (spec.instance_type) {
        const auto* type = catalog_.find(*spec.instance_type);
        if (!type) {
            throw Error(ErrorKind::Provider, "unknown instance type " + *spec.instance_type);
        }
        add_instance(sg, *type, type->zones.front(), root, job);
    } else {
        const auto& type = covering_type(spec);
        auto count = std::max<std::int64_t>(1, total_count(spec, ResourceType::Node));
        for (std::int64_t i = 0; i < count; ++i) {
            add_instance(sg, type, type.zones.front(), root, job);
        }
    }
    sg.canonicalize();
    return sg;
}

Subgraph MockProvider::fleet_request(const FleetHint& request, std::string_view root, JobId job)
{
    if (request.total_count < 1) {
        throw Error(ErrorKind::Provider, "fleet total count must be >= 1");
    }
    if (request.allowed_types.empty()) {
        throw Error(ErrorKind::Provider, "fleet allowed-type list is empty");
    }
    if (request.allowed_types.size() > catalog_.max_fleet_types) {
        throw Error(ErrorKind::Provider, fmt::format("fleet allows {} types; the limit is {}",
                                                     request.allowed_types.size(), catalog_.max_fleet_types));
    }
    std::vector<const InstanceType*> allowed;
    for (const auto& name : request.allowed_types) {
        const auto* t = catalog_.find(name);
        if (!t) {
            throw Error(ErrorKind::Provider, "unknown instance type " + name);
        }
        allowed.push_back(t);
    }
    std::lock_guard lock(mu_);
    Subgraph sg;
    if (request.policy == FleetPolicy::CheapestFirst) {
        const auto* t = *std::min_element(allowed.begin(), allowed.end(), [](const auto* a, const auto* b) {
            return std::tie(a->cost_rank, a->name) < std::tie(b->cost_rank, b->name);
        });
        for (std::int64_t i = 0; i < request.total_count; ++i) {
            add_instance(sg, *t, t->zones.front(), root, job);
        }
    } else {
        for (std::int64_t i = 0; i < request.total_count; ++i) {
            std::uniform_int_distribution<std::size_t> pick_type(0, allowed.size() - 1);
            const auto* t = allowed[pick_type(rng_)];
            std::uniform_int_distribution<std::size_t> pick_zone(0, t->zones.size() - 1);
            add_instance(sg, *t, t->zones[pick_zone(rng_)], root, job);
        }
    }
    sg.canonicalize();
    return sg;
}

void MockProvider::release(const std::vector<std::string>& node_paths)
{
    std::lock_guard lock(mu_);
    for (const auto& p : node_paths) {
        if (!live_.contains(p)) {
            throw Error(ErrorKind::Provider, "release of unknown instance " + p);
        }
    }
    for (const auto& p : node_paths) {
        live_.erase(p);
    }
}

} // namespace hgs

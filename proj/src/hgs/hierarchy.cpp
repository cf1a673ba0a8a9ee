/*
 * Copyright (C) 2026 The hgs Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "hgs/hierarchy.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "hgs/error.hpp"

namespace hgs {

std::unique_ptr<SchedulerInstance> spawn_child(SchedulerInstance& parent, const JobSpec& spec, JobId job)
{
    auto grant = parent.match_allocate(spec, job);
    if (!grant) {
        throw Error(ErrorKind::Refused,
                    fmt::format("level {} cannot satisfy the child request '{}'", parent.level(), to_text(spec)));
    }
    const auto& pg = parent.graph();
    const auto& root = pg.vertex(pg.root());
    ResourceGraph g;
    g.add_root(root.type, root.basename, root.unit_size, root.rank);
    std::vector<std::string> context;
    for (auto& v : grant->vertices) {
        if (!v.granted()) {
            context.push_back(v.path);
        }
        v.jobs.clear();
    }
    g.add_subgraph(*grant, std::nullopt, AllocationSource::MatchAllocate);
    auto child = std::make_unique<SchedulerInstance>(parent.level() + 1, std::move(g));
    child->add_context(context);
    child->set_parent(std::make_shared<InProcessLink>(parent.handler()), job);
    return child;
}

bool check_inclusion(const ResourceGraph& child, const ResourceGraph& parent, const std::set<std::string>& excluded)
{
    for (const auto& [id, v] : child.vertices()) {
        if (excluded.contains(v.path)) {
            continue;
        }
        if (!parent.lookup(v.path)) {
            return false;
        }
        if (v.parent != kNoVertex && !parent.has_edge(child.vertex(v.parent).path, v.path)) {
            return false;
        }
    }
    return true;
}

JobSpec table_request(int k)
{
    if (k < 1 || k > 8) {
        throw Error(ErrorKind::InvalidArgument, "table requests are t1..t8");
    }
    if (k == 8) {
        return parse_jobspec("socket:1 core:16");
    }
    auto nodes = std::int64_t {64} >> (k - 1);
    return parse_jobspec(fmt::format("node:{} socket:{} core:{}", nodes, 2 * nodes, 32 * nodes));
}

std::vector<SuiteEntry> parse_suite(const std::string& text)
{
    auto table = [](const std::string& name) -> std::optional<int> {
        if (name.size() == 2 && (name[0] == 't' || name[0] == 'T') && name[1] >= '1' && name[1] <= '8') {
            return name[1] - '0';
        }
        return std::nullopt;
    };
    std::vector<SuiteEntry> suite;
    auto dots = text.find("..");
    if (dots != std::string::npos) {
        auto lo = table(text.substr(0, dots));
        auto hi = table(text.substr(dots + 2));
        if (lo && hi && *lo <= *hi) {
            for (int k = *lo; k <= *hi; ++k) {
                suite.push_back({"t" + std::to_string(k), table_request(k)});
            }
            return suite;
        }
    }
    std::stringstream ss(text);
    std::string item;
    bool all_table = true;
    while (std::getline(ss, item, ',')) {
        if (auto k = table(item)) {
            suite.push_back({"t" + std::to_string(*k), table_request(*k)});
        } else {
            all_table = false;
        }
    }
    if (all_table && !suite.empty()) {
        return suite;
    }
    std::ifstream in(text);
    if (!in) {
        throw Error(ErrorKind::Config, "suite '" + text + "' is neither t1..t8 nor a readable file");
    }
    suite.clear();
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos || line.front() == '#') {
            continue;
        }
        suite.push_back({fmt::format("r{}", lineno), parse_jobspec(line)});
    }
    if (suite.empty()) {
        throw Error(ErrorKind::Config, "suite file " + text + " has no requests");
    }
    return suite;
}

namespace {

ClusterSpec cluster_from_json(const nlohmann::json& j)
{
    ClusterSpec c;
    c.nodes = j.at("nodes").get<std::int64_t>();
    c.sockets_per_node = j.value("sockets_per_node", std::int64_t {0});
    c.cores_per_socket = j.value("cores_per_socket", std::int64_t {0});
    c.gpus_per_node = j.value("gpus_per_node", std::int64_t {0});
    c.memory_per_socket = j.value("memory_per_socket", std::int64_t {0});
    c.name = j.value("name", std::string("cluster0"));
    return c;
}

nlohmann::json cluster_json(const ClusterSpec& c)
{
    return {{"nodes", c.nodes},
            {"sockets_per_node", c.sockets_per_node},
            {"cores_per_socket", c.cores_per_socket},
            {"gpus_per_node", c.gpus_per_node},
            {"memory_per_socket", c.memory_per_socket},
            {"name", c.name}};
}

} // namespace

ExperimentConfig config_from_json(const nlohmann::json& body, const std::filesystem::path& base_dir)
{
    try {
        ExperimentConfig c;
        const auto& levels = body.at("levels");
        if (!levels.is_array() || levels.empty()) {
            throw Error(ErrorKind::Config, "config needs a nonempty 'levels' list");
        }
        for (std::size_t i = 0; i < levels.size(); ++i) {
            const auto& l = levels[i];
            LevelConfig lc;
            if (i == 0) {
                lc.cluster = cluster_from_json(l);
            } else if (l.contains("jobspec")) {
                lc.request = parse_jobspec(l.at("jobspec").get<std::string>());
            } else {
                lc.nodes = l.at("nodes").get<std::int64_t>();
                if (lc.nodes < 1) {
                    throw Error(ErrorKind::Config, fmt::format("level {} must have at least one node", i));
                }
            }
            c.levels.push_back(std::move(lc));
        }
        if (auto s = body.find("suite"); s != body.end()) {
            if (s->is_string()) {
                c.suite = parse_suite(s->get<std::string>());
            } else {
                for (const auto& e : *s) {
                    if (e.is_string()) {
                        auto part = parse_suite(e.get<std::string>());
                        c.suite.insert(c.suite.end(), part.begin(), part.end());
                    } else {
                        c.suite.push_back({e.at("name").get<std::string>(),
                                           parse_jobspec(e.at("jobspec").get<std::string>())});
                    }
                }
            }
        }
        c.repetitions = body.value("repetitions", 1);
        if (c.repetitions < 1) {
            throw Error(ErrorKind::Config, "repetitions must be >= 1");
        }
        auto transport = body.value("transport", std::string("inproc"));
        if (transport == "inproc") {
            c.transport = TransportMode::InProcess;
        } else if (transport == "tcp") {
            c.transport = TransportMode::Tcp;
        } else {
            throw Error(ErrorKind::Config, "transport must be inproc or tcp, got '" + transport + "'");
        }
        if (auto il = body.find("inter_links"); il != body.end()) {
            c.inter_links.clear();
            if (il->is_string() && il->get<std::string>() == "all") {
                for (std::size_t i = 1; i < c.levels.size(); ++i) {
                    c.inter_links.insert(static_cast<int>(i));
                }
            } else {
                for (const auto& v : *il) {
                    c.inter_links.insert(v.get<int>());
                }
            }
        }
        c.inter_latency_ms = body.value("inter_latency_ms", 0.0);
        c.timeout_s = body.value("timeout_s", 30.0);
        c.fill = body.value("fill", true);
        c.seed = body.value("seed", std::uint64_t {0});
        c.out = body.value("out", std::string("out"));
        c.host = body.value("host", std::string("127.0.0.1"));
        c.base_port = body.value("base_port", std::uint16_t {0});
        if (auto p = body.find("provider"); p != body.end() && !p->is_null()) {
            ProviderConfig pc;
            pc.level = p->value("level", 0);
            pc.specialization = p->value("specialization", false);
            pc.seed = p->value("seed", c.seed);
            pc.name = p->value("name", std::string("ec2"));
            if (auto cat = p->find("catalog"); cat != p->end()) {
                if (cat->is_string()) {
                    auto path = base_dir / cat->get<std::string>();
                    std::ifstream in(path);
                    if (!in) {
                        throw Error(ErrorKind::Config, "cannot read catalog " + path.string());
                    }
                    pc.catalog = catalog_from_json(nlohmann::json::parse(in));
                } else {
                    pc.catalog = catalog_from_json(*cat);
                }
            }
            if (pc.level < 0 || static_cast<std::size_t>(pc.level) >= c.levels.size()) {
                throw Error(ErrorKind::Config, "provider level is outside the hierarchy");
            }
            c.provider = std::move(pc);
        }
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Config, std::string("bad config: ") + e.what());
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Config) {
            throw;
        }
        throw Error(ErrorKind::Config, std::string("bad config: ") + e.what());
    }
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Config, "cannot read config " + path.string());
    }
    nlohmann::json body;
    try {
        body = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Config, path.string() + ": " + e.what());
    }
    return config_from_json(body, path.parent_path());
}

nlohmann::json to_json(const ExperimentConfig& c)
{
    nlohmann::json levels = nlohmann::json::array();
    for (std::size_t i = 0; i < c.levels.size(); ++i) {
        const auto& l = c.levels[i];
        if (i == 0) {
            levels.push_back(cluster_json(l.cluster));
        } else if (l.request) {
            levels.push_back({{"jobspec", to_text(*l.request)}});
        } else {
            levels.push_back({{"nodes", l.nodes}});
        }
    }
    nlohmann::json suite = nlohmann::json::array();
    for (const auto& s : c.suite) {
        suite.push_back({{"name", s.name}, {"jobspec", to_text(s.spec)}});
    }
    nlohmann::json j = {{"levels", levels},
                        {"suite", suite},
                        {"repetitions", c.repetitions},
                        {"transport", c.transport == TransportMode::Tcp ? "tcp" : "inproc"},
                        {"inter_links", c.inter_links},
                        {"inter_latency_ms", c.inter_latency_ms},
                        {"timeout_s", c.timeout_s},
                        {"fill", c.fill},
                        {"seed", c.seed},
                        {"out", c.out},
                        {"host", c.host},
                        {"base_port", c.base_port}};
    if (c.provider) {
        j["provider"] = {{"level", c.provider->level},
                         {"specialization", c.provider->specialization},
                         {"seed", c.provider->seed},
                         {"name", c.provider->name},
                         {"catalog", to_json(c.provider->catalog)}};
    }
    return j;
}

JobSpec level_request(const ExperimentConfig& config, std::size_t index)
{
    const auto& l = config.levels.at(index);
    if (l.request) {
        return *l.request;
    }
    const auto& shape = config.levels.front().cluster;
    RequestEntry node {ResourceType::Node, l.nodes, {}};
    if (shape.sockets_per_node > 0) {
        RequestEntry socket {ResourceType::Socket, shape.sockets_per_node, {}};
        if (shape.cores_per_socket > 0) {
            socket.children.push_back({ResourceType::Core, shape.cores_per_socket, {}});
        }
        if (shape.memory_per_socket > 0) {
            socket.children.push_back({ResourceType::Memory, shape.memory_per_socket, {}});
        }
        node.children.push_back(std::move(socket));
    }
    if (shape.gpus_per_node > 0) {
        node.children.push_back({ResourceType::Gpu, shape.gpus_per_node, {}});
    }
    JobSpec spec;
    spec.resources.push_back(std::move(node));
    return spec;
}

Transport link_transport(const ExperimentConfig& config, int level)
{
    return config.inter_links.contains(level) ? Transport::Inter : Transport::Intra;
}

std::vector<std::unique_ptr<SchedulerInstance>> build_chain(const ExperimentConfig& config)
{
    if (config.levels.empty()) {
        throw Error(ErrorKind::Config, "hierarchy needs at least one level");
    }
    std::vector<std::unique_ptr<SchedulerInstance>> levels;
    levels.push_back(std::make_unique<SchedulerInstance>(0, build_synthetic_cluster(config.levels.front().cluster)));
    for (std::size_t i = 1; i < config.levels.size(); ++i) {
        levels.push_back(spawn_child(*levels.back(), level_request(config, i), kChildJob));
    }
    if (config.fill) {
        for (std::size_t i = 1; i < levels.size(); ++i) {
            auto& g = levels[i]->mutable_graph();
            std::vector<VertexId> free;
            for (const auto& [id, v] : g.vertices()) {
                if (id != g.root() && v.is_free()) {
                    free.push_back(id);
                }
            }
            std::sort(free.begin(), free.end());
            if (!free.empty()) {
                g.allocate(free, i + 1 == levels.size() ? kLeafJob : kFillerJob, AllocationSource::MatchAllocate);
            }
        }
    }
    // Links refer to the temporary parents; callers wire their own.
    for (auto& l : levels) {
        if (l->level() > 0) {
            l->set_parent(nullptr, kChildJob);
        }
    }
    return levels;
}

Hierarchy::Hierarchy(const ExperimentConfig& config) : config_(config)
{
    levels_ = build_chain(config_);
    servers_.resize(levels_.size());
    for (std::size_t i = 1; i < levels_.size(); ++i) {
        auto label = link_transport(config_, static_cast<int>(i));
        auto& parent = *levels_[i - 1];
        std::shared_ptr<Link> link;
        if (config_.transport == TransportMode::Tcp && label == Transport::Inter) {
            if (!servers_[i - 1]) {
                servers_[i - 1] = std::make_unique<TcpServer>(parent.handler(), config_.host, 0);
            }
            TcpLinkOptions options;
            options.label = label;
            options.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(config_.timeout_s * 1000));
            options.latency = std::chrono::microseconds(static_cast<std::int64_t>(config_.inter_latency_ms * 1000));
            link = std::make_shared<TcpLink>(config_.host, servers_[i - 1]->port(), options);
        } else {
            link = std::make_shared<InProcessLink>(parent.handler(), label);
        }
        levels_[i]->set_parent(std::move(link), kChildJob);
    }
    if (config_.provider) {
        const auto& pc = *config_.provider;
        provider_ = std::make_shared<MockProvider>(pc.catalog, pc.seed, pc.name);
        levels_.at(static_cast<std::size_t>(pc.level))->set_provider(provider_, pc.specialization);
    }
    for (const auto& l : levels_) {
        snapshots_.push_back(l->snapshot());
    }
}

Hierarchy::~Hierarchy()
{
    for (auto& s : servers_) {
        if (s) {
            s->stop();
        }
    }
    for (auto it = levels_.rbegin(); it != levels_.rend(); ++it) {
        it->reset();
    }
}

bool Hierarchy::inclusion_holds() const
{
    for (std::size_t i = 1; i < levels_.size(); ++i) {
        if (!check_inclusion(levels_[i]->graph(), levels_[i - 1]->graph(), levels_[i]->external_paths())) {
            return false;
        }
    }
    return true;
}

std::vector<std::uint64_t> Hierarchy::hashes() const
{
    std::vector<std::uint64_t> out;
    for (const auto& l : levels_) {
        out.push_back(l->hash());
    }
    return out;
}

void Hierarchy::reset()
{
    for (std::size_t i = 0; i < levels_.size(); ++i) {
        levels_[i]->restore(snapshots_[i]);
    }
}

std::vector<TimingSample> Hierarchy::take_samples()
{
    std::vector<TimingSample> out;
    for (auto& l : levels_) {
        auto s = l->take_samples();
        out.insert(out.end(), s.begin(), s.end());
    }
    return out;
}

std::vector<InstanceEvent> Hierarchy::take_events()
{
    std::vector<InstanceEvent> out;
    for (auto& l : levels_) {
        auto e = l->take_events();
        out.insert(out.end(), e.begin(), e.end());
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.seq < b.seq; });
    return out;
}

} // namespace hgs

/*
 * Copyright (C) 2026 The hgs Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "hgs/instance.hpp"

#include <algorithm>
#include <chrono>

#include <spdlog/spdlog.h>

#include "hgs/error.hpp"
#include "hgs/matcher.hpp"

namespace hgs {

namespace {

using Clock = std::chrono::steady_clock;

std::atomic<std::uint64_t> g_event_seq {0};

double since(Clock::time_point t)
{
    return std::chrono::duration<double>(Clock::now() - t).count();
}

bool is_instance_node(const std::string& path)
{
    auto zone = parent_path(path);
    return !zone.empty() && basename_of(zone).starts_with(kExternalPrefix);
}

bool within(const std::string& path, const std::string& top)
{
    return path == top || (path.size() > top.size() && path.starts_with(top) && path[top.size()] == '/');
}

} // namespace

SchedulerInstance::SchedulerInstance(int level, ResourceGraph graph) : level_(level), graph_(std::move(graph))
{
    if (level < 0) {
        throw Error(ErrorKind::InvalidArgument, "instance level must be >= 0");
    }
    if (graph_.root() == kNoVertex) {
        throw Error(ErrorKind::InvalidArgument, "instance graph has no root");
    }
}

void SchedulerInstance::set_parent(std::shared_ptr<Link> link, JobId parent_job)
{
    if (level_ == 0 && link) {
        throw Error(ErrorKind::InvalidArgument, "the top-level instance cannot have a parent");
    }
    parent_ = std::move(link);
    parent_job_ = parent_job;
}

void SchedulerInstance::set_provider(std::shared_ptr<ExternalApi> provider, bool specialization)
{
    provider_ = std::move(provider);
    specialization_ = specialization;
}

std::string SchedulerInstance::root_path() const
{
    return graph_.vertex(graph_.root()).path;
}

void SchedulerInstance::record(Phase phase, std::int64_t n, double seconds, Transport transport)
{
    samples_.push_back({level_, phase, n, seconds, transport});
}

void SchedulerInstance::event(const char* op, std::size_t n)
{
    events_.push_back({g_event_seq.fetch_add(1), level_, op, n});
}

GrowResult SchedulerInstance::match_grow(const JobSpec& spec, JobId job)
{
    std::lock_guard lock(mu_);
    return grow_locked(spec, job);
}

std::optional<Subgraph> SchedulerInstance::match_allocate(const JobSpec& spec, JobId job)
{
    std::lock_guard lock(mu_);
    auto reserved = context_ids();
    MatchOptions options;
    options.reserved = &reserved;
    return hgs::match_allocate(graph_, spec, job, AllocationSource::MatchAllocate, options);
}

void SchedulerInstance::cancel(JobId job)
{
    std::lock_guard lock(mu_);
    hgs::cancel(graph_, job);
}

void SchedulerInstance::shrink(const std::vector<std::string>& paths, JobId job)
{
    std::lock_guard lock(mu_);
    shrink_locked(paths, job);
}

RpcMessage SchedulerInstance::call_parent(MessageKind kind, nlohmann::json payload, double* rtt_s)
{
    RpcMessage request {kind, next_request_.fetch_add(1), std::move(payload)};
    auto t = Clock::now();
    auto reply = parent_->call(request);
    if (rtt_s) {
        *rtt_s = since(t);
    }
    raise_if_error(reply);
    return reply;
}

GrowResult SchedulerInstance::grow_locked(const JobSpec& spec, JobId job)
{
    auto start = Clock::now();
    GrowResult result;
    LevelTiming timing;
    timing.level = level_;
    timing.transport = parent_ ? parent_->transport() : Transport::Intra;
    std::vector<LevelTiming> upstream;
    auto n_request = request_size(spec);

    std::optional<std::vector<VertexId>> ids;
    if (!spec.resources.empty()) {
        auto t = Clock::now();
        auto reserved = context_ids();
        MatchOptions options;
        options.reserved = &reserved;
        ids = select(graph_, spec, options);
        timing.match_s = since(t);
        record(Phase::Match, n_request, timing.match_s, Transport::Intra);
    }

    if (ids) {
        auto sg = graph_.emit(*ids, job);
        auto t = Clock::now();
        run_grow(graph_, sg, false, job);
        timing.add_update_s = since(t);
        event("update", sg.size());
        result.outcome = GrowOutcome::SatisfiedLocally;
        result.subgraph = std::move(sg);
    } else if (provider_) {
        auto t = Clock::now();
        auto sg = provider_->external_api(spec, root_path(), job);
        auto origin = GrantOrigin::Provider;
        if (!specialization_ && parent_) {
            origin = GrantOrigin::ProviderShared;
            call_parent(MessageKind::MatchGrowRequest,
                        {{"op", "adopt"}, {"subgraph", to_jgf(sg)}, {"job", parent_job_}}, nullptr);
        }
        timing.comms_s = since(t);
        t = Clock::now();
        Subgraph out;
        try {
            out = receive(sg, job, origin);
        } catch (...) {
            compensate(sg, origin);
            throw;
        }
        timing.add_update_s = since(t);
        record(Phase::AddUpdate, static_cast<std::int64_t>(sg.size()), timing.add_update_s, Transport::Intra);
        result.outcome = GrowOutcome::SatisfiedByProvider;
        result.subgraph = std::move(out);
    } else if (parent_) {
        double rtt = 0;
        auto reply = call_parent(MessageKind::MatchGrowRequest,
                                 {{"op", "grow"}, {"jobspec", to_json(spec)}, {"job", parent_job_}}, &rtt);
        const auto& p = reply.payload;
        timing.comms_s = std::max(0.0, rtt - p.at("service_s").get<double>());
        for (const auto& t : p.at("timings")) {
            upstream.push_back(level_timing_from_json(t));
        }
        auto outcome = parse_grow_outcome(p.at("outcome").get<std::string>());
        if (!outcome) {
            throw Error(ErrorKind::Framing, "reply carries an unknown outcome");
        }
        result.levels_traversed = 1 + p.at("levels").get<int>();
        if (*outcome != GrowOutcome::Failed) {
            auto sg = from_jgf(p.at("subgraph"));
            record(Phase::Comms, static_cast<std::int64_t>(sg.size()), timing.comms_s, timing.transport);
            auto t = Clock::now();
            Subgraph out;
            try {
                out = receive(sg, job, GrantOrigin::Parent);
            } catch (...) {
                compensate(sg, GrantOrigin::Parent);
                throw;
            }
            timing.add_update_s = since(t);
            record(Phase::AddUpdate, static_cast<std::int64_t>(sg.size()), timing.add_update_s, Transport::Intra);
            result.outcome = *outcome == GrowOutcome::SatisfiedByProvider ? GrowOutcome::SatisfiedByProvider
                                                                           : GrowOutcome::SatisfiedByParent;
            result.subgraph = std::move(out);
        }
    }

    timing.n = result.subgraph ? static_cast<std::int64_t>(result.subgraph->size()) : n_request;
    timing.total_s = since(start);
    result.timings.push_back(timing);
    result.timings.insert(result.timings.end(), upstream.begin(), upstream.end());
    return result;
}

Subgraph SchedulerInstance::receive(const Subgraph& sg, JobId job, GrantOrigin origin)
{
    auto root = root_path();
    std::vector<std::string> zones;
    for (const auto& a : sg.anchors) {
        if (graph_.lookup(a.path)) {
            continue;
        }
        auto base = basename_of(a.path);
        if (parent_path(a.path) != root || !base.starts_with(kExternalPrefix)) {
            throw Error(ErrorKind::InvalidArgument, "subgraph anchor " + a.path + " is not in the graph");
        }
        zones.push_back(a.path);
    }

    RunGrowStats stats;
    std::vector<std::string> created;
    try {
        for (const auto& z : zones) {
            graph_.add_child(graph_.root(), ResourceType::Zone, std::string(basename_of(z)));
            created.push_back(z);
        }
        if (add_hook_) {
            add_hook_(sg);
        }
        stats = run_grow(graph_, sg, true, job);
    } catch (...) {
        for (const auto& z : created) {
            graph_.remove_subtree(*graph_.lookup(z));
        }
        throw;
    }
    event("add", sg.size());

    inserted_.insert(created.begin(), created.end());
    inserted_.insert(stats.inserted.begin(), stats.inserted.end());
    for (const auto& r : sg.granted_roots()) {
        grants_[r] = origin;
    }
    if (origin == GrantOrigin::Provider && parent_) {
        external_.insert(created.begin(), created.end());
        external_.insert(stats.inserted.begin(), stats.inserted.end());
    }
    if (zones.empty()) {
        return sg;
    }
    // Re-emit so the payload passed down names the new zone vertices.
    std::vector<VertexId> granted;
    for (const auto& v : sg.vertices) {
        if (v.granted()) {
            granted.push_back(*graph_.lookup(v.path));
        }
    }
    return graph_.emit(granted);
}

void SchedulerInstance::compensate(const Subgraph& sg, GrantOrigin origin) noexcept
{
    try {
        if (origin == GrantOrigin::Parent || origin == GrantOrigin::ProviderShared) {
            call_parent(MessageKind::ShrinkNotify, {{"paths", sg.granted_roots()}, {"job", parent_job_}}, nullptr);
        }
        if (origin == GrantOrigin::Provider || origin == GrantOrigin::ProviderShared) {
            std::vector<std::string> nodes;
            for (const auto& v : sg.vertices) {
                if (is_instance_node(v.path)) {
                    nodes.push_back(v.path);
                }
            }
            provider_->release(nodes);
        }
        spdlog::warn("level {}: grow failed after resources were granted; released them upstream", level_);
    } catch (const std::exception& e) {
        spdlog::error("level {}: compensating shrink failed: {}", level_, e.what());
    }
}

void SchedulerInstance::adopt_locked(const Subgraph& sg, JobId job)
{
    if (parent_) {
        call_parent(MessageKind::MatchGrowRequest, {{"op", "adopt"}, {"subgraph", to_jgf(sg)}, {"job", parent_job_}},
                    nullptr);
    }
    receive(sg, job, GrantOrigin::Adopted);
}

void SchedulerInstance::add_context(const std::vector<std::string>& paths)
{
    std::lock_guard lock(mu_);
    context_.insert(paths.begin(), paths.end());
}

// Grown-in vertices outside every grant carried no resources of their own,
// only the path to the granted ones.
std::unordered_set<VertexId> SchedulerInstance::context_ids() const
{
    std::unordered_set<VertexId> ids;
    for (const auto& p : context_) {
        if (auto id = graph_.lookup(p)) {
            ids.insert(*id);
        }
    }
    for (const auto& p : inserted_) {
        if (!grant_of(p)) {
            ids.insert(*graph_.lookup(p));
        }
    }
    return ids;
}

std::optional<GrantOrigin> SchedulerInstance::grant_of(const std::string& path) const
{
    auto root = root_path();
    for (auto p = path; !p.empty() && p != root; p = parent_path(p)) {
        if (auto it = grants_.find(p); it != grants_.end()) {
            return it->second;
        }
    }
    return std::nullopt;
}

void SchedulerInstance::prune_context(const std::string& path)
{
    auto root = root_path();
    for (auto p = path; !p.empty() && p != root; p = parent_path(p)) {
        auto id = graph_.lookup(p);
        if (!id || !inserted_.contains(p)) {
            return;
        }
        const auto& v = graph_.vertex(*id);
        if (!v.children.empty() || !v.is_free()) {
            return;
        }
        graph_.remove_subtree(*id);
        inserted_.erase(p);
        grants_.erase(p);
        external_.erase(p);
    }
}

void SchedulerInstance::shrink_locked(const std::vector<std::string>& input, JobId job)
{
    // Drop paths nested in another requested path.
    std::vector<std::string> paths = input;
    std::sort(paths.begin(), paths.end(), [](const auto& a, const auto& b) { return path_less(a, b); });
    paths.erase(std::unique(paths.begin(), paths.end()), paths.end());
    std::vector<std::string> tops;
    for (const auto& p : paths) {
        if (tops.empty() || !within(p, tops.back())) {
            tops.push_back(p);
        }
    }

    for (const auto& p : tops) {
        auto id = graph_.lookup(p);
        if (!id) {
            throw Error(ErrorKind::InvalidArgument, "shrink: no vertex " + p);
        }
        if (*id == graph_.root()) {
            throw Error(ErrorKind::InvalidArgument, "shrink: cannot remove the root");
        }
        for (auto v : graph_.subtree(*id)) {
            const auto& vx = graph_.vertex(v);
            if (vx.job && *vx.job != job) {
                throw Error(ErrorKind::Refused, "shrink: " + vx.path + " is allocated to job " + std::to_string(*vx.job));
            }
        }
    }

    std::vector<std::string> upward;
    std::vector<std::string> returned;
    for (const auto& p : tops) {
        auto origin = grant_of(p);
        bool from_provider = origin == GrantOrigin::Provider || origin == GrantOrigin::ProviderShared;
        if (origin && origin != GrantOrigin::Provider && parent_) {
            upward.push_back(p);
        }
        auto id = *graph_.lookup(p);
        std::vector<std::string> gone;
        if (inserted_.contains(p)) {
            gone = graph_.remove_subtree(id);
            event("remove", 2 * gone.size());
        } else {
            std::vector<VertexId> mine;
            for (auto v : graph_.subtree(id)) {
                const auto& vx = graph_.vertex(v);
                if (vx.job) {
                    mine.push_back(v);
                }
                gone.push_back(vx.path);
            }
            graph_.release_vertices(mine, job);
            event("release", mine.size());
        }
        for (const auto& g : gone) {
            if (inserted_.erase(g) > 0) {
                external_.erase(g);
            }
            grants_.erase(g);
            if (from_provider && is_instance_node(g)) {
                returned.push_back(g);
            }
        }
        prune_context(parent_path(p));
    }

    if (!upward.empty()) {
        call_parent(MessageKind::ShrinkNotify, {{"paths", upward}, {"job", parent_job_}}, nullptr);
    }
    if (!returned.empty() && provider_) {
        provider_->release(returned);
    }
}

RpcMessage SchedulerInstance::handle(const RpcMessage& request)
{
    std::lock_guard lock(mu_);
    auto start = Clock::now();
    const auto& p = request.payload;
    try {
        switch (request.kind) {
        case MessageKind::MatchGrowRequest: {
            auto op = p.at("op").get<std::string>();
            auto job = p.at("job").get<JobId>();
            if (op == "adopt") {
                adopt_locked(from_jgf(p.at("subgraph")), job);
                return {MessageKind::MatchGrowReply, request.id, {{"outcome", "adopted"}, {"service_s", since(start)}}};
            }
            if (op != "grow") {
                throw Error(ErrorKind::InvalidArgument, "unknown request op '" + op + "'");
            }
            auto result = grow_locked(jobspec_from_json(p.at("jobspec")), job);
            nlohmann::json timings = nlohmann::json::array();
            for (const auto& t : result.timings) {
                timings.push_back(to_json(t));
            }
            nlohmann::json reply = {{"outcome", to_string(result.outcome)},
                                    {"levels", result.levels_traversed},
                                    {"timings", std::move(timings)},
                                    {"subgraph", result.subgraph ? to_jgf(*result.subgraph) : nlohmann::json()}};
            reply["service_s"] = since(start);
            return {MessageKind::MatchGrowReply, request.id, std::move(reply)};
        }
        case MessageKind::ShrinkNotify:
            shrink_locked(p.at("paths").get<std::vector<std::string>>(), p.at("job").get<JobId>());
            return {MessageKind::ShrinkNotify, request.id, {{"ok", true}, {"service_s", since(start)}}};
        default:
            throw Error(ErrorKind::InvalidArgument, std::string("unexpected message ") + to_string(request.kind));
        }
    } catch (const nlohmann::json::exception& e) {
        return error_reply(request.id, ErrorKind::Parse, e.what());
    } catch (const Error& e) {
        return error_reply(request.id, e.kind(), e.what());
    }
}

Handler SchedulerInstance::handler()
{
    return [this](const RpcMessage& m) { return handle(m); };
}

std::uint64_t SchedulerInstance::hash() const
{
    std::lock_guard lock(mu_);
    return graph_.hash();
}

std::set<std::string> SchedulerInstance::external_paths() const
{
    std::lock_guard lock(mu_);
    return external_;
}

std::vector<TimingSample> SchedulerInstance::take_samples()
{
    std::lock_guard lock(mu_);
    return std::exchange(samples_, {});
}

std::vector<InstanceEvent> SchedulerInstance::take_events()
{
    std::lock_guard lock(mu_);
    return std::exchange(events_, {});
}

InstanceState SchedulerInstance::snapshot() const
{
    std::lock_guard lock(mu_);
    return {graph_, inserted_, grants_, external_};
}

void SchedulerInstance::restore(const InstanceState& state)
{
    std::lock_guard lock(mu_);
    graph_ = state.graph;
    inserted_ = state.inserted;
    grants_ = state.grants;
    external_ = state.external;
}

void SchedulerInstance::set_add_hook(std::function<void(const Subgraph&)> hook)
{
    std::lock_guard lock(mu_);
    add_hook_ = std::move(hook);
}

} // namespace hgs

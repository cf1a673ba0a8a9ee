/*
 * Copyright (C) 2026 The hgs Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef HGS_INSTANCE_HPP
#define HGS_INSTANCE_HPP

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "hgs/grow.hpp"
#include "hgs/jobspec.hpp"
#include "hgs/perfmodel.hpp"
#include "hgs/provider.hpp"
#include "hgs/resource_graph.hpp"
#include "hgs/rpc.hpp"

namespace hgs {

// Where a granted subtree came from.
enum class GrantOrigin {
    Parent,         // returned by the parent's MatchGrow
    Provider,       // from this level's provider, kept out of ancestor graphs
    ProviderShared, // from this level's provider, also added to every ancestor
    Adopted,        // pushed up by a descendant that used its provider
};

struct InstanceEvent {
    std::uint64_t seq = 0; // process-wide order
    int level = 0;
    std::string op;        // "add", "update", "remove", "release"
    std::size_t n = 0;
};

struct InstanceState {
    ResourceGraph graph;
    std::unordered_set<std::string> inserted;
    std::map<std::string, GrantOrigin> grants;
    std::set<std::string> external;
};

/// One level of the scheduling hierarchy. Public operations and RPC
/// handling are serialized on an internal mutex; requests only ever flow
/// to the parent, so a chain of instances cannot deadlock.
class SchedulerInstance {
public:
    SchedulerInstance(int level, ResourceGraph graph);

    int level() const noexcept { return level_; }
    void set_parent(std::shared_ptr<Link> link, JobId parent_job);
    void set_provider(std::shared_ptr<ExternalApi> provider, bool specialization);
    bool has_parent() const noexcept { return parent_ != nullptr; }
    bool has_provider() const noexcept { return provider_ != nullptr; }
    bool specialization() const noexcept { return specialization_; }
    JobId parent_job() const noexcept { return parent_job_; }
    const Link* parent_link() const noexcept { return parent_.get(); }

    // Local match, then the provider or the parent, then add on the way down.
    GrowResult match_grow(const JobSpec& spec, JobId job);
    std::optional<Subgraph> match_allocate(const JobSpec& spec, JobId job);
    void cancel(JobId job);
    // Give back whole subtrees held by `job`. Grown-in subtrees are removed
    // here first, then above (or returned to the provider).
    void shrink(const std::vector<std::string>& paths, JobId job);

    RpcMessage handle(const RpcMessage& request);
    Handler handler();

    // Unsynchronized view; only for use when no request is in flight.
    const ResourceGraph& graph() const noexcept { return graph_; }
    ResourceGraph& mutable_graph() noexcept { return graph_; }
    std::uint64_t hash() const;
    std::set<std::string> external_paths() const;

    // Mark vertices present only to attach granted ones; they are never
    // selected by a local match.
    void add_context(const std::vector<std::string>& paths);

    std::vector<TimingSample> take_samples();
    std::vector<InstanceEvent> take_events();

    InstanceState snapshot() const;
    void restore(const InstanceState& state);

    // Called before each subgraph add; throwing simulates a failure there.
    void set_add_hook(std::function<void(const Subgraph&)> hook);

private:
    GrowResult grow_locked(const JobSpec& spec, JobId job);
    void adopt_locked(const Subgraph& subgraph, JobId job);
    void shrink_locked(const std::vector<std::string>& paths, JobId job);
    Subgraph receive(const Subgraph& subgraph, JobId job, GrantOrigin origin);
    void compensate(const Subgraph& subgraph, GrantOrigin origin) noexcept;
    void prune_context(const std::string& path);
    std::optional<GrantOrigin> grant_of(const std::string& path) const;
    std::unordered_set<VertexId> context_ids() const;
    RpcMessage call_parent(MessageKind kind, nlohmann::json payload, double* rtt_s);
    std::string root_path() const;
    void record(Phase phase, std::int64_t n, double seconds, Transport transport);
    void event(const char* op, std::size_t n);

    int level_;
    ResourceGraph graph_;
    std::shared_ptr<Link> parent_;
    JobId parent_job_ = 0;
    std::shared_ptr<ExternalApi> provider_;
    bool specialization_ = false;

    std::unordered_set<std::string> inserted_;
    std::map<std::string, GrantOrigin> grants_;
    std::set<std::string> external_;
    std::set<std::string> context_;

    std::vector<TimingSample> samples_;
    std::vector<InstanceEvent> events_;
    std::function<void(const Subgraph&)> add_hook_;
    std::atomic<std::uint64_t> next_request_ {1};
    mutable std::mutex mu_;
};

} // namespace hgs

#endif

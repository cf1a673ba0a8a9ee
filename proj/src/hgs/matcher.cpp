/*
 * Copyright (C) 2026 The hgs Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "hgs/matcher.hpp"

#include <functional>
#include <map>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include "hgs/error.hpp"

namespace hgs {

bool path_less(std::string_view a, std::string_view b) noexcept
{
    for (;;) {
        if (a.empty() || b.empty()) {
            return a.empty() && !b.empty();
        }
        a.remove_prefix(1);
        b.remove_prefix(1);
        auto ea = a.find('/');
        auto eb = b.find('/');
        auto ca = a.substr(0, ea);
        auto cb = b.substr(0, eb);
        if (ca != cb) {
            return ca < cb;
        }
        a = ea == std::string_view::npos ? std::string_view {} : a.substr(ea);
        b = eb == std::string_view::npos ? std::string_view {} : b.substr(eb);
    }
}

namespace {

class Search {
public:
    Search(const ResourceGraph& graph, const MatchOptions& options) : g_(graph), options_(options) { }

    std::optional<std::vector<VertexId>> run(const JobSpec& spec)
    {
        auto done = [] { return true; };
        if (!place(g_.root(), spec.resources, 0, 0, kNoVertex, done)) {
            return std::nullopt;
        }
        return chosen_;
    }

private:
    using Cont = std::function<bool()>;

    // Free pruning-kind vertices under `id` not yet claimed by this search.
    std::int64_t available(VertexId id) const
    {
        auto it = claimed_.find(id);
        return g_.vertex(id).free_count - (it == claimed_.end() ? 0 : it->second);
    }

    bool open(VertexId id) const { return g_.vertex(id).is_free() && !selected_.contains(id); }
    bool reserved(VertexId id) const { return options_.reserved && options_.reserved->contains(id); }

    // Candidates for `entry` under `anchor` after `after`, with the
    // intermediates each one passes through.
    void candidates(VertexId anchor, const RequestEntry& entry, std::int64_t demand, VertexId after,
                    std::vector<std::pair<VertexId, std::vector<VertexId>>>& out) const
    {
        std::vector<VertexId> via;
        std::function<void(VertexId)> walk = [&](VertexId id) {
            for (auto c : g_.vertex(id).children) {
                const auto& v = g_.vertex(c);
                if (options_.prune && available(c) < demand) {
                    continue;
                }
                if (v.type == entry.type) {
                    if (open(c) && !blocked_.contains(c) && !reserved(c)
                        && (after == kNoVertex || path_less(g_.vertex(after).path, v.path))) {
                        out.emplace_back(c, via);
                    }
                    continue;
                }
                if (!may_contain(v.type, entry.type) || !open(c)) {
                    continue;
                }
                via.push_back(c);
                walk(c);
                via.pop_back();
            }
        };
        walk(anchor);
    }

    void claim(VertexId id, std::int64_t delta)
    {
        if (g_.vertex(id).type != kPruneType) {
            return;
        }
        for (auto v = id; v != kNoVertex; v = g_.vertex(v).parent) {
            claimed_[v] += delta;
        }
    }

    // Place instances `k..count` of entries[idx..] under `anchor`, then run
    // `next`.
    bool place(VertexId anchor, const std::vector<RequestEntry>& entries, std::size_t idx, std::int64_t k,
               VertexId after, const Cont& next)
    {
        if (idx == entries.size()) {
            return next();
        }
        const auto& entry = entries[idx];
        if (k == entry.count) {
            return place(anchor, entries, idx + 1, 0, kNoVertex, next);
        }
        auto demand = prune_demand(entry);
        if (options_.prune && available(anchor) < demand * (entry.count - k)) {
            return false;
        }
        // Instances of one entry sit in disjoint subtrees, so a candidate
        // that cannot host an instance stays useless until this entry is
        // abandoned.
        auto key = std::make_tuple(anchor, static_cast<const void*>(&entries), idx);
        if (k == 0) {
            dead_[key].clear();
        }
        auto& dead = dead_[key];
        std::vector<std::pair<VertexId, std::vector<VertexId>>> cands;
        candidates(anchor, entry, demand, after, cands);
        for (std::size_t i = 0; i < cands.size(); ++i) {
            if (static_cast<std::int64_t>(cands.size() - i) < entry.count - k) {
                return false;
            }
            const auto& [c, via] = cands[i];
            if (dead.contains(c)) {
                continue;
            }
            selected_.insert(c);
            chosen_.push_back(c);
            claim(c, 1);
            for (auto b : via) {
                ++blocked_[b];
            }
            bool reached = false;
            bool ok = place(c, entry.children, 0, 0, kNoVertex, [&, c = c] {
                reached = true;
                return place(anchor, entries, idx, k + 1, c, next);
            });
            if (ok) {
                return true;
            }
            if (!reached) {
                dead_[key].insert(c);
            }
            for (auto b : via) {
                if (--blocked_[b] == 0) {
                    blocked_.erase(b);
                }
            }
            claim(c, -1);
            chosen_.pop_back();
            selected_.erase(c);
        }
        return false;
    }

    const ResourceGraph& g_;
    const MatchOptions& options_;
    std::vector<VertexId> chosen_;
    std::unordered_set<VertexId> selected_;
    std::unordered_map<VertexId, int> blocked_;
    std::unordered_map<VertexId, std::int64_t> claimed_;
    std::map<std::tuple<VertexId, const void*, std::size_t>, std::unordered_set<VertexId>> dead_;
};

} // namespace

std::optional<std::vector<VertexId>> select(const ResourceGraph& graph, const JobSpec& spec,
                                            const MatchOptions& options)
{
    if (spec.resources.empty()) {
        throw Error(ErrorKind::InvalidArgument, "request has no resource entries");
    }
    if (graph.root() == kNoVertex) {
        return std::nullopt;
    }
    return Search(graph, options).run(spec);
}

std::optional<Subgraph> match_allocate(ResourceGraph& graph, const JobSpec& spec, JobId job, AllocationSource source,
                                       const MatchOptions& options)
{
    if (graph.has_job(job)) {
        throw Error(ErrorKind::DuplicateJob, "job " + std::to_string(job) + " already holds resources");
    }
    auto ids = select(graph, spec, options);
    if (!ids) {
        return std::nullopt;
    }
    graph.allocate(*ids, job, source);
    return graph.emit(*ids);
}

void cancel(ResourceGraph& graph, JobId job)
{
    graph.release_job(job);
}

} // namespace hgs

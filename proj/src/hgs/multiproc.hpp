/*
 * Copyright (C) 2026 The hgs Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef HGS_MULTIPROC_HPP
#define HGS_MULTIPROC_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <sys/types.h>

#include "hgs/bench.hpp"
#include "hgs/hierarchy.hpp"
#include "hgs/instance.hpp"
#include "hgs/rpc.hpp"

namespace hgs {

/*
 * Wraps an instance's handler with the control ops a driver in another
 * process needs: "reset", "hashes" and "samples". Each is answered for this
 * level and every level above it, top level first.
 */
Handler control_handler(SchedulerInstance& instance, InstanceState snapshot, std::shared_ptr<Link> parent);

struct ServeOptions {
    std::size_t level = 0;
    std::optional<std::uint16_t> parent_port;
    std::uint16_t port = 0;
};

// Serve one level of `config` until `should_stop` returns true. The level's
// graph is rebuilt from the config, so every process agrees on it.
void serve_level(const ExperimentConfig& config, const ServeOptions& options,
                 const std::function<void(std::uint16_t)>& on_listening, const std::function<bool()>& should_stop);

/// Levels 0..depth-2 as child processes of `exe serve`, each linked to the
/// one above it over TCP.
class ProcessChain {
public:
    ProcessChain(const std::filesystem::path& exe, const ExperimentConfig& config);
    ~ProcessChain();
    ProcessChain(const ProcessChain&) = delete;
    ProcessChain& operator=(const ProcessChain&) = delete;

    // Port of the level the leaf connects to.
    std::uint16_t leaf_parent_port() const { return ports_.back(); }

private:
    void shutdown() noexcept;

    std::filesystem::path config_path_;
    std::vector<pid_t> pids_;
    std::vector<int> stdin_fds_;
    std::vector<std::uint16_t> ports_;
};

/// The leaf instance in this process, the rest of the hierarchy behind a TCP
/// link.
class RemoteDriver final : public Driver {
public:
    RemoteDriver(const ExperimentConfig& config, std::uint16_t parent_port);

    std::size_t depth() const override { return depth_; }
    GrowResult grow(const JobSpec& spec, JobId job) override;
    void reset() override;
    std::vector<std::uint64_t> hashes() override;
    std::vector<TimingSample> take_samples() override;
    SchedulerInstance& leaf() { return *leaf_; }

private:
    nlohmann::json control(const std::string& op);

    std::size_t depth_ = 0;
    std::unique_ptr<SchedulerInstance> leaf_;
    InstanceState snapshot_;
    std::shared_ptr<Link> parent_;
    std::shared_ptr<MockProvider> provider_;
    std::uint64_t next_id_ = 1;
};

} // namespace hgs

#endif

/*
 * Copyright (C) 2026 The hgs Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "hgs/multiproc.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "hgs/error.hpp"

extern char** environ;

namespace hgs {

namespace {

std::shared_ptr<Link> make_link(const ExperimentConfig& config, std::size_t level, std::uint16_t port)
{
    TcpLinkOptions options;
    options.label = link_transport(config, static_cast<int>(level));
    options.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(config.timeout_s * 1000));
    if (options.label == Transport::Inter) {
        options.latency = std::chrono::microseconds(static_cast<std::int64_t>(config.inter_latency_ms * 1000));
    }
    return std::make_shared<TcpLink>(config.host, port, options);
}

std::unique_ptr<SchedulerInstance> take_level(const ExperimentConfig& config, std::size_t level,
                                              std::shared_ptr<MockProvider>& provider)
{
    auto chain = build_chain(config);
    if (level >= chain.size()) {
        throw Error(ErrorKind::Config, fmt::format("level {} is outside a {}-level hierarchy", level, chain.size()));
    }
    auto inst = std::move(chain[level]);
    if (config.provider && static_cast<std::size_t>(config.provider->level) == level) {
        const auto& pc = *config.provider;
        provider = std::make_shared<MockProvider>(pc.catalog, pc.seed, pc.name);
        inst->set_provider(provider, pc.specialization);
    }
    return inst;
}

} // namespace

Handler control_handler(SchedulerInstance& instance, InstanceState snapshot, std::shared_ptr<Link> parent)
{
    auto state = std::make_shared<InstanceState>(std::move(snapshot));
    auto ids = std::make_shared<std::atomic<std::uint64_t>>(1);
    return [&instance, state, parent, ids](const RpcMessage& request) -> RpcMessage {
        const auto& p = request.payload;
        if (request.kind != MessageKind::MatchGrowRequest || !p.is_object() || !p.contains("op")
            || !p.at("op").is_string()) {
            return instance.handle(request);
        }
        auto op = p.at("op").get<std::string>();
        if (op != "reset" && op != "hashes" && op != "samples") {
            return instance.handle(request);
        }
        try {
            nlohmann::json above = nlohmann::json::array();
            if (parent) {
                auto reply = parent->call({MessageKind::MatchGrowRequest, ids->fetch_add(1), {{"op", op}}});
                raise_if_error(reply);
                above = reply.payload.at("values");
            }
            if (op == "reset") {
                instance.restore(*state);
            } else if (op == "hashes") {
                above.push_back(instance.hash());
            } else {
                for (const auto& s : instance.take_samples()) {
                    above.push_back(to_json(s));
                }
            }
            return {MessageKind::MatchGrowReply, request.id, {{"values", std::move(above)}}};
        } catch (const Error& e) {
            return error_reply(request.id, e.kind(), e.what());
        } catch (const std::exception& e) {
            return error_reply(request.id, ErrorKind::Internal, e.what());
        }
    };
}

void serve_level(const ExperimentConfig& config, const ServeOptions& options,
                 const std::function<void(std::uint16_t)>& on_listening, const std::function<bool()>& should_stop)
{
    std::shared_ptr<MockProvider> provider;
    auto inst = take_level(config, options.level, provider);
    std::shared_ptr<Link> parent;
    if (options.level > 0) {
        if (!options.parent_port) {
            throw Error(ErrorKind::Config, fmt::format("level {} needs its parent's port", options.level));
        }
        parent = make_link(config, options.level, *options.parent_port);
    }
    inst->set_parent(parent, kChildJob);
    TcpServer server(control_handler(*inst, inst->snapshot(), parent), config.host, options.port);
    spdlog::info("level {} listening on {}:{}", options.level, config.host, server.port());
    if (on_listening) {
        on_listening(server.port());
    }
    while (!should_stop()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    server.stop();
}

ProcessChain::ProcessChain(const std::filesystem::path& exe, const ExperimentConfig& config)
{
    if (config.levels.size() < 2) {
        throw Error(ErrorKind::Config, "multi-process mode needs at least two levels");
    }
    char name[] = "/tmp/hgs-config-XXXXXX";
    int fd = ::mkstemp(name);
    if (fd < 0) {
        throw Error(ErrorKind::Config, "cannot create a temporary config file");
    }
    ::close(fd);
    config_path_ = name;
    std::ofstream(config_path_) << to_json(config).dump() << '\n';

    try {
        for (std::size_t level = 0; level + 1 < config.levels.size(); ++level) {
            int in_pipe[2];
            int out_pipe[2];
            if (::pipe(in_pipe) < 0 || ::pipe(out_pipe) < 0) {
                throw Error(ErrorKind::Transport, "pipe failed");
            }
            posix_spawn_file_actions_t actions;
            posix_spawn_file_actions_init(&actions);
            posix_spawn_file_actions_adddup2(&actions, in_pipe[0], 0);
            posix_spawn_file_actions_adddup2(&actions, out_pipe[1], 1);
            posix_spawn_file_actions_addclose(&actions, in_pipe[1]);
            posix_spawn_file_actions_addclose(&actions, out_pipe[0]);
            std::vector<std::string> args {exe.string(), "serve", "--config", config_path_.string(), "--level",
                                           std::to_string(level), "--stdin-eof"};
            if (level > 0) {
                args.push_back("--parent-port");
                args.push_back(std::to_string(ports_.back()));
            }
            std::vector<char*> argv;
            for (auto& a : args) {
                argv.push_back(a.data());
            }
            argv.push_back(nullptr);
            pid_t pid = 0;
            int rc = ::posix_spawn(&pid, exe.c_str(), &actions, nullptr, argv.data(), environ);
            posix_spawn_file_actions_destroy(&actions);
            ::close(in_pipe[0]);
            ::close(out_pipe[1]);
            if (rc != 0) {
                ::close(in_pipe[1]);
                ::close(out_pipe[0]);
                throw Error(ErrorKind::Transport, fmt::format("cannot start {}: error {}", exe.string(), rc));
            }
            pids_.push_back(pid);
            stdin_fds_.push_back(in_pipe[1]);

            // The child prints "listening <port>" once it accepts connections.
            std::string line;
            auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(60);
            while (line.find('\n') == std::string::npos) {
                auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline
                                                                                  - std::chrono::steady_clock::now());
                pollfd pfd {out_pipe[0], POLLIN, 0};
                if (left.count() <= 0 || ::poll(&pfd, 1, static_cast<int>(left.count())) <= 0) {
                    ::close(out_pipe[0]);
                    throw Error(ErrorKind::Timeout, fmt::format("level {} did not start", level));
                }
                char buf[256];
                auto got = ::read(out_pipe[0], buf, sizeof buf);
                if (got <= 0) {
                    ::close(out_pipe[0]);
                    throw Error(ErrorKind::Transport, fmt::format("level {} exited during startup", level));
                }
                line.append(buf, static_cast<std::size_t>(got));
            }
            ::close(out_pipe[0]);
            unsigned port = 0;
            if (std::sscanf(line.c_str(), "listening %u", &port) != 1 || port == 0 || port > 65535) {
                throw Error(ErrorKind::Transport, fmt::format("level {} sent an unexpected banner: {}", level, line));
            }
            ports_.push_back(static_cast<std::uint16_t>(port));
        }
    } catch (...) {
        shutdown();
        throw;
    }
}

ProcessChain::~ProcessChain()
{
    shutdown();
}

void ProcessChain::shutdown() noexcept
{
    for (auto i = stdin_fds_.size(); i-- > 0;) {
        ::close(stdin_fds_[i]);
    }
    stdin_fds_.clear();
    for (auto i = pids_.size(); i-- > 0;) {
        int status = 0;
        bool exited = false;
        for (int tries = 0; tries < 100 && !exited; ++tries) {
            exited = ::waitpid(pids_[i], &status, WNOHANG) == pids_[i];
            if (!exited) {
                std::this_thread::sleep_for(std::chrono::milliseconds(50));
            }
        }
        if (!exited) {
            ::kill(pids_[i], SIGKILL);
            ::waitpid(pids_[i], &status, 0);
        }
    }
    pids_.clear();
    if (!config_path_.empty()) {
        std::error_code ec;
        std::filesystem::remove(config_path_, ec);
    }
}

RemoteDriver::RemoteDriver(const ExperimentConfig& config, std::uint16_t parent_port)
    : depth_(config.levels.size())
{
    if (depth_ < 2) {
        throw Error(ErrorKind::Config, "a remote driver needs at least two levels");
    }
    leaf_ = take_level(config, depth_ - 1, provider_);
    parent_ = make_link(config, depth_ - 1, parent_port);
    leaf_->set_parent(parent_, kChildJob);
    snapshot_ = leaf_->snapshot();
}

nlohmann::json RemoteDriver::control(const std::string& op)
{
    auto reply = parent_->call({MessageKind::MatchGrowRequest, next_id_++ | (std::uint64_t {1} << 62), {{"op", op}}});
    raise_if_error(reply);
    return reply.payload.at("values");
}

GrowResult RemoteDriver::grow(const JobSpec& spec, JobId job)
{
    return leaf_->match_grow(spec, job);
}

void RemoteDriver::reset()
{
    control("reset");
    leaf_->restore(snapshot_);
}

std::vector<std::uint64_t> RemoteDriver::hashes()
{
    auto out = control("hashes").get<std::vector<std::uint64_t>>();
    out.push_back(leaf_->hash());
    return out;
}

std::vector<TimingSample> RemoteDriver::take_samples()
{
    std::vector<TimingSample> out;
    for (const auto& s : control("samples")) {
        out.push_back(sample_from_json(s));
    }
    auto own = leaf_->take_samples();
    out.insert(out.end(), own.begin(), own.end());
    return out;
}

} // namespace hgs

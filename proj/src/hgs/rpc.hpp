/*
 * Copyright (C) 2026 The hgs Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef HGS_RPC_HPP
#define HGS_RPC_HPP

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <list>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>

#include <json.hpp>

#include "hgs/error.hpp"
#include "hgs/perfmodel.hpp"

namespace hgs {

enum class MessageKind { MatchGrowRequest, MatchGrowReply, ShrinkNotify, Error };

const char* to_string(MessageKind kind) noexcept;

struct RpcMessage {
    MessageKind kind = MessageKind::Error;
    std::uint64_t id = 0;
    nlohmann::json payload;
};

nlohmann::json to_json(const RpcMessage& message);
RpcMessage message_from_json(const nlohmann::json& j);

RpcMessage error_reply(std::uint64_t id, ErrorKind kind, const std::string& what);
// Rethrow an error reply with its original kind; other messages pass.
void raise_if_error(const RpcMessage& reply);

// Frame: 4-byte big-endian body length followed by the UTF-8 JSON body.
inline constexpr std::uint32_t kMaxFrame = 1U << 30;
std::string encode_frame(const RpcMessage& message);
void write_frame(int fd, std::string_view body);
// Reads one frame body. EOF before any byte is ConnectionLost, EOF inside a
// frame is Framing, an expired deadline is Timeout.
std::string read_frame(int fd, std::chrono::milliseconds timeout);

using Handler = std::function<RpcMessage(const RpcMessage&)>;

/// Client end of a child-to-parent connection.
class Link {
public:
    virtual ~Link() = default;
    // Send a request and wait for the reply with the same id.
    virtual RpcMessage call(const RpcMessage& request) = 0;
    virtual Transport transport() const noexcept = 0;
    virtual std::string describe() const = 0;
};

/// Same-process link. Messages still go through the JSON encoding so
/// payloads match the socket transport byte for byte.
class InProcessLink final : public Link {
public:
    InProcessLink(Handler handler, Transport label = Transport::Intra) : handler_(std::move(handler)), label_(label) { }

    RpcMessage call(const RpcMessage& request) override;
    Transport transport() const noexcept override { return label_; }
    std::string describe() const override { return "inproc"; }

    // Size in bytes of the last reply body.
    std::size_t last_reply_bytes() const noexcept { return last_reply_bytes_; }

private:
    Handler handler_;
    Transport label_;
    std::size_t last_reply_bytes_ = 0;
};

struct TcpLinkOptions {
    std::chrono::milliseconds timeout {30000};
    // Added once before sending and once after receiving.
    std::chrono::microseconds latency {0};
    Transport label = Transport::Inter;
};

class TcpLink final : public Link {
public:
    TcpLink(std::string host, std::uint16_t port, TcpLinkOptions options = {});
    ~TcpLink() override;
    TcpLink(const TcpLink&) = delete;
    TcpLink& operator=(const TcpLink&) = delete;

    RpcMessage call(const RpcMessage& request) override;
    Transport transport() const noexcept override { return options_.label; }
    std::string describe() const override;

    std::size_t last_reply_bytes() const noexcept { return last_reply_bytes_; }

private:
    std::string host_;
    std::uint16_t port_;
    TcpLinkOptions options_;
    int fd_ = -1;
    std::mutex mu_;
    std::size_t last_reply_bytes_ = 0;
};

/// Accepts child connections and answers each frame with `handler`.
class TcpServer {
public:
    explicit TcpServer(Handler handler, const std::string& host = "127.0.0.1", std::uint16_t port = 0);
    ~TcpServer();
    TcpServer(const TcpServer&) = delete;
    TcpServer& operator=(const TcpServer&) = delete;

    std::uint16_t port() const noexcept { return port_; }
    void stop();

private:
    void accept_loop();
    void serve(int fd);

    Handler handler_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::atomic<bool> stopping_ {false};
    std::thread acceptor_;
    std::mutex mu_;
    std::list<std::thread> workers_;
    std::list<int> conns_;
};

// Connect with retries until `deadline` passes (servers in other processes
// may still be starting).
int connect_tcp(const std::string& host, std::uint16_t port, std::chrono::milliseconds deadline);

} // namespace hgs

#endif

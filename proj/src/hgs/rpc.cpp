/*
 * Copyright (C) 2026 The hgs Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "hgs/rpc.hpp"

#include <arpa/inet.h>
#include <array>
#include <cerrno>
#include <cstring>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <spdlog/spdlog.h>

namespace hgs {

namespace {

using Clock = std::chrono::steady_clock;

// Injected latency should be a constant; plain sleeps overshoot by a
// scheduler-dependent amount, so sleep most of it and spin the rest.
void delay(std::chrono::microseconds d)
{
    auto deadline = Clock::now() + d;
    constexpr auto kSpin = std::chrono::microseconds(200);
    if (d > kSpin) {
        std::this_thread::sleep_for(d - kSpin);
    }
    while (Clock::now() < deadline) {
    }
}

[[noreturn]] void sys_error(ErrorKind kind, const std::string& what)
{
    throw Error(kind, what + ": " + std::strerror(errno));
}

const std::array<std::pair<ErrorKind, const char*>, 13> kKinds {{
    {ErrorKind::InvalidArgument, "invalid_argument"},
    {ErrorKind::Parse, "parse"},
    {ErrorKind::DuplicateJob, "duplicate_job"},
    {ErrorKind::UnknownJob, "unknown_job"},
    {ErrorKind::Refused, "refused"},
    {ErrorKind::Transport, "transport"},
    {ErrorKind::Timeout, "timeout"},
    {ErrorKind::ConnectionLost, "connection_lost"},
    {ErrorKind::Framing, "framing"},
    {ErrorKind::Remote, "remote"},
    {ErrorKind::Config, "config"},
    {ErrorKind::Provider, "provider"},
    {ErrorKind::Internal, "internal"},
}};

const char* kind_name(ErrorKind kind)
{
    for (const auto& [k, name] : kKinds) {
        if (k == kind) {
            return name;
        }
    }
    return "internal";
}

ErrorKind kind_from_name(std::string_view name)
{
    for (const auto& [k, n] : kKinds) {
        if (name == n) {
            return k;
        }
    }
    return ErrorKind::Remote;
}

// Read exactly `len` bytes. Returns bytes read before EOF.
std::size_t read_exact(int fd, char* buf, std::size_t len, Clock::time_point deadline)
{
    std::size_t got = 0;
    while (got < len) {
        auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
        if (left <= 0) {
            throw Error(ErrorKind::Timeout, "timed out waiting for frame data");
        }
        pollfd p {fd, POLLIN, 0};
        int rc = ::poll(&p, 1, static_cast<int>(std::min<long long>(left, 1 << 30)));
        if (rc < 0) {
            if (errno == EINTR) {
                continue;
            }
            sys_error(ErrorKind::Transport, "poll");
        }
        if (rc == 0) {
            continue;
        }
        auto n = ::recv(fd, buf + got, len - got, 0);
        if (n < 0) {
            if (errno == EINTR || errno == EAGAIN) {
                continue;
            }
            if (errno == ECONNRESET) {
                return got;
            }
            sys_error(ErrorKind::Transport, "recv");
        }
        if (n == 0) {
            return got;
        }
        got += static_cast<std::size_t>(n);
    }
    return got;
}

std::string frame_of(std::string_view body)
{
    auto len = static_cast<std::uint32_t>(body.size());
    std::string frame {static_cast<char>((len >> 24) & 0xff), static_cast<char>((len >> 16) & 0xff),
                       static_cast<char>((len >> 8) & 0xff), static_cast<char>(len & 0xff)};
    frame.append(body);
    return frame;
}

} // namespace

const char* to_string(MessageKind kind) noexcept
{
    switch (kind) {
    case MessageKind::MatchGrowRequest:
        return "match_grow_request";
    case MessageKind::MatchGrowReply:
        return "match_grow_reply";
    case MessageKind::ShrinkNotify:
        return "shrink_notify";
    case MessageKind::Error:
        return "error";
    }
    return "error";
}

nlohmann::json to_json(const RpcMessage& m)
{
    return {{"kind", to_string(m.kind)}, {"id", m.id}, {"payload", m.payload}};
}

RpcMessage message_from_json(const nlohmann::json& j)
{
    try {
        RpcMessage m;
        auto kind = j.at("kind").get<std::string>();
        bool known = false;
        for (auto k : {MessageKind::MatchGrowRequest, MessageKind::MatchGrowReply, MessageKind::ShrinkNotify,
                       MessageKind::Error}) {
            if (kind == to_string(k)) {
                m.kind = k;
                known = true;
            }
        }
        if (!known) {
            throw Error(ErrorKind::Framing, "unknown message kind '" + kind + "'");
        }
        m.id = j.at("id").get<std::uint64_t>();
        m.payload = j.at("payload");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Framing, std::string("malformed message: ") + e.what());
    }
}

RpcMessage error_reply(std::uint64_t id, ErrorKind kind, const std::string& what)
{
    return {MessageKind::Error, id, {{"kind", kind_name(kind)}, {"message", what}}};
}

void raise_if_error(const RpcMessage& reply)
{
    if (reply.kind != MessageKind::Error) {
        return;
    }
    auto kind = kind_from_name(reply.payload.value("kind", "remote"));
    throw Error(kind, "remote: " + reply.payload.value("message", std::string("unspecified error")));
}

std::string encode_frame(const RpcMessage& message)
{
    return frame_of(to_json(message).dump());
}

void write_frame(int fd, std::string_view body)
{
    if (body.size() > kMaxFrame) {
        throw Error(ErrorKind::Framing, "frame of " + std::to_string(body.size()) + " bytes exceeds the limit");
    }
    auto frame = frame_of(body);
    std::size_t sent = 0;
    while (sent < frame.size()) {
        auto n = ::send(fd, frame.data() + sent, frame.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            if (errno == EPIPE || errno == ECONNRESET) {
                throw Error(ErrorKind::ConnectionLost, "peer closed the connection");
            }
            sys_error(ErrorKind::Transport, "send");
        }
        sent += static_cast<std::size_t>(n);
    }
}

std::string read_frame(int fd, std::chrono::milliseconds timeout)
{
    auto deadline = Clock::now() + timeout;
    unsigned char header[4];
    auto got = read_exact(fd, reinterpret_cast<char*>(header), 4, deadline);
    if (got == 0) {
        throw Error(ErrorKind::ConnectionLost, "connection closed");
    }
    if (got < 4) {
        throw Error(ErrorKind::Framing, "connection closed inside a frame header");
    }
    std::uint32_t len = (std::uint32_t {header[0]} << 24) | (std::uint32_t {header[1]} << 16)
        | (std::uint32_t {header[2]} << 8) | std::uint32_t {header[3]};
    if (len > kMaxFrame) {
        throw Error(ErrorKind::Framing, "frame length " + std::to_string(len) + " exceeds the limit");
    }
    std::string body(len, '\0');
    got = read_exact(fd, body.data(), len, deadline);
    if (got < len) {
        throw Error(ErrorKind::Framing,
                    "connection closed after " + std::to_string(got) + " of " + std::to_string(len) + " frame bytes");
    }
    return body;
}

RpcMessage InProcessLink::call(const RpcMessage& request)
{
    auto wire = to_json(request).dump();
    auto delivered = message_from_json(nlohmann::json::parse(wire));
    RpcMessage reply;
    try {
        reply = handler_(delivered);
    } catch (const Error& e) {
        reply = error_reply(delivered.id, e.kind(), e.what());
    } catch (const std::exception& e) {
        reply = error_reply(delivered.id, ErrorKind::Internal, e.what());
    }
    auto back = to_json(reply).dump();
    last_reply_bytes_ = back.size();
    reply = message_from_json(nlohmann::json::parse(back));
    if (reply.id != request.id) {
        throw Error(ErrorKind::Framing, "reply id does not match request id");
    }
    return reply;
}

int connect_tcp(const std::string& host, std::uint16_t port, std::chrono::milliseconds deadline)
{
    auto until = Clock::now() + deadline;
    addrinfo hints {};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (int rc = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res); rc != 0) {
        throw Error(ErrorKind::Transport, "resolve " + host + ": " + ::gai_strerror(rc));
    }
    for (;;) {
        int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
        if (fd < 0) {
            ::freeaddrinfo(res);
            sys_error(ErrorKind::Transport, "socket");
        }
        if (::connect(fd, res->ai_addr, res->ai_addrlen) == 0) {
            int one = 1;
            ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
            ::freeaddrinfo(res);
            return fd;
        }
        int saved = errno;
        ::close(fd);
        if (Clock::now() >= until) {
            ::freeaddrinfo(res);
            errno = saved;
            sys_error(ErrorKind::ConnectionLost, "connect " + host + ":" + std::to_string(port));
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
}

TcpLink::TcpLink(std::string host, std::uint16_t port, TcpLinkOptions options)
    : host_(std::move(host)), port_(port), options_(options)
{
    fd_ = connect_tcp(host_, port_, options_.timeout);
}

TcpLink::~TcpLink()
{
    if (fd_ >= 0) {
        ::close(fd_);
    }
}

std::string TcpLink::describe() const
{
    return "tcp://" + host_ + ":" + std::to_string(port_);
}

RpcMessage TcpLink::call(const RpcMessage& request)
{
    std::lock_guard lock(mu_);
    if (options_.latency.count() > 0) {
        delay(options_.latency);
    }
    write_frame(fd_, to_json(request).dump());
    auto body = read_frame(fd_, options_.timeout);
    last_reply_bytes_ = body.size();
    if (options_.latency.count() > 0) {
        delay(options_.latency);
    }
    RpcMessage reply;
    try {
        reply = message_from_json(nlohmann::json::parse(body));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Framing, std::string("reply is not JSON: ") + e.what());
    }
    if (reply.id != request.id) {
        throw Error(ErrorKind::Framing, "reply id " + std::to_string(reply.id) + " does not match request id "
                                            + std::to_string(request.id));
    }
    return reply;
}

TcpServer::TcpServer(Handler handler, const std::string& host, std::uint16_t port) : handler_(std::move(handler))
{
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) {
        sys_error(ErrorKind::Transport, "socket");
    }
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr {};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(listen_fd_);
        throw Error(ErrorKind::Config, "listen address must be an IPv4 literal: " + host);
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0
        || ::listen(listen_fd_, 16) < 0) {
        int saved = errno;
        ::close(listen_fd_);
        errno = saved;
        sys_error(ErrorKind::Transport, "bind/listen " + host + ":" + std::to_string(port));
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    acceptor_ = std::thread([this] { accept_loop(); });
}

TcpServer::~TcpServer()
{
    stop();
}

void TcpServer::stop()
{
    if (stopping_.exchange(true)) {
        return;
    }
    ::shutdown(listen_fd_, SHUT_RDWR);
    if (acceptor_.joinable()) {
        acceptor_.join();
    }
    ::close(listen_fd_);
    std::list<std::thread> workers;
    {
        std::lock_guard lock(mu_);
        for (int fd : conns_) {
            ::shutdown(fd, SHUT_RDWR);
        }
        workers.swap(workers_);
    }
    for (auto& t : workers) {
        t.join();
    }
}

void TcpServer::accept_loop()
{
    while (!stopping_) {
        pollfd p {listen_fd_, POLLIN, 0};
        int rc = ::poll(&p, 1, 100);
        if (rc <= 0) {
            continue;
        }
        int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            continue;
        }
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        std::lock_guard lock(mu_);
        if (stopping_) {
            ::close(fd);
            break;
        }
        conns_.push_back(fd);
        workers_.emplace_back([this, fd] { serve(fd); });
    }
}

void TcpServer::serve(int fd)
{
    for (;;) {
        std::string body;
        try {
            body = read_frame(fd, std::chrono::hours(24 * 365));
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::ConnectionLost && !stopping_) {
                spdlog::warn("rpc server: {}", e.what());
            }
            break;
        }
        RpcMessage reply;
        std::uint64_t id = 0;
        try {
            auto request = message_from_json(nlohmann::json::parse(body));
            id = request.id;
            reply = handler_(request);
        } catch (const Error& e) {
            reply = error_reply(id, e.kind(), e.what());
        } catch (const std::exception& e) {
            reply = error_reply(id, ErrorKind::Internal, e.what());
        }
        try {
            write_frame(fd, to_json(reply).dump());
        } catch (const Error& e) {
            spdlog::warn("rpc server: {}", e.what());
            break;
        }
    }
    std::lock_guard lock(mu_);
    conns_.remove(fd);
    ::close(fd);
}

} // namespace hgs

/*
 * Copyright (C) 2026 The hgs Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include <chrono>
#include <thread>

#include <sys/socket.h>
#include <unistd.h>

#include <gtest/gtest.h>

#include "hgs/error.hpp"
#include "hgs/rpc.hpp"

using namespace hgs;
using namespace std::chrono_literals;

namespace {

struct SocketPair {
    int a = -1;
    int b = -1;
    SocketPair()
    {
        int fds[2];
        EXPECT_EQ(::socketpair(AF_UNIX, SOCK_STREAM, 0, fds), 0);
        a = fds[0];
        b = fds[1];
    }
    ~SocketPair()
    {
        if (a >= 0) {
            ::close(a);
        }
        if (b >= 0) {
            ::close(b);
        }
    }
};

ErrorKind read_error(int fd, std::chrono::milliseconds timeout)
{
    try {
        read_frame(fd, timeout);
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::Internal;
}

RpcMessage echo(const RpcMessage& m)
{
    return {MessageKind::MatchGrowReply, m.id, {{"echo", m.payload}}};
}

} // namespace

TEST(Rpc, MessageJsonRoundTrip)
{
    RpcMessage m {MessageKind::ShrinkNotify, 77, {{"paths", {"/a/b"}}, {"job", 3}}};
    auto back = message_from_json(to_json(m));
    EXPECT_EQ(back.kind, m.kind);
    EXPECT_EQ(back.id, 77u);
    EXPECT_EQ(back.payload, m.payload);
    EXPECT_STREQ(to_string(MessageKind::MatchGrowRequest), "match_grow_request");
    EXPECT_THROW(message_from_json(nlohmann::json::parse(R"({"kind": "hello", "id": 1, "payload": {}})")), Error);
}

TEST(Rpc, ErrorRepliesCarryTheirKind)
{
    auto reply = error_reply(4, ErrorKind::Refused, "nope");
    EXPECT_EQ(reply.kind, MessageKind::Error);
    try {
        raise_if_error(reply);
        ADD_FAILURE();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Refused);
        EXPECT_NE(std::string(e.what()).find("nope"), std::string::npos);
    }
    EXPECT_NO_THROW(raise_if_error({MessageKind::MatchGrowReply, 4, {}}));
}

TEST(Rpc, FrameRoundTrip)
{
    SocketPair s;
    RpcMessage m {MessageKind::MatchGrowRequest, 9, {{"op", "grow"}}};
    auto frame = encode_frame(m);
    ASSERT_EQ(frame.size(), 4 + to_json(m).dump().size());
    write_frame(s.a, to_json(m).dump());
    auto body = read_frame(s.b, 1000ms);
    EXPECT_EQ(message_from_json(nlohmann::json::parse(body)).id, 9u);
}

TEST(Rpc, FramingErrors)
{
    {
        SocketPair s;
        ::close(s.a);
        s.a = -1;
        EXPECT_EQ(read_error(s.b, 500ms), ErrorKind::ConnectionLost);
    }
    {
        SocketPair s;
        const char partial[] = {0, 0};
        ASSERT_EQ(::write(s.a, partial, 2), 2);
        ::close(s.a);
        s.a = -1;
        EXPECT_EQ(read_error(s.b, 500ms), ErrorKind::Framing);
    }
    {
        SocketPair s;
        const char header[] = {0, 0, 0, 10, 'x'};
        ASSERT_EQ(::write(s.a, header, 5), 5);
        ::close(s.a);
        s.a = -1;
        EXPECT_EQ(read_error(s.b, 500ms), ErrorKind::Framing);
    }
    {
        SocketPair s;
        const unsigned char huge[] = {0x7f, 0xff, 0xff, 0xff};
        ASSERT_EQ(::write(s.a, huge, 4), 4);
        EXPECT_EQ(read_error(s.b, 500ms), ErrorKind::Framing);
    }
    {
        SocketPair s;
        EXPECT_EQ(read_error(s.b, 50ms), ErrorKind::Timeout);
    }
}

TEST(Rpc, InProcessLinkMapsExceptions)
{
    InProcessLink link([](const RpcMessage&) -> RpcMessage { throw Error(ErrorKind::UnknownJob, "job 5"); });
    auto reply = link.call({MessageKind::MatchGrowRequest, 1, {}});
    EXPECT_EQ(reply.kind, MessageKind::Error);
    EXPECT_THROW(raise_if_error(reply), Error);

    InProcessLink wrong_id([](const RpcMessage& m) { return RpcMessage {MessageKind::MatchGrowReply, m.id + 1, {}}; });
    EXPECT_THROW(wrong_id.call({MessageKind::MatchGrowRequest, 1, {}}), Error);

    InProcessLink ok(echo, Transport::Inter);
    EXPECT_EQ(ok.transport(), Transport::Inter);
    EXPECT_EQ(ok.call({MessageKind::MatchGrowRequest, 2, {{"x", 1}}}).payload["echo"]["x"], 1);
    EXPECT_GT(ok.last_reply_bytes(), 0u);
}

TEST(Rpc, TcpRoundTrip)
{
    TcpServer server(echo);
    ASSERT_GT(server.port(), 0);
    TcpLink link("127.0.0.1", server.port());
    for (std::uint64_t id = 1; id <= 20; ++id) {
        auto reply = link.call({MessageKind::MatchGrowRequest, id, {{"n", id}}});
        EXPECT_EQ(reply.id, id);
        EXPECT_EQ(reply.payload["echo"]["n"], id);
    }
    EXPECT_EQ(link.transport(), Transport::Inter);
}

TEST(Rpc, TcpConcurrentClients)
{
    TcpServer server(echo);
    std::vector<std::thread> clients;
    std::atomic<int> good {0};
    for (int c = 0; c < 4; ++c) {
        clients.emplace_back([&, c] {
            TcpLink link("127.0.0.1", server.port());
            for (std::uint64_t i = 0; i < 25; ++i) {
                auto id = static_cast<std::uint64_t>(c) * 1000 + i;
                if (link.call({MessageKind::MatchGrowRequest, id, {}}).id == id) {
                    ++good;
                }
            }
        });
    }
    for (auto& t : clients) {
        t.join();
    }
    EXPECT_EQ(good.load(), 100);
}

TEST(Rpc, InjectedLatencyIsApplied)
{
    TcpServer server(echo);
    TcpLinkOptions options;
    options.latency = 5ms;
    TcpLink link("127.0.0.1", server.port(), options);
    auto start = std::chrono::steady_clock::now();
    link.call({MessageKind::MatchGrowRequest, 1, {}});
    EXPECT_GE(std::chrono::steady_clock::now() - start, 10ms);
}

TEST(Rpc, ServerGoneIsAnError)
{
    auto server = std::make_unique<TcpServer>(echo);
    auto port = server->port();
    TcpLinkOptions options;
    options.timeout = 500ms;
    TcpLink link("127.0.0.1", port, options);
    server->stop();
    server.reset();
    try {
        link.call({MessageKind::MatchGrowRequest, 1, {}});
        ADD_FAILURE();
    } catch (const Error& e) {
        EXPECT_TRUE(e.is_transport()) << e.what();
    }
    EXPECT_THROW(connect_tcp("127.0.0.1", port, 200ms), Error);
}

TEST(Rpc, SlowServerTimesOut)
{
    TcpServer server([](const RpcMessage& m) {
        std::this_thread::sleep_for(300ms);
        return echo(m);
    });
    TcpLinkOptions options;
    options.timeout = 50ms;
    TcpLink link("127.0.0.1", server.port(), options);
    try {
        link.call({MessageKind::MatchGrowRequest, 1, {}});
        ADD_FAILURE();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Timeout);
    }
}

/*
 * Copyright (C) 2026 The hgs Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "hgs/resource_types.hpp"

#include <array>
#include <utility>

#include "hgs/error.hpp"

namespace hgs {

namespace {

constexpr std::array<std::pair<ResourceType, std::string_view>, 8> kTypeNames {{
    {ResourceType::Cluster, "cluster"},
    {ResourceType::Zone, "zone"},
    {ResourceType::Rack, "rack"},
    {ResourceType::Node, "node"},
    {ResourceType::Socket, "socket"},
    {ResourceType::Core, "core"},
    {ResourceType::Gpu, "gpu"},
    {ResourceType::Memory, "memory"},
}};

} // namespace

const char* to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::DuplicateJob: return "duplicate job";
    case ErrorKind::UnknownJob: return "unknown job";
    case ErrorKind::Refused: return "refused";
    case ErrorKind::Transport: return "transport error";
    case ErrorKind::Timeout: return "timeout";
    case ErrorKind::ConnectionLost: return "connection lost";
    case ErrorKind::Framing: return "framing error";
    case ErrorKind::Remote: return "remote error";
    case ErrorKind::Config: return "config error";
    case ErrorKind::Provider: return "provider error";
    case ErrorKind::Internal: return "internal error";
    }
    return "unknown";
}

std::string_view to_string(ResourceType type) noexcept
{
    for (const auto& [t, name] : kTypeNames) {
        if (t == type) {
            return name;
        }
    }
    return "unknown";
}

std::optional<ResourceType> parse_resource_type(std::string_view name) noexcept
{
    for (const auto& [t, n] : kTypeNames) {
        if (n == name) {
            return t;
        }
    }
    return std::nullopt;
}

int containment_rank(ResourceType type) noexcept
{
    switch (type) {
    case ResourceType::Cluster: return 5;
    case ResourceType::Zone: return 4;
    case ResourceType::Rack: return 3;
    case ResourceType::Node: return 2;
    case ResourceType::Socket: return 1;
    case ResourceType::Core:
    case ResourceType::Gpu:
    case ResourceType::Memory: return 0;
    }
    return 0;
}

std::string parent_path(std::string_view path)
{
    auto pos = path.rfind('/');
    if (pos == std::string_view::npos || pos == 0) {
        return {};
    }
    return std::string(path.substr(0, pos));
}

std::string_view basename_of(std::string_view path) noexcept
{
    auto pos = path.rfind('/');
    return pos == std::string_view::npos ? path : path.substr(pos + 1);
}

} // namespace hgs

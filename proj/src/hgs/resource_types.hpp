/*
 * Copyright (C) 2026 The hgs Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef HGS_RESOURCE_TYPES_HPP
#define HGS_RESOURCE_TYPES_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace hgs {

using VertexId = std::int64_t;
using JobId = std::int64_t;

enum class ResourceType { Cluster, Zone, Rack, Node, Socket, Core, Gpu, Memory };

std::string_view to_string(ResourceType type) noexcept;
std::optional<ResourceType> parse_resource_type(std::string_view name) noexcept;

// Containment rank: cluster > zone > rack > node > socket > {core, gpu, memory}.
// Leaf kinds share the lowest rank.
int containment_rank(ResourceType type) noexcept;

// True when a vertex of kind `outer` may (transitively) contain kind `inner`.
inline bool may_contain(ResourceType outer, ResourceType inner) noexcept
{
    return containment_rank(outer) > containment_rank(inner);
}

// The pruning filter counts free vertices of this kind ("ALL:core").
inline constexpr ResourceType kPruneType = ResourceType::Core;

// Prefix reserved for basenames of provider-created vertices.
inline constexpr std::string_view kExternalPrefix = "ext.";

std::string parent_path(std::string_view path);
std::string_view basename_of(std::string_view path) noexcept;

} // namespace hgs

#endif

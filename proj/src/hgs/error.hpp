/*
 * Copyright (C) 2026 The hgs Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef HGS_ERROR_HPP
#define HGS_ERROR_HPP

#include <stdexcept>
#include <string>

namespace hgs {

enum class ErrorKind {
    InvalidArgument,
    Parse,
    DuplicateJob,
    UnknownJob,
    Refused,
    Transport,
    Timeout,
    ConnectionLost,
    Framing,
    Remote,
    Config,
    Provider,
    Internal,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) { }

    ErrorKind kind() const noexcept { return kind_; }

    // Transport-layer failures; never confused with "no resources anywhere".
    bool is_transport() const noexcept
    {
        return kind_ == ErrorKind::Transport || kind_ == ErrorKind::Timeout || kind_ == ErrorKind::ConnectionLost
            || kind_ == ErrorKind::Framing;
    }

private:
    ErrorKind kind_;
};

} // namespace hgs

#endif

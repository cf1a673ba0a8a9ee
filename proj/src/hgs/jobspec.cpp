/*
 * Copyright (C) 2026 The hgs Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "hgs/jobspec.hpp"

#include <cctype>
#include <charconv>
#include <set>
#include <sstream>

#include "hgs/error.hpp"

namespace hgs {

namespace {

struct Token {
    enum class Kind { Entry, Hint, Open, Close, End } kind = Kind::End;
    std::string text;
    int line = 1;
    int column = 1;
};

class Lexer {
public:
    explicit Lexer(std::string_view text) : text_(text) { }

    Token next()
    {
        skip_blank();
        Token tok;
        tok.line = line_;
        tok.column = column_;
        if (pos_ >= text_.size()) {
            return tok;
        }
        char c = text_[pos_];
        if (c == '[' || c == ']') {
            advance();
            tok.kind = c == '[' ? Token::Kind::Open : Token::Kind::Close;
            tok.text = std::string(1, c);
            return tok;
        }
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) && text_[pos_] != '['
               && text_[pos_] != ']' && text_[pos_] != '#') {
            tok.text.push_back(text_[pos_]);
            advance();
        }
        tok.kind = tok.text.find('=') != std::string::npos ? Token::Kind::Hint : Token::Kind::Entry;
        return tok;
    }

private:
    void advance()
    {
        if (text_[pos_] == '\n') {
            ++line_;
            column_ = 1;
        } else {
            ++column_;
        }
        ++pos_;
    }

    void skip_blank()
    {
        while (pos_ < text_.size()) {
            if (text_[pos_] == '#') {
                while (pos_ < text_.size() && text_[pos_] != '\n') {
                    advance();
                }
            } else if (std::isspace(static_cast<unsigned char>(text_[pos_]))) {
                advance();
            } else {
                break;
            }
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int column_ = 1;
};

[[noreturn]] void syntax_error(const Token& tok, const std::string& what)
{
    throw Error(ErrorKind::Parse,
                "jobspec " + std::to_string(tok.line) + ":" + std::to_string(tok.column) + ": " + what);
}

std::int64_t parse_count(const Token& tok, std::string_view digits)
{
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (ec != std::errc() || ptr != digits.data() + digits.size()) {
        syntax_error(tok, "invalid count '" + std::string(digits) + "'");
    }
    return value;
}

// Entry with total count, before conversion to per-parent counts.
struct Node {
    ResourceType type;
    std::int64_t total;
    Token where;
    std::vector<Node> children;
};

class Parser {
public:
    explicit Parser(std::string_view text) : lexer_(text) { tok_ = lexer_.next(); }

    JobSpec run()
    {
        auto roots = sequence(/*nested=*/false);
        if (tok_.kind != Token::Kind::End) {
            syntax_error(tok_, "unexpected '" + tok_.text + "'");
        }
        JobSpec spec;
        check_siblings(roots);
        for (auto& n : roots) {
            spec.resources.push_back(convert(n, 1, std::nullopt));
        }
        spec.instance_type = instance_type_;
        if (fleet_count_) {
            if (instance_type_) {
                syntax_error(*fleet_where_, "instance-type and fleet hints are mutually exclusive");
            }
            if (fleet_types_.empty()) {
                syntax_error(*fleet_where_, "fleet hint requires fleet-types");
            }
            spec.fleet = FleetHint {*fleet_count_, fleet_types_, fleet_policy_};
        } else if (!fleet_types_.empty() || fleet_policy_set_) {
            syntax_error(*fleet_where_, "fleet-types/fleet-policy given without fleet=N");
        }
        if (spec.resources.empty() && !spec.instance_type && !spec.fleet) {
            syntax_error(tok_, "empty request");
        }
        return spec;
    }

private:
    std::vector<Node> sequence(bool nested)
    {
        std::vector<Node> roots;
        Node* last = nullptr;
        bool after_group = false;
        for (;;) {
            switch (tok_.kind) {
            case Token::Kind::End:
                return roots;
            case Token::Kind::Close:
                if (!nested) {
                    syntax_error(tok_, "unbalanced ']'");
                }
                return roots;
            case Token::Kind::Hint:
                if (nested) {
                    syntax_error(tok_, "hints are only allowed at top level");
                }
                hint(tok_);
                tok_ = lexer_.next();
                break;
            case Token::Kind::Open: {
                auto open = tok_;
                tok_ = lexer_.next();
                auto group = sequence(true);
                if (tok_.kind != Token::Kind::Close) {
                    syntax_error(open, "unterminated '['");
                }
                tok_ = lexer_.next();
                if (group.empty()) {
                    syntax_error(open, "empty group");
                }
                auto& target = last ? last->children : roots;
                for (auto& g : group) {
                    target.push_back(std::move(g));
                }
                after_group = true;
                break;
            }
            case Token::Kind::Entry: {
                if (after_group) {
                    syntax_error(tok_, "entry after a group; wrap it in brackets");
                }
                auto node = entry(tok_);
                tok_ = lexer_.next();
                if (!last) {
                    roots.push_back(std::move(node));
                    last = &roots.back();
                } else {
                    last->children.push_back(std::move(node));
                    last = &last->children.back();
                }
                break;
            }
            }
        }
    }

    Node entry(const Token& tok)
    {
        auto colon = tok.text.find(':');
        if (colon == std::string::npos) {
            syntax_error(tok, "expected kind:count, got '" + tok.text + "'");
        }
        auto kind = tok.text.substr(0, colon);
        auto type = parse_resource_type(kind);
        if (!type) {
            syntax_error(tok, "unknown resource kind '" + kind + "'");
        }
        auto count = parse_count(tok, std::string_view(tok.text).substr(colon + 1));
        if (count < 1) {
            syntax_error(tok, "count must be >= 1 in '" + tok.text + "'");
        }
        return Node {*type, count, tok, {}};
    }

    void hint(const Token& tok)
    {
        auto eq = tok.text.find('=');
        auto key = tok.text.substr(0, eq);
        auto value = tok.text.substr(eq + 1);
        if (value.empty()) {
            syntax_error(tok, "hint '" + key + "' has no value");
        }
        if (key == "instance-type") {
            instance_type_ = value;
        } else if (key == "fleet") {
            fleet_count_ = parse_count(tok, value);
            if (*fleet_count_ < 1) {
                syntax_error(tok, "fleet count must be >= 1");
            }
        } else if (key == "fleet-types") {
            std::stringstream ss(value);
            std::string name;
            while (std::getline(ss, name, ',')) {
                if (name.empty()) {
                    syntax_error(tok, "empty instance type in fleet-types");
                }
                fleet_types_.push_back(name);
            }
        } else if (key == "fleet-policy") {
            if (value == "cheapest_first") {
                fleet_policy_ = FleetPolicy::CheapestFirst;
            } else if (value == "seeded_random") {
                fleet_policy_ = FleetPolicy::SeededRandom;
            } else {
                syntax_error(tok, "unknown fleet policy '" + value + "'");
            }
            fleet_policy_set_ = true;
        } else {
            syntax_error(tok, "unknown hint '" + key + "'");
        }
        if (key.starts_with("fleet") && !fleet_where_) {
            fleet_where_ = tok;
        }
    }

    static void check_siblings(const std::vector<Node>& nodes)
    {
        std::set<ResourceType> kinds;
        for (const auto& n : nodes) {
            if (!kinds.insert(n.type).second) {
                syntax_error(n.where, "sibling entries repeat kind '" + std::string(to_string(n.type)) + "'");
            }
            check_siblings(n.children);
        }
    }

    static RequestEntry convert(const Node& n, std::int64_t parent_total, std::optional<ResourceType> parent_type)
    {
        if (parent_type && !may_contain(*parent_type, n.type)) {
            syntax_error(n.where, std::string(to_string(n.type)) + " cannot nest under "
                                      + std::string(to_string(*parent_type)));
        }
        if (n.total % parent_total != 0) {
            syntax_error(n.where, "count " + std::to_string(n.total) + " does not divide evenly across "
                                      + std::to_string(parent_total) + " parent instances");
        }
        RequestEntry e {n.type, n.total / parent_total, {}};
        for (const auto& c : n.children) {
            e.children.push_back(convert(c, n.total, n.type));
        }
        return e;
    }

    Lexer lexer_;
    Token tok_;
    std::optional<std::string> instance_type_;
    std::optional<std::int64_t> fleet_count_;
    std::vector<std::string> fleet_types_;
    FleetPolicy fleet_policy_ = FleetPolicy::CheapestFirst;
    bool fleet_policy_set_ = false;
    std::optional<Token> fleet_where_;
};

void print_entry(std::ostream& out, const RequestEntry& e, std::int64_t parent_total)
{
    auto total = e.count * parent_total;
    out << to_string(e.type) << ':' << total;
    if (e.children.size() == 1) {
        out << ' ';
        print_entry(out, e.children.front(), total);
    } else {
        for (const auto& c : e.children) {
            out << " [";
            print_entry(out, c, total);
            out << ']';
        }
    }
}

std::int64_t count_type(const RequestEntry& e, ResourceType type, std::int64_t multiplier)
{
    auto total = e.count * multiplier;
    std::int64_t sum = e.type == type ? total : 0;
    for (const auto& c : e.children) {
        sum += count_type(c, type, total);
    }
    return sum;
}

std::int64_t count_all(const RequestEntry& e, std::int64_t multiplier)
{
    auto total = e.count * multiplier;
    std::int64_t sum = total;
    for (const auto& c : e.children) {
        sum += count_all(c, total);
    }
    return sum;
}

nlohmann::json entry_json(const RequestEntry& e)
{
    nlohmann::json j = {{"type", std::string(to_string(e.type))}, {"count", e.count}};
    if (!e.children.empty()) {
        j["with"] = nlohmann::json::array();
        for (const auto& c : e.children) {
            j["with"].push_back(entry_json(c));
        }
    }
    return j;
}

RequestEntry entry_from_json(const nlohmann::json& j, std::optional<ResourceType> parent)
{
    auto type = parse_resource_type(j.at("type").get<std::string>());
    if (!type) {
        throw Error(ErrorKind::Parse, "jobspec body: unknown type " + j.at("type").dump());
    }
    RequestEntry e {*type, j.at("count").get<std::int64_t>(), {}};
    if (e.count < 1) {
        throw Error(ErrorKind::Parse, "jobspec body: count must be >= 1");
    }
    if (parent && !may_contain(*parent, e.type)) {
        throw Error(ErrorKind::Parse, "jobspec body: kind order violated");
    }
    if (auto w = j.find("with"); w != j.end()) {
        for (const auto& c : *w) {
            e.children.push_back(entry_from_json(c, e.type));
        }
    }
    return e;
}

} // namespace

const char* to_string(FleetPolicy policy) noexcept
{
    return policy == FleetPolicy::CheapestFirst ? "cheapest_first" : "seeded_random";
}

JobSpec parse_jobspec(std::string_view text)
{
    return Parser(text).run();
}

std::string to_text(const JobSpec& spec)
{
    std::ostringstream out;
    if (spec.resources.size() == 1) {
        print_entry(out, spec.resources.front(), 1);
    } else {
        bool first = true;
        for (const auto& e : spec.resources) {
            out << (first ? "[" : " [");
            print_entry(out, e, 1);
            out << ']';
            first = false;
        }
    }
    auto sep = [&out]() -> std::ostream& {
        if (out.tellp() > 0) {
            out << ' ';
        }
        return out;
    };
    if (spec.instance_type) {
        sep() << "instance-type=" << *spec.instance_type;
    }
    if (spec.fleet) {
        sep() << "fleet=" << spec.fleet->total_count << " fleet-types=";
        for (std::size_t i = 0; i < spec.fleet->allowed_types.size(); ++i) {
            out << (i ? "," : "") << spec.fleet->allowed_types[i];
        }
        out << " fleet-policy=" << to_string(spec.fleet->policy);
    }
    return out.str();
}

std::int64_t request_size(const JobSpec& spec)
{
    std::int64_t vertices = 0;
    for (const auto& e : spec.resources) {
        vertices += count_all(e, 1);
    }
    return 2 * vertices;
}

std::int64_t total_count(const JobSpec& spec, ResourceType type)
{
    std::int64_t sum = 0;
    for (const auto& e : spec.resources) {
        sum += count_type(e, type, 1);
    }
    return sum;
}

std::int64_t prune_demand(const RequestEntry& entry)
{
    if (entry.type == kPruneType) {
        return 1;
    }
    std::int64_t sum = 0;
    for (const auto& c : entry.children) {
        sum += c.count * prune_demand(c);
    }
    return sum;
}

nlohmann::json to_json(const JobSpec& spec)
{
    nlohmann::json j = {{"resources", nlohmann::json::array()}};
    for (const auto& e : spec.resources) {
        j["resources"].push_back(entry_json(e));
    }
    if (spec.instance_type) {
        j["instance_type"] = *spec.instance_type;
    }
    if (spec.fleet) {
        j["fleet"] = {{"total_count", spec.fleet->total_count},
                      {"allowed_types", spec.fleet->allowed_types},
                      {"policy", to_string(spec.fleet->policy)}};
    }
    return j;
}

JobSpec jobspec_from_json(const nlohmann::json& body)
{
    try {
        JobSpec spec;
        for (const auto& e : body.at("resources")) {
            spec.resources.push_back(entry_from_json(e, std::nullopt));
        }
        if (auto it = body.find("instance_type"); it != body.end()) {
            spec.instance_type = it->get<std::string>();
        }
        if (auto it = body.find("fleet"); it != body.end()) {
            FleetHint f;
            f.total_count = it->at("total_count").get<std::int64_t>();
            f.allowed_types = it->at("allowed_types").get<std::vector<std::string>>();
            f.policy = it->at("policy").get<std::string>() == "seeded_random" ? FleetPolicy::SeededRandom
                                                                               : FleetPolicy::CheapestFirst;
            spec.fleet = std::move(f);
        }
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Parse, std::string("jobspec body: ") + e.what());
    }
}

} // namespace hgs

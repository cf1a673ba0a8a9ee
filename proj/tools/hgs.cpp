/*
 * Copyright (C) 2026 The hgs Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

// hgs: build graphs, grow hierarchies, run benchmarks, fit models.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <unistd.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "hgs/hgs.h"

namespace {

enum Exit { kOk = 0, kOther = 1, kNoMatch = 2, kTransport = 3, kConfig = 4 };

int exit_code(hgs_status s)
{
    switch (s) {
    case HGS_OK: return kOk;
    case HGS_NO_MATCH: return kNoMatch;
    case HGS_E_TRANSPORT: return kTransport;
    case HGS_E_CONFIG: return kConfig;
    default: return kOther;
    }
}

int fail(hgs_status s)
{
    std::fprintf(stderr, "hgs: %s: %s\n", hgs_status_name(s), hgs_last_error());
    return exit_code(s);
}

// Owns a string returned by the library.
struct Owned {
    char* p = nullptr;
    ~Owned() { hgs_string_free(p); }
    std::string str() const { return p ? p : ""; }
};

std::string read_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& body)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << body;
}

std::string self_exe()
{
    return std::filesystem::read_symlink("/proc/self/exe").string();
}

struct ExperimentFlags {
    std::string config;
    std::optional<std::string> transport;
    std::optional<int> reps;
    std::optional<std::string> suite;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    bool processes = false;

    void add_to(CLI::App* cmd, bool bench)
    {
        cmd->add_option("--config", config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
        cmd->add_option("--transport", transport, "Link transport for inter links")
            ->check(CLI::IsMember({"inproc", "tcp"}));
        cmd->add_option("--seed", seed, "Seed for randomized provider policies");
        cmd->add_option("--out", out, "Output directory");
        cmd->add_flag("--processes", processes, "Run each non-leaf level in its own process");
        if (bench) {
            cmd->add_option("--reps", reps, "Repetitions per request")->check(CLI::PositiveNumber);
            cmd->add_option("--suite", suite, "t1..t8, a comma list, or a file of requests");
        }
    }

    // Config text after applying command-line overrides.
    hgs_status load(std::string& json) const
    {
        Owned normalized;
        auto s = hgs_config_load(config.c_str(), &normalized.p);
        if (s != HGS_OK) {
            return s;
        }
        auto j = nlohmann::json::parse(normalized.str());
        if (transport) {
            j["transport"] = *transport;
        }
        if (reps) {
            j["repetitions"] = *reps;
        }
        if (suite) {
            j["suite"] = *suite;
        }
        if (seed) {
            j["seed"] = *seed;
            if (j.contains("provider")) {
                j["provider"]["seed"] = *seed;
            }
        }
        if (out) {
            j["out"] = *out;
        }
        Owned checked;
        s = hgs_config_parse(j.dump().c_str(), &checked.p);
        if (s == HGS_OK) {
            json = checked.str();
        }
        return s;
    }
};

int cmd_build(const std::string& config, int level, const std::string& jgf, const nlohmann::json& cluster,
              const std::string& output, bool pretty)
{
    Owned text;
    std::size_t size = 0;
    if (!config.empty()) {
        Owned normalized;
        auto s = hgs_config_load(config.c_str(), &normalized.p);
        if (s != HGS_OK) {
            return fail(s);
        }
        auto j = nlohmann::json::parse(normalized.str());
        j["transport"] = "inproc";
        j.erase("provider");
        hgs_hierarchy* h = nullptr;
        s = hgs_hierarchy_create(j.dump().c_str(), &h);
        if (s != HGS_OK) {
            return fail(s);
        }
        s = hgs_hierarchy_graph(h, level, pretty, &text.p);
        hgs_hierarchy_free(h);
        if (s != HGS_OK) {
            return fail(s);
        }
    }
    hgs_graph* g = nullptr;
    hgs_status s = HGS_OK;
    if (text.p) {
        s = hgs_graph_from_jgf(text.p, &g);
    } else if (!jgf.empty()) {
        s = hgs_graph_from_jgf(read_file(jgf).c_str(), &g);
    } else {
        s = hgs_graph_build(cluster.dump().c_str(), &g);
    }
    if (s != HGS_OK) {
        return fail(s);
    }
    Owned canonical;
    s = hgs_graph_to_jgf(g, pretty, &canonical.p);
    size = hgs_graph_size(g);
    hgs_graph_free(g);
    if (s != HGS_OK) {
        return fail(s);
    }
    if (output.empty() || output == "-") {
        std::cout << canonical.str() << '\n';
        std::cerr << "size " << size << '\n';
    } else {
        write_file(output, canonical.str() + "\n");
        std::cout << "size " << size << '\n';
    }
    return kOk;
}

void print_grow(const nlohmann::json& r)
{
    std::cout << "outcome " << r.at("outcome").get<std::string>() << '\n';
    std::cout << "levels_traversed " << r.at("levels_traversed").get<int>() << '\n';
    std::cout << "subgraph_size " << r.at("subgraph_size").get<std::int64_t>() << '\n';
    std::printf("%5s %9s %12s %12s %12s %12s %8s\n", "level", "transport", "match_s", "comms_s", "add_update_s",
                "total_s", "n");
    for (const auto& t : r.at("timings")) {
        std::printf("%5d %9s %12.6g %12.6g %12.6g %12.6g %8lld\n", t.at("level").get<int>(),
                    t.at("transport").get<std::string>().c_str(), t.at("match_s").get<double>(),
                    t.at("comms_s").get<double>(), t.at("add_update_s").get<double>(), t.at("total_s").get<double>(),
                    static_cast<long long>(t.at("n").get<std::int64_t>()));
    }
}

int cmd_grow(const ExperimentFlags& flags, const std::string& jobspec, std::uint64_t job, bool json_out)
{
    std::string config;
    auto s = flags.load(config);
    if (s != HGS_OK) {
        return fail(s);
    }
    auto exe = self_exe();
    Owned result;
    Owned samples;
    s = hgs_grow_run(config.c_str(), flags.processes ? exe.c_str() : nullptr, jobspec.c_str(), job, &result.p,
                     &samples.p);
    if (s != HGS_OK && s != HGS_NO_MATCH) {
        return fail(s);
    }
    auto r = nlohmann::json::parse(result.str());
    if (json_out) {
        std::cout << r.dump(2) << '\n';
    } else {
        print_grow(r);
    }
    auto out = std::filesystem::path(nlohmann::json::parse(config).at("out").get<std::string>());
    std::filesystem::create_directories(out);
    std::ofstream(out / "samples.jsonl", std::ios::app) << samples.str();
    return exit_code(s);
}

int cmd_bench(const ExperimentFlags& flags)
{
    std::string config;
    auto s = flags.load(config);
    if (s != HGS_OK) {
        return fail(s);
    }
    auto out = nlohmann::json::parse(config).at("out").get<std::string>();
    auto exe = self_exe();
    Owned summary;
    s = hgs_bench_run(config.c_str(), flags.processes ? exe.c_str() : nullptr, out.c_str(), &summary.p);
    std::cout << summary.str();
    if (s != HGS_OK) {
        return fail(s);
    }
    std::cout << "wrote " << out << "/samples.jsonl, summary.json, summary.txt\n";
    return kOk;
}

int cmd_fit(const std::string& log, std::uint64_t seed, const std::string& out)
{
    Owned report;
    Owned table;
    auto s = hgs_fit(read_file(log).c_str(), seed, &report.p, &table.p);
    if (table.p) {
        std::cout << table.str();
    }
    if (s != HGS_OK) {
        return fail(s);
    }
    if (!out.empty()) {
        write_file(std::filesystem::path(out) / "fit.json", report.str() + "\n");
        write_file(std::filesystem::path(out) / "fit.txt", table.str());
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app {"hgs: hierarchical graph scheduler experiments"};
    app.require_subcommand(1);

    auto* build = app.add_subcommand("build", "Write a canonical JGF graph and print its size");
    std::string build_config;
    int build_level = 0;
    std::string build_jgf;
    std::string build_output;
    bool build_pretty = false;
    std::int64_t nodes = 0, sockets = 0, cores = 0, gpus = 0, memory = 0;
    std::string cluster_name = "cluster0";
    auto* cfg_opt = build->add_option("--config", build_config, "Take a level's graph from a config");
    build->add_option("--level", build_level, "Level to take with --config")->needs(cfg_opt);
    build->add_option("--jgf", build_jgf, "Canonicalize an existing JGF file")->check(CLI::ExistingFile);
    build->add_option("--nodes", nodes, "Nodes in a synthetic cluster");
    build->add_option("--sockets", sockets, "Sockets per node");
    build->add_option("--cores", cores, "Cores per socket");
    build->add_option("--gpus", gpus, "GPUs per node");
    build->add_option("--memory", memory, "Memory units per socket");
    build->add_option("--name", cluster_name, "Cluster name");
    build->add_option("-o,--output", build_output, "Output file (default stdout)");
    build->add_flag("--pretty", build_pretty, "Indent the JSON");

    auto* grow = app.add_subcommand("grow", "Grow a job at the leaf of a hierarchy");
    ExperimentFlags grow_flags;
    grow_flags.add_to(grow, false);
    std::string jobspec;
    std::uint64_t job = 100;
    bool grow_json = false;
    grow->add_option("jobspec", jobspec, "Request text, e.g. \"node:8 socket:16 core:256\"")->required();
    grow->add_option("--job", job, "Job id at the leaf");
    grow->add_flag("--json", grow_json, "Print the result as JSON");

    auto* bench = app.add_subcommand("bench", "Run a request suite with state reset between trials");
    ExperimentFlags bench_flags;
    bench_flags.add_to(bench, true);

    auto* fit = app.add_subcommand("fit", "Fit linear models per phase and transport");
    std::string log;
    std::uint64_t fit_seed = 0;
    std::string fit_out;
    fit->add_option("log", log, "Sample log (JSON lines)")->required()->check(CLI::ExistingFile);
    fit->add_option("--seed", fit_seed, "Cross-validation shuffle seed");
    fit->add_option("--out", fit_out, "Directory for fit.json and fit.txt");

    auto* serve = app.add_subcommand("serve", "Serve one level of a hierarchy over TCP");
    std::string serve_config;
    int serve_level = 0;
    int parent_port = 0;
    int port = 0;
    bool stdin_eof = false;
    serve->add_option("--config", serve_config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    serve->add_option("--level", serve_level, "Level to serve")->required();
    serve->add_option("--parent-port", parent_port, "Port of the level above");
    serve->add_option("--port", port, "Port to listen on (0 picks one)");
    serve->add_flag("--stdin-eof", stdin_eof, "Exit when stdin closes");

    auto* model = app.add_subcommand("model", "Evaluate the grow-time bound and predictor");
    model->require_subcommand(1);
    auto* bound = model->add_subcommand("bound", "Upper bound on a geometric ladder");
    double b = 2, s0 = 1, t0 = 0, beta = 0, beta0 = 0;
    bound->add_option("--b", b, "Size ratio between levels")->required();
    bound->add_option("--s0", s0, "Size at the top")->required();
    bound->add_option("--t0", t0, "Time at the top")->required();
    bound->add_option("--beta", beta, "Per-unit cost");
    bound->add_option("--beta0", beta0, "Per-level cost");
    auto* predict = model->add_subcommand("predict", "Predicted grow time");
    double n = 0, m = 0, p = 0, q = 0, pt0 = 0;
    std::string models;
    predict->add_option("--n", n, "Request size")->required();
    predict->add_option("--m", m, "Inter-host levels")->required();
    predict->add_option("--p", p, "Intra-host levels")->required();
    predict->add_option("--q", q, "Levels that attach")->required();
    predict->add_option("--t0", pt0, "Match time at the satisfying level")->required();
    predict->add_option("--models", models, "Coefficients JSON file (default: reference)")
        ->check(CLI::ExistingFile);

    auto* provider = app.add_subcommand("provider", "Ask the mock provider for instances");
    std::string provider_spec;
    std::string catalog;
    std::uint64_t provider_seed = 0;
    provider->add_option("jobspec", provider_spec, "e.g. \"instance-type=t2.micro\"")->required();
    provider->add_option("--catalog", catalog, "Catalog JSON file")->check(CLI::ExistingFile);
    provider->add_option("--seed", provider_seed, "Seed for seeded_random fleets");

    CLI11_PARSE(app, argc, argv);

    if (auto s = hgs_set_log_level(nullptr); s != HGS_OK) {
        return fail(s);
    }

    try {
        if (*build) {
            int sources = !build_config.empty() + !build_jgf.empty() + (nodes > 0);
            if (sources != 1) {
                std::fprintf(stderr, "hgs build: give exactly one of --config, --jgf or --nodes\n");
                return kConfig;
            }
            nlohmann::json cluster = {{"nodes", nodes},
                                      {"sockets_per_node", sockets},
                                      {"cores_per_socket", cores},
                                      {"gpus_per_node", gpus},
                                      {"memory_per_socket", memory},
                                      {"name", cluster_name}};
            return cmd_build(build_config, build_level, build_jgf, cluster, build_output, build_pretty);
        }
        if (*grow) {
            return cmd_grow(grow_flags, jobspec, job, grow_json);
        }
        if (*bench) {
            return cmd_bench(bench_flags);
        }
        if (*fit) {
            return cmd_fit(log, fit_seed, fit_out);
        }
        if (*serve) {
            Owned config;
            auto s = hgs_config_load(serve_config.c_str(), &config.p);
            if (s == HGS_OK) {
                s = hgs_serve(config.p, serve_level, parent_port, port, stdin_eof);
            }
            return s == HGS_OK ? kOk : fail(s);
        }
        if (*bound) {
            double v = 0;
            auto s = hgs_model_bound(b, s0, t0, beta, beta0, &v);
            if (s != HGS_OK) {
                return fail(s);
            }
            std::printf("%.17g\n", v);
            return kOk;
        }
        if (*predict) {
            double v = 0;
            std::string body = models.empty() ? std::string() : read_file(models);
            auto s = hgs_model_predict(n, m, p, q, pt0, models.empty() ? nullptr : body.c_str(), &v);
            if (s != HGS_OK) {
                return fail(s);
            }
            std::printf("%.17g\n", v);
            return kOk;
        }
        if (*provider) {
            std::string body = catalog.empty() ? std::string() : read_file(catalog);
            Owned jgf;
            std::int64_t size = 0;
            auto s = hgs_provider_request(catalog.empty() ? nullptr : body.c_str(), provider_spec.c_str(),
                                          provider_seed, &jgf.p, &size);
            if (s != HGS_OK) {
                return fail(s);
            }
            std::cout << jgf.str() << '\n';
            std::cerr << "size " << size << '\n';
            return kOk;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "hgs: %s\n", e.what());
        return kOther;
    }
    return kOk;
}

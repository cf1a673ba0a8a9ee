/*
 * Copyright (C) 2026 The hgs Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "hgs/hgs.h"

#include <atomic>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include <poll.h>
#include <unistd.h>

#include <spdlog/spdlog.h>

#include "hgs/bench.hpp"
#include "hgs/error.hpp"
#include "hgs/hierarchy.hpp"
#include "hgs/jobspec.hpp"
#include "hgs/matcher.hpp"
#include "hgs/multiproc.hpp"
#include "hgs/perfmodel.hpp"
#include "hgs/provider.hpp"
#include "hgs/resource_graph.hpp"
#include "hgs/subgraph.hpp"

struct hgs_graph {
    hgs::ResourceGraph graph;
};

struct hgs_hierarchy {
    std::unique_ptr<hgs::Hierarchy> h;
};

namespace {

thread_local std::string g_error;

hgs_status status_of(hgs::ErrorKind kind)
{
    using hgs::ErrorKind;
    switch (kind) {
    case ErrorKind::InvalidArgument: return HGS_E_INVALID;
    case ErrorKind::Parse: return HGS_E_PARSE;
    case ErrorKind::DuplicateJob:
    case ErrorKind::UnknownJob:
    case ErrorKind::Refused: return HGS_E_REFUSED;
    case ErrorKind::Transport:
    case ErrorKind::Timeout:
    case ErrorKind::ConnectionLost:
    case ErrorKind::Framing: return HGS_E_TRANSPORT;
    case ErrorKind::Config: return HGS_E_CONFIG;
    case ErrorKind::Provider: return HGS_E_PROVIDER;
    case ErrorKind::Remote:
    case ErrorKind::Internal: return HGS_E_INTERNAL;
    }
    return HGS_E_INTERNAL;
}

template <class F>
hgs_status guard(F&& body) noexcept
{
    g_error.clear();
    try {
        return body();
    } catch (const hgs::Error& e) {
        g_error = e.what();
        return status_of(e.kind());
    } catch (const nlohmann::json::exception& e) {
        g_error = e.what();
        return HGS_E_PARSE;
    } catch (const std::exception& e) {
        g_error = e.what();
        return HGS_E_INTERNAL;
    } catch (...) {
        g_error = "unknown exception";
        return HGS_E_INTERNAL;
    }
}

char* dup_string(const std::string& s)
{
    auto* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) {
        throw std::bad_alloc();
    }
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void require(const void* p, const char* name)
{
    if (!p) {
        throw hgs::Error(hgs::ErrorKind::InvalidArgument, std::string(name) + " must not be NULL");
    }
}

hgs::ExperimentConfig config_of(const char* json)
{
    require(json, "config_json");
    nlohmann::json body;
    try {
        body = nlohmann::json::parse(json);
    } catch (const nlohmann::json::exception& e) {
        throw hgs::Error(hgs::ErrorKind::Config, std::string("config is not JSON: ") + e.what());
    }
    return hgs::config_from_json(body);
}

hgs::SchedulerInstance& level_of(hgs_hierarchy* h, int level)
{
    if (level < 0) {
        return h->h->leaf();
    }
    if (static_cast<std::size_t>(level) >= h->h->depth()) {
        throw hgs::Error(hgs::ErrorKind::InvalidArgument, "level out of range");
    }
    return h->h->level(static_cast<std::size_t>(level));
}

std::string samples_jsonl(const std::vector<hgs::TimingSample>& samples)
{
    std::ostringstream out;
    hgs::write_samples(out, samples);
    return out.str();
}

hgs::ModelSet models_of(const char* json)
{
    if (!json) {
        return hgs::reference_coefficients();
    }
    auto j = nlohmann::json::parse(json);
    auto row = [&](const char* key) {
        hgs::LinearModel m;
        m.beta = j.at(key).at("beta").get<double>();
        m.beta0 = j.at(key).value("beta0", 0.0);
        return m;
    };
    return {row("inter"), row("intra"), row("attach")};
}

std::atomic<bool> g_stop {false};

extern "C" void on_signal(int)
{
    g_stop = true;
}

bool stdin_closed()
{
    pollfd pfd {0, POLLIN, 0};
    if (::poll(&pfd, 1, 0) <= 0) {
        return false;
    }
    char buf[64];
    return ::read(0, buf, sizeof buf) <= 0;
}

} // namespace

extern "C" {

const char* hgs_last_error(void)
{
    return g_error.c_str();
}

const char* hgs_status_name(hgs_status status)
{
    switch (status) {
    case HGS_OK: return "ok";
    case HGS_NO_MATCH: return "no match";
    case HGS_E_INVALID: return "invalid argument";
    case HGS_E_PARSE: return "parse error";
    case HGS_E_CONFIG: return "config error";
    case HGS_E_TRANSPORT: return "transport error";
    case HGS_E_REFUSED: return "refused";
    case HGS_E_PROVIDER: return "provider error";
    case HGS_E_INCOMPLETE: return "incomplete";
    case HGS_E_INTERNAL: return "internal error";
    }
    return "unknown status";
}

void hgs_string_free(char* s)
{
    std::free(s);
}

hgs_status hgs_set_log_level(const char* level)
{
    return guard([&] {
        std::string name = level ? level : "";
        if (!level) {
            const char* env = std::getenv("HGS_LOG_LEVEL");
            name = env && *env ? env : "warn";
        }
        auto parsed = spdlog::level::from_str(name);
        if (parsed == spdlog::level::off && name != "off") {
            throw hgs::Error(level ? hgs::ErrorKind::InvalidArgument : hgs::ErrorKind::Config,
                             "unknown log level '" + name + "'");
        }
        spdlog::set_level(parsed);
        return HGS_OK;
    });
}

hgs_status hgs_graph_build(const char* cluster_json, hgs_graph** out)
{
    return guard([&] {
        require(cluster_json, "cluster_json");
        require(out, "out");
        auto j = nlohmann::json::parse(cluster_json);
        hgs::ClusterSpec spec;
        spec.nodes = j.at("nodes").get<std::int64_t>();
        spec.sockets_per_node = j.value("sockets_per_node", std::int64_t {0});
        spec.cores_per_socket = j.value("cores_per_socket", std::int64_t {0});
        spec.gpus_per_node = j.value("gpus_per_node", std::int64_t {0});
        spec.memory_per_socket = j.value("memory_per_socket", std::int64_t {0});
        spec.name = j.value("name", std::string("cluster0"));
        *out = new hgs_graph {hgs::build_synthetic_cluster(spec)};
        return HGS_OK;
    });
}

hgs_status hgs_graph_from_jgf(const char* jgf, hgs_graph** out)
{
    return guard([&] {
        require(jgf, "jgf");
        require(out, "out");
        *out = new hgs_graph {hgs::ResourceGraph::from_subgraph(hgs::deserialize_jgf(jgf))};
        return HGS_OK;
    });
}

void hgs_graph_free(hgs_graph* graph)
{
    delete graph;
}

hgs_status hgs_graph_to_jgf(const hgs_graph* graph, int pretty, char** out)
{
    return guard([&] {
        require(graph, "graph");
        require(out, "out");
        *out = dup_string(hgs::serialize_jgf(graph->graph.to_subgraph(), pretty != 0));
        return HGS_OK;
    });
}

size_t hgs_graph_size(const hgs_graph* graph)
{
    return graph ? graph->graph.size() : 0;
}

uint64_t hgs_graph_hash(const hgs_graph* graph)
{
    return graph ? graph->graph.hash() : 0;
}

int hgs_graph_lookup(const hgs_graph* graph, const char* path)
{
    return graph && path && hgs::lookup_by_path(graph->graph, path).has_value();
}

int hgs_graph_verify(const hgs_graph* graph)
{
    return graph && hgs::verify_aggregates(graph->graph);
}

hgs_status hgs_graph_match_allocate(hgs_graph* graph, const char* jobspec, uint64_t job, char** out)
{
    return guard([&] {
        require(graph, "graph");
        require(jobspec, "jobspec");
        require(out, "out");
        *out = nullptr;
        auto sg = hgs::match_allocate(graph->graph, hgs::parse_jobspec(jobspec), static_cast<hgs::JobId>(job));
        if (!sg) {
            return HGS_NO_MATCH;
        }
        *out = dup_string(hgs::serialize_jgf(*sg));
        return HGS_OK;
    });
}

hgs_status hgs_graph_cancel(hgs_graph* graph, uint64_t job)
{
    return guard([&] {
        require(graph, "graph");
        hgs::cancel(graph->graph, static_cast<hgs::JobId>(job));
        return HGS_OK;
    });
}

hgs_status hgs_jobspec_normalize(const char* jobspec, char** canonical, int64_t* size)
{
    return guard([&] {
        require(jobspec, "jobspec");
        auto spec = hgs::parse_jobspec(jobspec);
        if (canonical) {
            *canonical = dup_string(hgs::to_text(spec));
        }
        if (size) {
            *size = hgs::request_size(spec);
        }
        return HGS_OK;
    });
}

hgs_status hgs_config_load(const char* path, char** config_json)
{
    return guard([&] {
        require(path, "path");
        require(config_json, "config_json");
        *config_json = dup_string(hgs::to_json(hgs::load_config(path)).dump());
        return HGS_OK;
    });
}

hgs_status hgs_config_parse(const char* json, char** config_json)
{
    return guard([&] {
        require(config_json, "config_json");
        *config_json = dup_string(hgs::to_json(config_of(json)).dump());
        return HGS_OK;
    });
}

hgs_status hgs_hierarchy_create(const char* config_json, hgs_hierarchy** out)
{
    return guard([&] {
        require(out, "out");
        auto config = config_of(config_json);
        *out = new hgs_hierarchy {std::make_unique<hgs::Hierarchy>(config)};
        return HGS_OK;
    });
}

void hgs_hierarchy_free(hgs_hierarchy* h)
{
    delete h;
}

size_t hgs_hierarchy_depth(const hgs_hierarchy* h)
{
    return h ? h->h->depth() : 0;
}

hgs_status hgs_hierarchy_grow(hgs_hierarchy* h, int level, const char* jobspec, uint64_t job, char** result_json)
{
    return guard([&] {
        require(h, "h");
        require(jobspec, "jobspec");
        auto result = level_of(h, level).match_grow(hgs::parse_jobspec(jobspec), static_cast<hgs::JobId>(job));
        if (result_json) {
            *result_json = dup_string(hgs::to_json(result).dump());
        }
        return result.outcome == hgs::GrowOutcome::Failed ? HGS_NO_MATCH : HGS_OK;
    });
}

hgs_status hgs_hierarchy_shrink(hgs_hierarchy* h, int level, const char* paths_json, uint64_t job)
{
    return guard([&] {
        require(h, "h");
        require(paths_json, "paths_json");
        auto paths = nlohmann::json::parse(paths_json).get<std::vector<std::string>>();
        level_of(h, level).shrink(paths, static_cast<hgs::JobId>(job));
        return HGS_OK;
    });
}

hgs_status hgs_hierarchy_reset(hgs_hierarchy* h)
{
    return guard([&] {
        require(h, "h");
        h->h->reset();
        return HGS_OK;
    });
}

int hgs_hierarchy_inclusion(const hgs_hierarchy* h)
{
    return h && h->h->inclusion_holds();
}

hgs_status hgs_hierarchy_graph(const hgs_hierarchy* h, int level, int pretty, char** jgf)
{
    return guard([&] {
        require(h, "h");
        require(jgf, "jgf");
        auto& inst = level_of(const_cast<hgs_hierarchy*>(h), level);
        *jgf = dup_string(hgs::serialize_jgf(inst.graph().to_subgraph(), pretty != 0));
        return HGS_OK;
    });
}

hgs_status hgs_hierarchy_take_samples(hgs_hierarchy* h, char** jsonl)
{
    return guard([&] {
        require(h, "h");
        require(jsonl, "jsonl");
        *jsonl = dup_string(samples_jsonl(h->h->take_samples()));
        return HGS_OK;
    });
}

hgs_status hgs_grow_run(const char* config_json, const char* exe, const char* jobspec, uint64_t job,
                        char** result_json, char** samples_out)
{
    return guard([&] {
        require(jobspec, "jobspec");
        auto config = config_of(config_json);
        auto spec = hgs::parse_jobspec(jobspec);
        hgs::GrowResult result;
        std::vector<hgs::TimingSample> samples;
        if (exe) {
            hgs::ProcessChain chain(exe, config);
            hgs::RemoteDriver driver(config, chain.leaf_parent_port());
            result = driver.grow(spec, static_cast<hgs::JobId>(job));
            samples = driver.take_samples();
        } else {
            hgs::Hierarchy h(config);
            result = h.leaf().match_grow(spec, static_cast<hgs::JobId>(job));
            samples = h.take_samples();
        }
        if (result_json) {
            *result_json = dup_string(hgs::to_json(result).dump());
        }
        if (samples_out) {
            *samples_out = dup_string(samples_jsonl(samples));
        }
        return result.outcome == hgs::GrowOutcome::Failed ? HGS_NO_MATCH : HGS_OK;
    });
}

hgs_status hgs_bench_run(const char* config_json, const char* exe, const char* out_dir, char** summary_text)
{
    return guard([&] {
        require(out_dir, "out_dir");
        auto config = config_of(config_json);
        if (config.suite.empty()) {
            throw hgs::Error(hgs::ErrorKind::Config, "config has no request suite");
        }
        auto progress = [](const hgs::BenchTrial& t) {
            spdlog::info("{} rep {}: {} in {:.6f}s", t.request, t.rep, hgs::to_string(t.outcome), t.total_s);
        };
        hgs::BenchReport report;
        if (exe) {
            hgs::ProcessChain chain(exe, config);
            hgs::RemoteDriver driver(config, chain.leaf_parent_port());
            report = hgs::run_bench(driver, config.suite, config.repetitions, progress);
        } else {
            hgs::Hierarchy h(config);
            hgs::LocalDriver driver(h);
            report = hgs::run_bench(driver, config.suite, config.repetitions, progress);
        }
        hgs::write_bench(report, out_dir);
        if (summary_text) {
            *summary_text = dup_string(hgs::format_summary(report));
        }
        if (!report.complete) {
            g_error = report.error;
            return HGS_E_INCOMPLETE;
        }
        if (!report.reset_ok()) {
            g_error = "a trial started from a different state than the first";
            return HGS_E_INTERNAL;
        }
        return HGS_OK;
    });
}

hgs_status hgs_serve(const char* config_json, int level, int parent_port, int port, int stdin_eof)
{
    return guard([&] {
        auto config = config_of(config_json);
        if (level < 0 || port < 0 || port > 65535 || parent_port > 65535) {
            throw hgs::Error(hgs::ErrorKind::InvalidArgument, "bad level or port");
        }
        hgs::ServeOptions options;
        options.level = static_cast<std::size_t>(level);
        options.port = static_cast<std::uint16_t>(port);
        if (parent_port > 0) {
            options.parent_port = static_cast<std::uint16_t>(parent_port);
        }
        g_stop = false;
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        std::signal(SIGPIPE, SIG_IGN);
        hgs::serve_level(
            config, options,
            [](std::uint16_t p) {
                std::printf("listening %u\n", static_cast<unsigned>(p));
                std::fflush(stdout);
            },
            [&] { return g_stop.load() || (stdin_eof && stdin_closed()); });
        return HGS_OK;
    });
}

hgs_status hgs_fit(const char* samples, uint64_t seed, char** report_json, char** table_text)
{
    return guard([&] {
        require(samples, "samples_jsonl");
        std::istringstream in(samples);
        auto parsed = hgs::read_samples(in);
        if (parsed.empty()) {
            throw hgs::Error(hgs::ErrorKind::Parse, "sample log is empty");
        }
        hgs::FitOptions options;
        options.seed = seed;
        auto rows = hgs::fit_report(parsed, options);
        if (report_json) {
            *report_json = dup_string(hgs::to_json(rows).dump(2));
        }
        if (table_text) {
            *table_text = dup_string(hgs::format_table(rows));
        }
        bool any = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.model.has_value(); });
        if (!any) {
            g_error = "no group has enough samples to fit";
            return HGS_E_INVALID;
        }
        return HGS_OK;
    });
}

hgs_status hgs_model_bound(double b, double s0, double t0, double beta, double beta0, double* out)
{
    return guard([&] {
        require(out, "out");
        *out = hgs::geometric_bound({b, s0, t0, beta, beta0});
        return HGS_OK;
    });
}

hgs_status hgs_model_predict(double n, double m, double p, double q, double t0, const char* models_json, double* out)
{
    return guard([&] {
        require(out, "out");
        *out = hgs::predict_t_mg(n, m, p, q, t0, models_of(models_json));
        return HGS_OK;
    });
}

hgs_status hgs_provider_request(const char* catalog_json, const char* jobspec, uint64_t seed, char** jgf,
                                int64_t* size)
{
    return guard([&] {
        require(jobspec, "jobspec");
        auto catalog = catalog_json ? hgs::catalog_from_json(nlohmann::json::parse(catalog_json))
                                    : hgs::default_catalog();
        hgs::MockProvider provider(catalog, seed);
        auto sg = provider.external_api(hgs::parse_jobspec(jobspec), "/cluster0", 1);
        if (jgf) {
            *jgf = dup_string(hgs::serialize_jgf(sg));
        }
        if (size) {
            *size = static_cast<std::int64_t>(sg.size());
        }
        return HGS_OK;
    });
}

} // extern "C"

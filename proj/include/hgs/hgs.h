/*
 * Copyright (C) 2026 The hgs Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

/*
 * C interface to libhgs.
 *
 * Every call returns an hgs_status. On failure hgs_last_error() describes
 * the problem; the message is per thread and lives until the next call.
 * Strings returned through char** belong to the caller and are released
 * with hgs_string_free(). Documents are JSON text; graphs are JGF.
 */

#ifndef HGS_HGS_H
#define HGS_HGS_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hgs_status {
    HGS_OK = 0,
    HGS_NO_MATCH = 1,      /* request could not be satisfied */
    HGS_E_INVALID = 2,     /* bad argument */
    HGS_E_PARSE = 3,       /* malformed jobspec, JGF or sample log */
    HGS_E_CONFIG = 4,      /* bad or unreadable configuration */
    HGS_E_TRANSPORT = 5,   /* connection, framing or timeout failure */
    HGS_E_REFUSED = 6,     /* duplicate or unknown job, shrink refused */
    HGS_E_PROVIDER = 7,    /* external provider rejected the request */
    HGS_E_INCOMPLETE = 8,  /* benchmark stopped early; partial output written */
    HGS_E_INTERNAL = 9
} hgs_status;

typedef struct hgs_graph hgs_graph;
typedef struct hgs_hierarchy hgs_hierarchy;

const char* hgs_last_error(void);
const char* hgs_status_name(hgs_status status);
void hgs_string_free(char* s);

/* "trace" .. "off"; NULL reads HGS_LOG_LEVEL (default "warn"). */
hgs_status hgs_set_log_level(const char* level);

/* Graphs */
hgs_status hgs_graph_build(const char* cluster_json, hgs_graph** out);
hgs_status hgs_graph_from_jgf(const char* jgf, hgs_graph** out);
void hgs_graph_free(hgs_graph* graph);
hgs_status hgs_graph_to_jgf(const hgs_graph* graph, int pretty, char** out);
size_t hgs_graph_size(const hgs_graph* graph);
uint64_t hgs_graph_hash(const hgs_graph* graph);
/* Nonzero when a vertex with this path exists. */
int hgs_graph_lookup(const hgs_graph* graph, const char* path);
int hgs_graph_verify(const hgs_graph* graph);
/* HGS_NO_MATCH leaves the graph unchanged and *out NULL. */
hgs_status hgs_graph_match_allocate(hgs_graph* graph, const char* jobspec, uint64_t job, char** out);
hgs_status hgs_graph_cancel(hgs_graph* graph, uint64_t job);

/* Jobspecs */
hgs_status hgs_jobspec_normalize(const char* jobspec, char** canonical, int64_t* size);

/* Configurations: a file or JSON text in, normalized JSON out. */
hgs_status hgs_config_load(const char* path, char** config_json);
hgs_status hgs_config_parse(const char* json, char** config_json);

/* A hierarchy in this process. */
hgs_status hgs_hierarchy_create(const char* config_json, hgs_hierarchy** out);
void hgs_hierarchy_free(hgs_hierarchy* h);
size_t hgs_hierarchy_depth(const hgs_hierarchy* h);
/* Grow at `level` (-1 for the leaf). A failed grow returns HGS_NO_MATCH and
 * still fills *result_json. */
hgs_status hgs_hierarchy_grow(hgs_hierarchy* h, int level, const char* jobspec, uint64_t job, char** result_json);
/* paths_json: JSON list of subtree root paths. */
hgs_status hgs_hierarchy_shrink(hgs_hierarchy* h, int level, const char* paths_json, uint64_t job);
hgs_status hgs_hierarchy_reset(hgs_hierarchy* h);
int hgs_hierarchy_inclusion(const hgs_hierarchy* h);
hgs_status hgs_hierarchy_graph(const hgs_hierarchy* h, int level, int pretty, char** jgf);
/* Samples recorded since the last call, one JSON object per line. */
hgs_status hgs_hierarchy_take_samples(hgs_hierarchy* h, char** jsonl);

/*
 * Experiment drivers. When `exe` is non-NULL every level but the leaf runs
 * as `exe serve` in its own process; otherwise all levels share this one.
 */
hgs_status hgs_grow_run(const char* config_json, const char* exe, const char* jobspec, uint64_t job,
                        char** result_json, char** samples_jsonl);
/* Writes samples.jsonl, summary.json and summary.txt under out_dir. */
hgs_status hgs_bench_run(const char* config_json, const char* exe, const char* out_dir, char** summary_text);
/* Serve one level. Prints "listening <port>" on stdout once ready, then
 * blocks until SIGINT/SIGTERM, or stdin reaching EOF when stdin_eof != 0. */
hgs_status hgs_serve(const char* config_json, int level, int parent_port, int port, int stdin_eof);

/* Models */
hgs_status hgs_fit(const char* samples_jsonl, uint64_t seed, char** report_json, char** table_text);
hgs_status hgs_model_bound(double b, double s0, double t0, double beta, double beta0, double* out);
/* models_json NULL uses the reference coefficients. */
hgs_status hgs_model_predict(double n, double m, double p, double q, double t0, const char* models_json, double* out);

/* Mock provider: one external_api call against a fresh provider. */
hgs_status hgs_provider_request(const char* catalog_json, const char* jobspec, uint64_t seed, char** jgf,
                                int64_t* size);

#ifdef __cplusplus
}
#endif

#endif

/* C interface to the swarmlab simulator.
 *
 * Objects are opaque handles created by swl_*_new / swl_*_load functions and
 * released with the matching swl_*_free. Every fallible call returns a
 * swl_status; on failure, swl_last_error() describes the problem (the text
 * is per thread and valid until the next failing call on that thread).
 * Buffers returned through swl_buffer are owned by the caller and released
 * with swl_buffer_free.
 */
#ifndef SWARMLAB_SWARMLAB_H
#define SWARMLAB_SWARMLAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  define SWL_API __declspec(dllexport)
#else
#  define SWL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum swl_status {
  SWL_OK = 0,
  SWL_E_INVALID = 1,      /* bad argument or malformed input */
  SWL_E_INFEASIBLE = 2,   /* no deletion plan satisfies the rules */
  SWL_E_UNAVAILABLE = 3,  /* data could not be retrieved */
  SWL_E_IO = 4,           /* filesystem failure */
  SWL_E_CORRUPT = 5,      /* stored data fails integrity checks */
  SWL_E_PRECONDITION = 6, /* operation not allowed in the current state */
  SWL_E_INTERNAL = 7
} swl_status;

typedef enum swl_sync_mode { SWL_SYNC_FULL = 0, SWL_SYNC_NONE = 1 } swl_sync_mode;

typedef struct swl_network swl_network;
typedef struct swl_manifest swl_manifest;
typedef struct swl_placement swl_placement;
typedef struct swl_deletion_list swl_deletion_list;

typedef struct swl_buffer {
  uint8_t* data;
  size_t size;
} swl_buffer;

typedef struct swl_sim_config {
  size_t num_peers;
  uint64_t seed;
  size_t view_size;
  size_t ns;
  swl_sync_mode sync_mode;
  size_t num_backends;
} swl_sim_config;

typedef struct swl_upload_options {
  size_t chunk_size; /* 0 selects 4096 */
  size_t branching;  /* 0 selects 128 */
  size_t k;          /* k == 0 uploads without erasure coding */
  size_t n;
  size_t uploader;   /* peer index */
} swl_upload_options;

typedef struct swl_retrieval_stats {
  int success;
  size_t chunks_fetched;
  uint64_t hops;
  uint64_t bytes;
  size_t repaired_groups;
  size_t repaired_chunks;
} swl_retrieval_stats;

SWL_API const char* swl_last_error(void);
SWL_API const char* swl_version(void);
SWL_API void swl_buffer_free(swl_buffer* buffer);

/* Fills defaults: view_size 16, ns 4, full sync, 29 backends. */
SWL_API void swl_sim_config_init(swl_sim_config* config);

/* chunker */
SWL_API swl_status swl_tree_shape(uint64_t file_size, size_t chunk_size, size_t branching, size_t* counts,
                                  size_t capacity, size_t* levels);
SWL_API swl_status swl_content_address(const uint8_t* data, size_t size, char hex_out[65]);

/* network */
SWL_API swl_status swl_network_new(const swl_sim_config* config, swl_network** out);
/* Loads a network state directory (snapshot layout), keeping its sync mode. */
SWL_API swl_status swl_network_load(const char* dir, swl_network** out);
SWL_API swl_status swl_network_save(const swl_network* net, const char* dir);
SWL_API void swl_network_free(swl_network* net);
SWL_API swl_status swl_network_config(const swl_network* net, swl_sim_config* out);
SWL_API swl_status swl_network_set_sync_mode(swl_network* net, swl_sync_mode mode);
SWL_API swl_status swl_network_warnings(const swl_network* net, swl_buffer* out);
SWL_API swl_status swl_network_dump_views(const swl_network* net, swl_buffer* out);

SWL_API swl_status swl_upload(swl_network* net, const uint8_t* data, size_t size, const swl_upload_options* options,
                              swl_manifest** out);
SWL_API swl_status swl_retrieve(const swl_network* net, const swl_manifest* manifest, size_t from_peer,
                                swl_buffer* data_out, swl_retrieval_stats* stats_out);
/* Fails a seeded fraction of peers; *failed receives the number selected. */
SWL_API swl_status swl_fail_fraction(swl_network* net, double fraction, uint64_t seed, size_t* failed);
/* Writes a degree report; returns SWL_E_PRECONDITION when some peer is under min_degree. */
SWL_API swl_status swl_wait_for_connectivity(const swl_network* net, size_t min_degree, swl_buffer* report_out);

/* Snapshot layout on disk: manifest.txt + backend-<b>/<peer>/<chunk>. */
SWL_API swl_status swl_snapshot_save(const swl_network* net, const char* dir);
/* Restores a snapshot into net: same stores, failures cleared, no-sync on. */
SWL_API swl_status swl_restore(swl_network* net, const char* dir);
SWL_API swl_status swl_census_digest(const swl_network* net, char hex_out[65]);
/* Text summary of the census; writes the two census CSVs when outdir is non-null. */
SWL_API swl_status swl_stats(const swl_network* net, const char* outdir, swl_buffer* summary_out);

/* manifests (plain or erasure coded) */
SWL_API swl_status swl_manifest_load(const char* path, swl_manifest** out);
SWL_API swl_status swl_manifest_save(const swl_manifest* manifest, const char* path);
SWL_API void swl_manifest_free(swl_manifest* manifest);
/* Chunk addresses as hex lines. With net, internal chunks are fetched from
 * the network; otherwise the manifest layout is used. */
SWL_API swl_status swl_listchunks(const swl_manifest* manifest, const swl_network* net, swl_buffer* out);

/* tools */
SWL_API swl_status swl_placement_from_network(const swl_network* net, const swl_manifest* manifest,
                                              const char* file_id, swl_placement** out);
SWL_API swl_status swl_placement_load(const char* path, swl_placement** out);
SWL_API swl_status swl_placement_save(const swl_placement* placement, const char* path);
SWL_API swl_status swl_placement_merge(swl_placement* into, const swl_placement* from);
SWL_API swl_status swl_placement_new(swl_placement** out);
SWL_API void swl_placement_free(swl_placement* placement);

SWL_API swl_status swl_bakedeletion(const swl_placement* placement, size_t target_r, swl_deletion_list** out);
/* placement may be null; when given, the union is re-checked against it. */
SWL_API swl_status swl_combinestorage(const swl_deletion_list* const* lists, size_t count,
                                      const swl_placement* placement, swl_deletion_list** out);
SWL_API swl_status swl_deletechunks(swl_network* net, const swl_deletion_list* list, size_t* applied,
                                    size_t* missing);
SWL_API swl_status swl_deletion_list_load(const char* path, swl_deletion_list** out);
SWL_API swl_status swl_deletion_list_save(const swl_deletion_list* list, const char* path);
SWL_API size_t swl_deletion_list_size(const swl_deletion_list* list);
SWL_API void swl_deletion_list_free(swl_deletion_list* list);

/* harness */
typedef struct swl_experiment_overrides {
  const char* output_dir; /* replaces output_dir when non-null */
  int has_seed;
  uint64_t seed;
  int no_sync;            /* upload with syncing disabled */
} swl_experiment_overrides;

/* Runs a key=value experiment config end to end and writes the CSV reports.
 * overrides and summary_out may be null. */
SWL_API swl_status swl_experiment_run(const char* config_path, const swl_experiment_overrides* overrides,
                                      swl_buffer* summary_out);

#ifdef __cplusplus
}
#endif

#endif /* SWARMLAB_SWARMLAB_H */

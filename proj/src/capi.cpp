#include "swarmlab/swarmlab.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <sstream>

#include "swarmlab/harness.hpp"

using namespace swarmlab;

struct swl_network {
  Network net;
};
struct swl_manifest {
  EncodedManifest manifest;
};
struct swl_placement {
  PlacementMap map;
};
struct swl_deletion_list {
  DeletionList list;
};

namespace {

thread_local std::string g_last_error;

swl_status fail(swl_status code, std::string message) {
  g_last_error = std::move(message);
  return code;
}

swl_status to_status(Errc code) {
  switch (code) {
    case Errc::kInvalidArgument: return SWL_E_INVALID;
    case Errc::kInfeasible: return SWL_E_INFEASIBLE;
    case Errc::kUnavailable: return SWL_E_UNAVAILABLE;
    case Errc::kIo: return SWL_E_IO;
    case Errc::kCorrupt: return SWL_E_CORRUPT;
    case Errc::kPrecondition: return SWL_E_PRECONDITION;
  }
  return SWL_E_INTERNAL;
}

template <typename F>
swl_status guarded(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    return fail(to_status(e.code()), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(SWL_E_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(SWL_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SWL_E_INTERNAL, e.what());
  }
}

swl_status require(bool cond, const char* what) {
  return cond ? SWL_OK : fail(SWL_E_INVALID, std::string("null argument: ") + what);
}

#define SWL_REQUIRE(cond)                                         \
  do {                                                            \
    if (swl_status s_ = require((cond), #cond); s_ != SWL_OK) return s_; \
  } while (0)

void fill_buffer(swl_buffer* out, std::string_view bytes) {
  out->data = static_cast<uint8_t*>(std::malloc(bytes.size() ? bytes.size() : 1));
  if (!out->data) throw std::bad_alloc();
  std::memcpy(out->data, bytes.data(), bytes.size());
  out->size = bytes.size();
}

void fill_buffer(swl_buffer* out, const Bytes& bytes) {
  fill_buffer(out, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

SimConfig from_c(const swl_sim_config& c) {
  SimConfig s;
  s.num_peers = c.num_peers;
  s.seed = c.seed;
  s.view_size = c.view_size;
  s.ns = c.ns;
  s.sync_mode = c.sync_mode == SWL_SYNC_NONE ? SyncMode::kNoSync : SyncMode::kFull;
  s.num_backends = c.num_backends;
  return s;
}

void copy_hex(const Hash256& h, char out[65]) {
  const auto hex = h.hex();
  std::memcpy(out, hex.c_str(), 65);
}

std::ofstream open_write(const char* path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIo, std::string("cannot write ") + path);
  return out;
}

std::ifstream open_read(const char* path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, std::string("cannot read ") + path);
  return in;
}

bool is_plain(const EncodedManifest& m) { return m.groups.empty() && m.params == CodingParams{}; }

}  // namespace

extern "C" {

const char* swl_last_error(void) { return g_last_error.c_str(); }

const char* swl_version(void) { return "0.1.0"; }

void swl_buffer_free(swl_buffer* buffer) {
  if (!buffer) return;
  std::free(buffer->data);
  buffer->data = nullptr;
  buffer->size = 0;
}

void swl_sim_config_init(swl_sim_config* config) {
  if (!config) return;
  const SimConfig d;
  config->num_peers = 0;
  config->seed = 0;
  config->view_size = d.view_size;
  config->ns = d.ns;
  config->sync_mode = SWL_SYNC_FULL;
  config->num_backends = d.num_backends;
}

swl_status swl_tree_shape(uint64_t file_size, size_t chunk_size, size_t branching, size_t* counts, size_t capacity,
                          size_t* levels) {
  SWL_REQUIRE(levels);
  return guarded([&] {
    const auto shape = tree_shape(file_size, ChunkParams{chunk_size, branching});
    *levels = shape.size();
    if (counts) {
      if (capacity < shape.size()) return fail(SWL_E_INVALID, "counts array too small");
      std::copy(shape.begin(), shape.end(), counts);
    }
    return SWL_OK;
  });
}

swl_status swl_content_address(const uint8_t* data, size_t size, char hex_out[65]) {
  SWL_REQUIRE(data || size == 0);
  SWL_REQUIRE(hex_out);
  return guarded([&] {
    copy_hex(content_address(ByteView(data, size)), hex_out);
    return SWL_OK;
  });
}

swl_status swl_network_new(const swl_sim_config* config, swl_network** out) {
  SWL_REQUIRE(config);
  SWL_REQUIRE(out);
  return guarded([&] {
    *out = new swl_network{Network(from_c(*config))};
    return SWL_OK;
  });
}

swl_status swl_network_load(const char* dir, swl_network** out) {
  SWL_REQUIRE(dir);
  SWL_REQUIRE(out);
  return guarded([&] {
    *out = new swl_network{Network::from_snapshot(load_snapshot(dir))};
    return SWL_OK;
  });
}

swl_status swl_network_save(const swl_network* net, const char* dir) {
  SWL_REQUIRE(net);
  SWL_REQUIRE(dir);
  return guarded([&] {
    save_snapshot(net->net.snapshot(), dir);
    return SWL_OK;
  });
}

void swl_network_free(swl_network* net) { delete net; }

swl_status swl_network_config(const swl_network* net, swl_sim_config* out) {
  SWL_REQUIRE(net);
  SWL_REQUIRE(out);
  const auto& c = net->net.config();
  out->num_peers = c.num_peers;
  out->seed = c.seed;
  out->view_size = c.view_size;
  out->ns = c.ns;
  out->sync_mode = c.sync_mode == SyncMode::kNoSync ? SWL_SYNC_NONE : SWL_SYNC_FULL;
  out->num_backends = c.num_backends;
  return SWL_OK;
}

swl_status swl_network_set_sync_mode(swl_network* net, swl_sync_mode mode) {
  SWL_REQUIRE(net);
  net->net.set_sync_mode(mode == SWL_SYNC_NONE ? SyncMode::kNoSync : SyncMode::kFull);
  return SWL_OK;
}

swl_status swl_network_warnings(const swl_network* net, swl_buffer* out) {
  SWL_REQUIRE(net);
  SWL_REQUIRE(out);
  return guarded([&] {
    std::string text;
    for (const auto& w : net->net.warnings()) text += w + "\n";
    fill_buffer(out, text);
    return SWL_OK;
  });
}

swl_status swl_network_dump_views(const swl_network* net, swl_buffer* out) {
  SWL_REQUIRE(net);
  SWL_REQUIRE(out);
  return guarded([&] {
    std::ostringstream text;
    dump_views(text, net->net.views());
    fill_buffer(out, text.str());
    return SWL_OK;
  });
}

swl_status swl_upload(swl_network* net, const uint8_t* data, size_t size, const swl_upload_options* options,
                      swl_manifest** out) {
  SWL_REQUIRE(net);
  SWL_REQUIRE(data || size == 0);
  SWL_REQUIRE(options);
  SWL_REQUIRE(out);
  return guarded([&] {
    ChunkParams params;
    if (options->chunk_size) params.chunk_size = options->chunk_size;
    if (options->branching) params.branching = options->branching;
    std::optional<CodingParams> coding;
    if (options->k) coding = CodingParams{options->k, options->n};
    auto m = net->net.upload(ByteView(data, size), params, coding, options->uploader);
    *out = new swl_manifest{std::move(m)};
    return SWL_OK;
  });
}

swl_status swl_retrieve(const swl_network* net, const swl_manifest* manifest, size_t from_peer, swl_buffer* data_out,
                        swl_retrieval_stats* stats_out) {
  SWL_REQUIRE(net);
  SWL_REQUIRE(manifest);
  return guarded([&] {
    const auto r = net->net.retrieve(manifest->manifest, from_peer);
    if (stats_out) {
      stats_out->success = r.success ? 1 : 0;
      stats_out->chunks_fetched = r.stats.chunks_fetched;
      stats_out->hops = r.stats.hops;
      stats_out->bytes = r.stats.bytes;
      stats_out->repaired_groups = r.stats.repaired_groups;
      stats_out->repaired_chunks = r.stats.repaired_chunks;
    }
    if (!r.success) return fail(SWL_E_UNAVAILABLE, r.failure);
    if (data_out) fill_buffer(data_out, r.data);
    return SWL_OK;
  });
}

swl_status swl_fail_fraction(swl_network* net, double fraction, uint64_t seed, size_t* failed) {
  SWL_REQUIRE(net);
  return guarded([&] {
    const auto f = net->net.fail_peers(fraction, seed);
    if (failed) *failed = f.size();
    return SWL_OK;
  });
}

swl_status swl_wait_for_connectivity(const swl_network* net, size_t min_degree, swl_buffer* report_out) {
  SWL_REQUIRE(net);
  return guarded([&] {
    const auto report = net->net.wait_for_connectivity(min_degree);
    if (report_out) fill_buffer(report_out, report.describe() + "\n");
    if (!report.ok) return fail(SWL_E_PRECONDITION, report.describe());
    return SWL_OK;
  });
}

swl_status swl_snapshot_save(const swl_network* net, const char* dir) { return swl_network_save(net, dir); }

swl_status swl_restore(swl_network* net, const char* dir) {
  SWL_REQUIRE(net);
  SWL_REQUIRE(dir);
  return guarded([&] {
    net->net.restore(load_snapshot(dir));
    return SWL_OK;
  });
}

swl_status swl_census_digest(const swl_network* net, char hex_out[65]) {
  SWL_REQUIRE(net);
  SWL_REQUIRE(hex_out);
  copy_hex(net->net.census_digest(), hex_out);
  return SWL_OK;
}

swl_status swl_stats(const swl_network* net, const char* outdir, swl_buffer* summary_out) {
  SWL_REQUIRE(net);
  return guarded([&] {
    const auto census = take_census(net->net);
    if (outdir) {
      std::filesystem::create_directories(outdir);
      write_census_csv(census, std::filesystem::path(outdir) / "replicas_per_chunk.csv",
                       std::filesystem::path(outdir) / "chunks_per_peer.csv");
    }
    if (summary_out) {
      std::ostringstream s;
      s << "peers=" << net->net.size() << '\n'
        << "sync_mode=" << to_string(net->net.sync_mode()) << '\n'
        << "unique_chunks=" << census.unique_chunks << '\n'
        << "total_replicas=" << census.total_replicas << '\n';
      if (!census.replicas_per_chunk.empty()) {
        s << "min_replicas=" << census.replicas_per_chunk.begin()->first << '\n'
          << "max_replicas=" << census.replicas_per_chunk.rbegin()->first << '\n';
      }
      s << "census_digest=" << net->net.census_digest().hex() << '\n';
      fill_buffer(summary_out, s.str());
    }
    return SWL_OK;
  });
}

swl_status swl_manifest_load(const char* path, swl_manifest** out) {
  SWL_REQUIRE(path);
  SWL_REQUIRE(out);
  return guarded([&] {
    auto in = open_read(path);
    *out = new swl_manifest{read_encoded_manifest(in)};
    return SWL_OK;
  });
}

swl_status swl_manifest_save(const swl_manifest* manifest, const char* path) {
  SWL_REQUIRE(manifest);
  SWL_REQUIRE(path);
  return guarded([&] {
    auto out = open_write(path);
    if (is_plain(manifest->manifest)) {
      write_manifest(out, manifest->manifest.base);
    } else {
      write_encoded_manifest(out, manifest->manifest);
    }
    if (!out) throw Error(Errc::kIo, std::string("cannot write ") + path);
    return SWL_OK;
  });
}

void swl_manifest_free(swl_manifest* manifest) { delete manifest; }

swl_status swl_listchunks(const swl_manifest* manifest, const swl_network* net, swl_buffer* out) {
  SWL_REQUIRE(manifest);
  SWL_REQUIRE(out);
  return guarded([&] {
    std::vector<ContentAddress> addrs;
    if (net) {
      addrs = listchunks(manifest->manifest, [net](const ContentAddress& a) { return net->net.fetch_live(a); });
    } else {
      addrs = listchunks(manifest->manifest);
    }
    std::string text;
    text.reserve(addrs.size() * 65);
    for (const auto& a : addrs) text += a.hex() + "\n";
    fill_buffer(out, text);
    return SWL_OK;
  });
}

swl_status swl_placement_from_network(const swl_network* net, const swl_manifest* manifest, const char* file_id,
                                      swl_placement** out) {
  SWL_REQUIRE(net);
  SWL_REQUIRE(manifest);
  SWL_REQUIRE(file_id);
  SWL_REQUIRE(out);
  return guarded([&] {
    const std::string id(file_id);
    if (id.empty() || id.find_first_of(" \t\n") != std::string::npos) {
      return fail(SWL_E_INVALID, "file id must be non-empty and contain no whitespace");
    }
    auto addrs = listchunks(manifest->manifest, [net](const ContentAddress& a) { return net->net.fetch_live(a); });
    *out = new swl_placement{placement_from_network(net->net, {{id, std::move(addrs)}})};
    return SWL_OK;
  });
}

swl_status swl_placement_load(const char* path, swl_placement** out) {
  SWL_REQUIRE(path);
  SWL_REQUIRE(out);
  return guarded([&] {
    auto in = open_read(path);
    *out = new swl_placement{read_placement(in)};
    return SWL_OK;
  });
}

swl_status swl_placement_save(const swl_placement* placement, const char* path) {
  SWL_REQUIRE(placement);
  SWL_REQUIRE(path);
  return guarded([&] {
    auto out = open_write(path);
    write_placement(out, placement->map);
    if (!out) throw Error(Errc::kIo, std::string("cannot write ") + path);
    return SWL_OK;
  });
}

swl_status swl_placement_merge(swl_placement* into, const swl_placement* from) {
  SWL_REQUIRE(into);
  SWL_REQUIRE(from);
  return guarded([&] {
    into->map.merge(from->map);
    return SWL_OK;
  });
}

swl_status swl_placement_new(swl_placement** out) {
  SWL_REQUIRE(out);
  return guarded([&] {
    *out = new swl_placement{};
    return SWL_OK;
  });
}

void swl_placement_free(swl_placement* placement) { delete placement; }

swl_status swl_bakedeletion(const swl_placement* placement, size_t target_r, swl_deletion_list** out) {
  SWL_REQUIRE(placement);
  SWL_REQUIRE(out);
  return guarded([&] {
    *out = new swl_deletion_list{bakedeletion(placement->map, target_r)};
    return SWL_OK;
  });
}

swl_status swl_combinestorage(const swl_deletion_list* const* lists, size_t count, const swl_placement* placement,
                              swl_deletion_list** out) {
  SWL_REQUIRE(lists || count == 0);
  SWL_REQUIRE(out);
  return guarded([&] {
    std::vector<DeletionList> in;
    in.reserve(count);
    for (size_t i = 0; i < count; ++i) {
      if (!lists[i]) return fail(SWL_E_INVALID, "null deletion list");
      in.push_back(lists[i]->list);
    }
    *out = new swl_deletion_list{combinestorage(in, placement ? &placement->map : nullptr)};
    return SWL_OK;
  });
}

swl_status swl_deletechunks(swl_network* net, const swl_deletion_list* list, size_t* applied, size_t* missing) {
  SWL_REQUIRE(net);
  SWL_REQUIRE(list);
  return guarded([&] {
    const auto r = deletechunks(net->net, list->list);
    if (applied) *applied = r.applied;
    if (missing) *missing = r.missing;
    return SWL_OK;
  });
}

swl_status swl_deletion_list_load(const char* path, swl_deletion_list** out) {
  SWL_REQUIRE(path);
  SWL_REQUIRE(out);
  return guarded([&] {
    auto in = open_read(path);
    *out = new swl_deletion_list{read_deletion_list(in)};
    return SWL_OK;
  });
}

swl_status swl_deletion_list_save(const swl_deletion_list* list, const char* path) {
  SWL_REQUIRE(list);
  SWL_REQUIRE(path);
  return guarded([&] {
    auto out = open_write(path);
    write_deletion_list(out, list->list);
    if (!out) throw Error(Errc::kIo, std::string("cannot write ") + path);
    return SWL_OK;
  });
}

size_t swl_deletion_list_size(const swl_deletion_list* list) { return list ? list->list.size() : 0; }

void swl_deletion_list_free(swl_deletion_list* list) { delete list; }

swl_status swl_experiment_run(const char* config_path, const swl_experiment_overrides* overrides,
                              swl_buffer* summary_out) {
  SWL_REQUIRE(config_path);
  return guarded([&] {
    auto in = open_read(config_path);
    auto config = read_experiment_config(in);
    if (overrides) {
      if (overrides->output_dir) config.output_dir = overrides->output_dir;
      if (overrides->has_seed) config.sim.seed = overrides->seed;
      if (overrides->no_sync) config.sim.sync_mode = SyncMode::kNoSync;
    }
    config.validate();
    if (config.output_dir.empty()) return fail(SWL_E_INVALID, "no output directory given");
    const auto outcome = run_experiment(config);
    if (summary_out) {
      std::size_t ok = 0;
      for (const auto& r : outcome.results) ok += r.success;
      std::ostringstream s;
      s << "files=" << outcome.prepared.manifests.size() << '\n'
        << "deletions=" << outcome.prepared.deletions.size() << '\n'
        << "snapshot_digest=" << outcome.prepared.snapshot.digest.hex() << '\n'
        << "retrievals=" << outcome.results.size() << '\n'
        << "successful=" << ok << '\n';
      fill_buffer(summary_out, s.str());
    }
    return SWL_OK;
  });
}

}  // extern "C"

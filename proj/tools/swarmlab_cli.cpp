// Command-line front end. Talks to the library only through the C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "swarmlab/swarmlab.h"

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kInfeasible = 2, kUnavailable = 3, kIoError = 4 };

int exit_code(swl_status s) {
  switch (s) {
    case SWL_OK: return kOk;
    case SWL_E_INVALID:
    case SWL_E_PRECONDITION: return kUsage;
    case SWL_E_INFEASIBLE: return kInfeasible;
    case SWL_E_UNAVAILABLE: return kUnavailable;
    default: return kIoError;
  }
}

struct Failure {
  swl_status status;
  std::string message;
};

void check(swl_status s, const std::string& context) {
  if (s != SWL_OK) throw Failure{s, context + ": " + swl_last_error()};
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using NetworkPtr = std::unique_ptr<swl_network, Deleter<swl_network, swl_network_free>>;
using ManifestPtr = std::unique_ptr<swl_manifest, Deleter<swl_manifest, swl_manifest_free>>;
using PlacementPtr = std::unique_ptr<swl_placement, Deleter<swl_placement, swl_placement_free>>;
using ListPtr = std::unique_ptr<swl_deletion_list, Deleter<swl_deletion_list, swl_deletion_list_free>>;

struct Buffer {
  swl_buffer b{nullptr, 0};
  ~Buffer() { swl_buffer_free(&b); }
  std::string_view view() const { return {reinterpret_cast<const char*>(b.data), b.size}; }
};

std::vector<uint8_t> read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{SWL_E_IO, "cannot read " + path};
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_all(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Failure{SWL_E_IO, "cannot write " + path};
}

struct NetworkArgs {
  std::string state;
  size_t peers = 0;
  uint64_t seed = 0;
  size_t view_size = 16;
  size_t ns = 4;
  size_t backends = 29;
  bool no_sync = false;
};

void add_network_args(CLI::App* cmd, NetworkArgs& a, bool allow_spawn) {
  cmd->add_option("--state", a.state, "network state directory (snapshot layout)");
  if (allow_spawn) {
    cmd->add_option("--peers", a.peers, "spawn a new network with this many peers");
    cmd->add_option("--seed", a.seed, "network seed");
    cmd->add_option("--view-size", a.view_size, "routing view size");
    cmd->add_option("--ns", a.ns, "neighborhood size");
    cmd->add_option("--backends", a.backends, "number of storage backends");
  }
  cmd->add_flag("--no-sync", a.no_sync, "run peers with push/pull syncing disabled");
}

NetworkPtr open_network(const NetworkArgs& a) {
  swl_network* raw = nullptr;
  if (!a.state.empty()) {
    check(swl_network_load(a.state.c_str(), &raw), "loading state " + a.state);
  } else {
    if (a.peers == 0) throw Failure{SWL_E_INVALID, "give --state or --peers"};
    swl_sim_config c;
    swl_sim_config_init(&c);
    c.num_peers = a.peers;
    c.seed = a.seed;
    c.view_size = a.view_size;
    c.ns = a.ns;
    c.num_backends = a.backends;
    check(swl_network_new(&c, &raw), "spawning network");
  }
  NetworkPtr net(raw);
  if (a.no_sync) check(swl_network_set_sync_mode(net.get(), SWL_SYNC_NONE), "setting no-sync");
  Buffer warnings;
  check(swl_network_warnings(net.get(), &warnings.b), "reading warnings");
  if (warnings.b.size) std::cerr << "warning: " << warnings.view();
  return net;
}

ManifestPtr load_manifest(const std::string& path) {
  swl_manifest* m = nullptr;
  check(swl_manifest_load(path.c_str(), &m), "loading manifest " + path);
  return ManifestPtr(m);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic P2P storage simulator for redundancy experiments"};
  app.require_subcommand(1);

  NetworkArgs net_args;
  std::string file, out, manifest_path, placement_out, file_id = "file", snapshot_dir, config_path;
  std::string placement_path, list_path;
  std::vector<std::string> lists, placements;
  size_t branching = 128, chunk_size = 4096, k = 0, n = 0, from = 0, target_r = 1;
  double fail_fraction = 0;
  uint64_t fail_seed = 0;
  std::optional<uint64_t> experiment_seed;
  bool dump_views = false;

  auto* upload = app.add_subcommand("upload", "chunk a file and push it into the network");
  add_network_args(upload, net_args, true);
  upload->add_option("--file", file, "file to upload")->required();
  upload->add_option("--branching", branching, "children per internal chunk");
  upload->add_option("--chunk-size", chunk_size, "chunk size in bytes");
  upload->add_option("--k", k, "data chunks per coding group (0: no coding)");
  upload->add_option("--n", n, "total chunks per coding group");
  upload->add_option("--from", from, "uploading peer index");
  upload->add_option("--manifest", manifest_path, "where to write the manifest")->required();
  upload->add_option("--out", out, "where to write the resulting network state")->required();

  auto* retrieve = app.add_subcommand("retrieve", "fetch a file through the overlay");
  add_network_args(retrieve, net_args, false);
  retrieve->add_option("--manifest", manifest_path)->required();
  retrieve->add_option("--from", from, "entry peer index");
  retrieve->add_option("--fail-fraction", fail_fraction, "fraction of peers to fail first");
  retrieve->add_option("--seed", fail_seed, "failure selection seed");
  retrieve->add_option("--out", out, "where to write the retrieved bytes");

  auto* list = app.add_subcommand("listchunks", "list every chunk address of a file, root first");
  add_network_args(list, net_args, false);
  list->add_option("--manifest", manifest_path)->required();
  list->add_option("--file-id", file_id, "file id used in the placement output");
  list->add_option("--placement-out", placement_out, "write the file's placement map (needs --state)");
  list->add_option("--out", out, "write the address list here instead of stdout");

  auto* bake = app.add_subcommand("bakedeletion", "plan deletions that make replication uniform");
  bake->add_option("--placement", placement_path)->required();
  bake->add_option("--target-r", target_r, "replicas to keep per chunk");
  bake->add_option("--out", out)->required();

  auto* combine = app.add_subcommand("combinestorage", "merge deletion lists");
  combine->add_option("--list", lists, "deletion list (repeatable)");
  combine->add_option("--placement", placements, "placement maps to re-check the union against (repeatable)");
  combine->add_option("--out", out)->required();

  auto* del = app.add_subcommand("deletechunks", "apply a deletion list to a network state");
  add_network_args(del, net_args, false);
  del->add_option("--list", list_path)->required();
  del->add_option("--out", out, "output state directory (defaults to --state)");

  auto* snap = app.add_subcommand("snapshot", "capture a network state as a snapshot");
  add_network_args(snap, net_args, false);
  snap->add_option("--out", out)->required();

  auto* restore = app.add_subcommand("restore", "restore a snapshot into a network state");
  add_network_args(restore, net_args, true);
  restore->add_option("--snapshot", snapshot_dir)->required();
  restore->add_option("--out", out)->required();

  auto* experiment = app.add_subcommand("experiment", "run a full normalization + availability experiment");
  experiment->add_option("--config", config_path)->required();
  experiment->add_option("--out", out, "output directory (overrides output_dir)");
  experiment->add_option("--seed", experiment_seed, "override the config seed");
  bool experiment_no_sync = false;
  experiment->add_flag("--no-sync", experiment_no_sync, "upload with syncing disabled");

  auto* stats = app.add_subcommand("stats", "print the replication census of a network state");
  add_network_args(stats, net_args, true);
  stats->add_option("--out", out, "write replicas_per_chunk.csv and chunks_per_peer.csv here");
  stats->add_flag("--views", dump_views, "also print every routing view");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    if (upload->parsed()) {
      auto net = open_network(net_args);
      const auto data = read_all(file);
      swl_upload_options opts{chunk_size, branching, k, n, from};
      if (k && !n) opts.n = k;
      swl_manifest* m = nullptr;
      check(swl_upload(net.get(), data.data(), data.size(), &opts, &m), "upload");
      ManifestPtr manifest(m);
      check(swl_manifest_save(manifest.get(), manifest_path.c_str()), "saving manifest");
      check(swl_network_save(net.get(), out.c_str()), "saving state");
    } else if (retrieve->parsed()) {
      auto net = open_network(net_args);
      auto manifest = load_manifest(manifest_path);
      if (fail_fraction > 0) {
        size_t failed = 0;
        check(swl_fail_fraction(net.get(), fail_fraction, fail_seed, &failed), "failing peers");
        std::cerr << "failed " << failed << " peers\n";
      }
      Buffer data;
      swl_retrieval_stats st{};
      const auto s = swl_retrieve(net.get(), manifest.get(), from, &data.b, &st);
      std::cout << "success=" << st.success << " chunks=" << st.chunks_fetched << " hops=" << st.hops
                << " bytes=" << st.bytes << " repaired_groups=" << st.repaired_groups << '\n';
      check(s, "retrieve");
      if (!out.empty()) write_all(out, data.view());
    } else if (list->parsed()) {
      NetworkPtr net;
      if (!net_args.state.empty()) net = open_network(net_args);
      auto manifest = load_manifest(manifest_path);
      Buffer text;
      check(swl_listchunks(manifest.get(), net.get(), &text.b), "listchunks");
      if (out.empty()) {
        std::cout << text.view();
      } else {
        write_all(out, text.view());
      }
      if (!placement_out.empty()) {
        if (!net) throw Failure{SWL_E_INVALID, "--placement-out needs --state"};
        swl_placement* p = nullptr;
        check(swl_placement_from_network(net.get(), manifest.get(), file_id.c_str(), &p), "placement");
        PlacementPtr placement(p);
        check(swl_placement_save(placement.get(), placement_out.c_str()), "saving placement");
      }
    } else if (bake->parsed()) {
      swl_placement* p = nullptr;
      check(swl_placement_load(placement_path.c_str(), &p), "loading placement");
      PlacementPtr placement(p);
      swl_deletion_list* l = nullptr;
      check(swl_bakedeletion(placement.get(), target_r, &l), "bakedeletion");
      ListPtr result(l);
      check(swl_deletion_list_save(result.get(), out.c_str()), "saving deletion list");
      std::cerr << swl_deletion_list_size(result.get()) << " deletions\n";
    } else if (combine->parsed()) {
      std::vector<ListPtr> owned;
      std::vector<const swl_deletion_list*> raw;
      for (const auto& path : lists) {
        swl_deletion_list* l = nullptr;
        check(swl_deletion_list_load(path.c_str(), &l), "loading " + path);
        owned.emplace_back(l);
        raw.push_back(l);
      }
      PlacementPtr merged;
      if (!placements.empty()) {
        swl_placement* m = nullptr;
        check(swl_placement_new(&m), "placement");
        merged.reset(m);
        for (const auto& path : placements) {
          swl_placement* p = nullptr;
          check(swl_placement_load(path.c_str(), &p), "loading " + path);
          PlacementPtr one(p);
          check(swl_placement_merge(merged.get(), one.get()), "merging placements");
        }
      }
      swl_deletion_list* l = nullptr;
      check(swl_combinestorage(raw.data(), raw.size(), merged.get(), &l), "combinestorage");
      ListPtr result(l);
      check(swl_deletion_list_save(result.get(), out.c_str()), "saving deletion list");
    } else if (del->parsed()) {
      if (net_args.state.empty()) throw Failure{SWL_E_INVALID, "deletechunks needs --state"};
      auto net = open_network(net_args);
      swl_deletion_list* l = nullptr;
      check(swl_deletion_list_load(list_path.c_str(), &l), "loading deletion list");
      ListPtr dl(l);
      size_t applied = 0, missing = 0;
      check(swl_deletechunks(net.get(), dl.get(), &applied, &missing), "deletechunks");
      std::cout << "applied=" << applied << " missing=" << missing << '\n';
      check(swl_network_save(net.get(), (out.empty() ? net_args.state : out).c_str()), "saving state");
    } else if (snap->parsed()) {
      if (net_args.state.empty()) throw Failure{SWL_E_INVALID, "snapshot needs --state"};
      auto net = open_network(net_args);
      check(swl_snapshot_save(net.get(), out.c_str()), "snapshot");
      char digest[65];
      check(swl_census_digest(net.get(), digest), "digest");
      std::cout << "census_digest=" << digest << '\n';
    } else if (restore->parsed()) {
      NetworkPtr net;
      if (!net_args.state.empty() || net_args.peers) {
        net = open_network(net_args);
      } else {
        swl_network* raw = nullptr;
        check(swl_network_load(snapshot_dir.c_str(), &raw), "loading snapshot");
        net.reset(raw);
      }
      check(swl_restore(net.get(), snapshot_dir.c_str()), "restore");
      check(swl_network_save(net.get(), out.c_str()), "saving state");
      char digest[65];
      check(swl_census_digest(net.get(), digest), "digest");
      std::cout << "census_digest=" << digest << '\n';
    } else if (experiment->parsed()) {
      swl_experiment_overrides o{};
      if (!out.empty()) o.output_dir = out.c_str();
      if (experiment_seed) {
        o.has_seed = 1;
        o.seed = *experiment_seed;
      }
      o.no_sync = experiment_no_sync ? 1 : 0;
      Buffer summary;
      check(swl_experiment_run(config_path.c_str(), &o, &summary.b), "experiment");
      std::cout << summary.view();
    } else if (stats->parsed()) {
      auto net = open_network(net_args);
      Buffer summary;
      check(swl_stats(net.get(), out.empty() ? nullptr : out.c_str(), &summary.b), "stats");
      std::cout << summary.view();
      if (dump_views) {
        Buffer views;
        check(swl_network_dump_views(net.get(), &views.b), "views");
        std::cout << views.view();
      }
    }
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << '\n';
    return exit_code(f.status);
  }
  return kOk;
}

#include "swarmlab/harness.hpp"

#include <fstream>
#include <sstream>

#include "swarmlab/rng.hpp"
#include "text_util.hpp"

namespace swarmlab {

void ExperimentConfig::validate() const {
  sim.validate();
  chunking.validate();
  if (coding) coding->validate();
  if (file_sizes.empty()) throw Error(Errc::kInvalidArgument, "experiment needs at least one file size");
  for (auto s : file_sizes) {
    if (s == 0) throw Error(Errc::kInvalidArgument, "file sizes must be positive");
  }
  if (target_r < 1) throw Error(Errc::kInvalidArgument, "target_r must be at least 1");
  if (iterations < 1) throw Error(Errc::kInvalidArgument, "iterations must be at least 1");
  for (auto f : fractions) {
    if (!(f >= 0.0 && f <= 1.0)) throw Error(Errc::kInvalidArgument, "failure fractions must lie in [0, 1]");
  }
  if (!min_degree) throw Error(Errc::kInvalidArgument, "min_degree is required");
  if (uploader >= sim.num_peers) throw Error(Errc::kInvalidArgument, "uploader index out of range");
}

ExperimentConfig read_experiment_config(std::istream& in) {
  ExperimentConfig c;
  std::optional<std::size_t> k;
  std::optional<std::size_t> n;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(Errc::kInvalidArgument, "config line is not key=value: " + line);
    const std::string key = line.substr(0, eq);
    const auto value = *detail::key_value(line, key);
    auto uint = [&] { return detail::parse_uint(value, key); };
    if (key == "num_peers") c.sim.num_peers = uint();
    else if (key == "seed") c.sim.seed = uint();
    else if (key == "view_size") c.sim.view_size = uint();
    else if (key == "ns") c.sim.ns = uint();
    else if (key == "sync_mode") c.sim.sync_mode = parse_sync_mode(value);
    else if (key == "num_backends") c.sim.num_backends = uint();
    else if (key == "branching") c.chunking.branching = uint();
    else if (key == "chunk_size") c.chunking.chunk_size = uint();
    else if (key == "k") k = uint();
    else if (key == "n") n = uint();
    else if (key == "target_r") c.target_r = uint();
    else if (key == "iterations") c.iterations = uint();
    else if (key == "min_degree") c.min_degree = uint();
    else if (key == "uploader") c.uploader = uint();
    else if (key == "output_dir") c.output_dir = std::string(value);
    else if (key == "file_sizes") {
      for (const auto& tok : detail::split(value, ',')) c.file_sizes.push_back(detail::parse_uint(tok, key));
    } else if (key == "fractions") {
      for (const auto& tok : detail::split(value, ',')) c.fractions.push_back(detail::parse_double(tok, key));
    } else {
      throw Error(Errc::kInvalidArgument, "unknown config key '" + key + "'");
    }
  }
  if (k.has_value() != n.has_value()) throw Error(Errc::kInvalidArgument, "config must give both k and n, or neither");
  if (k) c.coding = CodingParams{*k, *n};
  return c;
}

Bytes make_file_data(std::uint64_t seed, std::size_t index, std::uint64_t size) {
  Rng rng(mix_seed(seed, 0x66696c65ULL + index));
  Bytes out(size);
  for (std::size_t i = 0; i < size; i += 8) {
    std::uint64_t v = rng.next();
    for (std::size_t b = 0; b < 8 && i + b < size; ++b) out[i + b] = static_cast<std::uint8_t>(v >> (8 * b));
  }
  return out;
}

bool CensusReport::conserved() const {
  std::size_t from_hist = 0;
  std::size_t chunks = 0;
  for (const auto& [replicas, count] : replicas_per_chunk) {
    from_hist += replicas * count;
    chunks += count;
  }
  std::size_t from_peers = 0;
  for (const auto& [peer, count] : chunks_per_peer) from_peers += count;
  return from_hist == from_peers && from_peers == total_replicas && chunks == unique_chunks;
}

CensusReport take_census(const Network& network) {
  CensusReport r;
  std::map<ContentAddress, std::size_t> replicas;
  for (std::size_t p = 0; p < network.size(); ++p) {
    const auto& store = network.store(p);
    r.chunks_per_peer.emplace_back(network.peer_ids()[p], store.size());
    r.total_replicas += store.size();
    for (const auto& [addr, payload] : store) ++replicas[addr];
  }
  for (const auto& [addr, count] : replicas) ++r.replicas_per_chunk[count];
  r.unique_chunks = replicas.size();
  return r;
}

namespace {

template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), std::string("stage ") + name + ": " + e.what());
  }
}

}  // namespace

PreparedExperiment prepare(Network& network, const ExperimentConfig& config) {
  config.validate();
  PreparedExperiment out;
  std::vector<std::pair<std::string, std::vector<ContentAddress>>> files;

  stage("upload", [&] {
    for (std::size_t i = 0; i < config.file_sizes.size(); ++i) {
      const Bytes data = make_file_data(config.sim.seed, i, config.file_sizes[i]);
      out.file_digests.push_back(sha256(data));
      out.file_sizes.push_back(data.size());
      out.manifests.push_back(network.upload(data, config.chunking, config.coding, config.uploader));
    }
  });
  out.census_before = take_census(network);

  const FetchFn fetch = [&](const ContentAddress& a) { return network.fetch_live(a); };
  stage("listchunks", [&] {
    for (std::size_t i = 0; i < out.manifests.size(); ++i) {
      files.emplace_back("file" + std::to_string(i), listchunks(out.manifests[i], fetch));
    }
  });
  out.placement_before = placement_from_network(network, files);

  std::vector<DeletionList> lists;
  stage("bakedeletion", [&] {
    for (const auto& file : files) {
      lists.push_back(bakedeletion(placement_from_network(network, {file}), config.target_r));
    }
  });
  out.deletions = stage("combinestorage", [&] { return combinestorage(lists, &out.placement_before); });

  stage("deletechunks", [&] {
    network.set_sync_mode(SyncMode::kNoSync);
    deletechunks(network, out.deletions);
  });

  stage("verify", [&] {
    const auto after = placement_from_network(network, files);
    const auto report = check_rules(out.placement_before, after, config.target_r);
    if (!report.ok()) throw Error(Errc::kInfeasible, report.violations.front());
    if (!network.verify_integrity()) throw Error(Errc::kCorrupt, "a stored payload no longer matches its address");
  });
  out.census_after = take_census(network);

  for (std::size_t i = 0; i < files.size(); ++i) {
    std::uint64_t stored = 0;
    for (const auto& addr : files[i].second) {
      for (std::size_t p = 0; p < network.size(); ++p) {
        if (auto it = network.store(p).find(addr); it != network.store(p).end()) stored += it->second->size();
      }
    }
    out.overheads.push_back(static_cast<double>(stored) / static_cast<double>(out.file_sizes[i]));
  }
  out.snapshot = network.snapshot();
  return out;
}

std::uint64_t iteration_seed(const ExperimentConfig& config, std::size_t iteration) {
  return mix_seed(config.sim.seed, 0x69746572ULL + iteration);
}

std::vector<AvailabilityResult> run_iteration(Network& network, const PreparedExperiment& prepared,
                                              const ExperimentConfig& config, double fraction,
                                              std::size_t iteration) {
  // (A) storage back to the snapshot
  network.restore(prepared.snapshot);
  // (B) syncing must stay off
  if (network.sync_mode() != SyncMode::kNoSync) throw Error(Errc::kPrecondition, "peers are not in no-sync mode");
  // (C) connectivity
  const auto report = network.wait_for_connectivity(*config.min_degree);
  if (!report.ok) throw Error(Errc::kPrecondition, report.describe());

  const auto order = failure_order(network.size(), iteration_seed(config, iteration));
  const std::size_t count = failure_count(network.size(), fraction);
  network.fail_peers(std::span<const std::size_t>(order.data(), count));
  const std::size_t entry = order.back();

  std::vector<AvailabilityResult> results;
  for (std::size_t i = 0; i < prepared.manifests.size(); ++i) {
    const auto r = network.retrieve(prepared.manifests[i], entry);
    AvailabilityResult a;
    a.file = i;
    a.fraction = fraction;
    a.iteration = iteration;
    a.success = r.success && sha256(r.data) == prepared.file_digests[i];
    if (r.success && !a.success) a.failure = "retrieved bytes differ from the original";
    else a.failure = r.failure;
    a.repaired_groups = r.stats.repaired_groups;
    a.hops = r.stats.hops;
    a.bytes = r.stats.bytes;
    a.overhead = prepared.overheads[i];
    results.push_back(std::move(a));
  }
  // (D) shut down: nothing outlives the iteration except what restore resets.
  return results;
}

std::vector<AvailabilityResult> run_iterations(Network& network, const PreparedExperiment& prepared,
                                               const ExperimentConfig& config) {
  std::vector<AvailabilityResult> all;
  for (double fraction : config.fractions) {
    for (std::size_t it = 0; it < config.iterations; ++it) {
      auto r = run_iteration(network, prepared, config, fraction, it);
      all.insert(all.end(), r.begin(), r.end());
    }
  }
  return all;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  return out;
}

}  // namespace

void write_census_csv(const CensusReport& census, const std::filesystem::path& replicas_csv,
                      const std::filesystem::path& peers_csv) {
  auto r = open_out(replicas_csv);
  r << "replicas,chunk_count\n";
  for (const auto& [replicas, count] : census.replicas_per_chunk) r << replicas << ',' << count << '\n';
  if (!r) throw Error(Errc::kIo, "cannot write " + replicas_csv.string());
  auto p = open_out(peers_csv);
  p << "peer_id,chunk_count\n";
  for (const auto& [peer, count] : census.chunks_per_peer) p << peer.hex() << ',' << count << '\n';
  if (!p) throw Error(Errc::kIo, "cannot write " + peers_csv.string());
}

void emit_reports(const std::vector<AvailabilityResult>& results, const CensusReport& census,
                  const CensusReport* before, const std::filesystem::path& outdir) {
  std::error_code ec;
  std::filesystem::create_directories(outdir, ec);
  if (ec) throw Error(Errc::kIo, "cannot create " + outdir.string() + ": " + ec.message());
  write_census_csv(census, outdir / "replicas_per_chunk.csv", outdir / "chunks_per_peer.csv");
  if (before) write_census_csv(*before, outdir / "replicas_per_chunk_upload.csv", outdir / "chunks_per_peer_upload.csv");
  auto a = open_out(outdir / "availability.csv");
  a << "file,fraction,iteration,success,hops,bytes,overhead\n";
  for (const auto& r : results) {
    a << r.file << ',' << detail::format_double(r.fraction) << ',' << r.iteration << ',' << (r.success ? 1 : 0) << ','
      << r.hops << ',' << r.bytes << ',' << detail::format_fixed(r.overhead, 6) << '\n';
  }
  if (!a) throw Error(Errc::kIo, "cannot write availability.csv");
}

ExperimentOutcome run_experiment(const ExperimentConfig& config) {
  config.validate();
  Network network(config.sim);
  ExperimentOutcome out;
  out.prepared = prepare(network, config);
  out.results = run_iterations(network, out.prepared, config);
  if (!config.output_dir.empty()) {
    emit_reports(out.results, out.prepared.census_after, &out.prepared.census_before, config.output_dir);
  }
  return out;
}

}  // namespace swarmlab

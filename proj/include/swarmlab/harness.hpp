#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <vector>

#include "swarmlab/netsim.hpp"
#include "swarmlab/tools.hpp"

namespace swarmlab {

struct ExperimentConfig {
  SimConfig sim;
  std::vector<std::uint64_t> file_sizes;
  ChunkParams chunking;
  std::optional<CodingParams> coding;
  std::size_t target_r = 1;
  std::vector<double> fractions;
  std::size_t iterations = 1;
  // No default: how connected "well connected" is must be stated per run.
  std::optional<std::size_t> min_degree;
  std::filesystem::path output_dir;
  std::size_t uploader = 0;

  void validate() const;
};

// key=value lines; keys: num_peers seed view_size ns sync_mode num_backends
// file_sizes branching chunk_size k n target_r fractions iterations
// min_degree output_dir uploader. Lists are comma separated.
ExperimentConfig read_experiment_config(std::istream& in);

// Deterministic file contents for file `index` of an experiment.
Bytes make_file_data(std::uint64_t seed, std::size_t index, std::uint64_t size);

struct CensusReport {
  std::map<std::size_t, std::size_t> replicas_per_chunk;  // replicas -> chunks
  std::vector<std::pair<PeerId, std::size_t>> chunks_per_peer;
  std::size_t unique_chunks = 0;
  std::size_t total_replicas = 0;

  bool conserved() const;
};

CensusReport take_census(const Network& network);

struct PreparedExperiment {
  Snapshot snapshot;
  std::vector<EncodedManifest> manifests;
  std::vector<Hash256> file_digests;
  std::vector<std::uint64_t> file_sizes;
  std::vector<double> overheads;  // stored bytes / file bytes, per file
  PlacementMap placement_before;  // after upload, before deletions
  DeletionList deletions;
  CensusReport census_before;
  CensusReport census_after;
};

// Upload every file, then listchunks -> bakedeletion per file ->
// combinestorage -> deletechunks, verify rules A-D from a fresh census, and
// snapshot. Stage failures are rethrown prefixed with the stage name.
PreparedExperiment prepare(Network& network, const ExperimentConfig& config);

struct AvailabilityResult {
  std::size_t file = 0;
  double fraction = 0;
  std::size_t iteration = 0;
  bool success = false;
  std::size_t repaired_groups = 0;
  std::uint64_t hops = 0;
  std::uint64_t bytes = 0;
  double overhead = 0;
  std::string failure;
};

// Failure seed of an iteration. It does not depend on the fraction, so within
// one iteration larger fractions fail supersets of smaller ones.
std::uint64_t iteration_seed(const ExperimentConfig& config, std::size_t iteration);

// One (fraction, iteration) cell: restore, confirm no-sync, wait for
// connectivity, fail peers, retrieve every file, shut down.
std::vector<AvailabilityResult> run_iteration(Network& network, const PreparedExperiment& prepared,
                                              const ExperimentConfig& config, double fraction,
                                              std::size_t iteration);

std::vector<AvailabilityResult> run_iterations(Network& network, const PreparedExperiment& prepared,
                                               const ExperimentConfig& config);

// replicas_per_chunk.csv, chunks_per_peer.csv and availability.csv from the
// normalized state; with `before`, the pre-normalization census also goes to
// replicas_per_chunk_upload.csv and chunks_per_peer_upload.csv.
void emit_reports(const std::vector<AvailabilityResult>& results, const CensusReport& census,
                  const CensusReport* before, const std::filesystem::path& outdir);

void write_census_csv(const CensusReport& census, const std::filesystem::path& replicas_csv,
                      const std::filesystem::path& peers_csv);

struct ExperimentOutcome {
  PreparedExperiment prepared;
  std::vector<AvailabilityResult> results;
};

// prepare + run_iterations + emit_reports into config.output_dir.
ExperimentOutcome run_experiment(const ExperimentConfig& config);

}  // namespace swarmlab

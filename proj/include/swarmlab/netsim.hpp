#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "swarmlab/codec.hpp"
#include "swarmlab/overlay.hpp"

namespace swarmlab {

enum class SyncMode { kFull, kNoSync };

std::string to_string(SyncMode mode);
SyncMode parse_sync_mode(std::string_view s);

struct SimConfig {
  std::size_t num_peers = 0;
  std::uint64_t seed = 0;
  std::size_t view_size = 16;
  std::size_t ns = 4;
  SyncMode sync_mode = SyncMode::kFull;
  std::size_t num_backends = 29;

  void validate() const;
  bool operator==(const SimConfig&) const = default;
};

// Peer y keeps its data on backend y mod num_backends.
inline std::size_t backend_of(std::size_t peer_index, std::size_t num_backends) { return peer_index % num_backends; }

using Payload = std::shared_ptr<const Bytes>;
using ChunkStore = std::map<ContentAddress, Payload>;

struct Snapshot {
  SimConfig config;
  std::vector<ChunkStore> stores;  // indexed by peer index
  Hash256 digest;                  // census digest at capture time
};

// Digest over every peer's id and the sorted addresses it stores.
Hash256 census_digest(std::span<const PeerId> peer_ids, std::span<const ChunkStore> stores);

struct RetrievalStats {
  std::size_t chunks_fetched = 0;
  std::uint64_t hops = 0;
  std::uint64_t bytes = 0;
  std::size_t repaired_groups = 0;
  std::size_t repaired_chunks = 0;
};

struct RetrievalResult {
  bool success = false;
  Bytes data;
  std::string failure;
  RetrievalStats stats;
};

struct ConnectivityReport {
  std::size_t min_degree = 0;
  std::vector<std::size_t> degrees;  // live view members per peer
  bool ok = false;

  std::string describe() const;
};

// Seeded permutation of peer indices; fail_peers(fraction) fails a prefix of
// it, so larger fractions with the same seed fail supersets.
std::vector<std::size_t> failure_order(std::size_t num_peers, std::uint64_t seed);
std::size_t failure_count(std::size_t num_peers, double fraction);

// The simulated cluster. Operations are applied one at a time; the object
// may be moved across threads but not shared for mutation.
class Network {
 public:
  explicit Network(SimConfig config);
  // Rebuilds a network in the exact state captured, sync mode included.
  static Network from_snapshot(const Snapshot& snapshot);

  const SimConfig& config() const { return config_; }
  std::size_t size() const { return ids_.size(); }
  const std::vector<PeerId>& peer_ids() const { return ids_; }
  std::optional<std::size_t> index_of(const PeerId& id) const;
  const std::vector<RoutingView>& views() const { return views_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  SyncMode sync_mode() const { return config_.sync_mode; }
  void set_sync_mode(SyncMode mode) { config_.sync_mode = mode; }

  const ChunkStore& store(std::size_t peer) const { return stores_.at(peer); }
  std::span<const ChunkStore> stores() const { return stores_; }
  bool is_failed(std::size_t peer) const { return failed_.at(peer); }
  std::size_t live_count() const;

  // Greedy overlay route from `from` toward target over live peers. Every
  // hop moves to the view member closest to target, strictly closer than
  // the current peer.
  std::vector<std::size_t> route(std::size_t from, const Hash256& target) const;

  // Chunks the file (and codes it when `coding` is given) and pushes every
  // chunk from `uploader` into the overlay.
  EncodedManifest upload(ByteView data, const ChunkParams& params, const std::optional<CodingParams>& coding,
                         std::size_t uploader = 0);
  // Pushes already-built chunks.
  void upload_chunks(const ChunkMap& chunks, std::size_t uploader);

  RetrievalResult retrieve(const EncodedManifest& manifest, std::size_t from) const;

  // Payload from any live holder.
  std::optional<Bytes> fetch_live(const ContentAddress& address) const;
  bool has_live_holder(const ContentAddress& address) const;

  std::vector<PeerId> fail_peers(double fraction, std::uint64_t seed);
  std::vector<PeerId> fail_peers(std::span<const std::size_t> peers);

  bool insert_chunk(std::size_t peer, Payload payload);
  bool remove_chunk(std::size_t peer, const ContentAddress& address);

  Hash256 census_digest() const;
  Snapshot snapshot() const;
  // Restores stores bit-for-bit, clears failures, switches to no-sync and
  // rebuilds the routing views.
  void restore(const Snapshot& snapshot);
  ConnectivityReport wait_for_connectivity(std::size_t min_degree) const;

  // Every stored payload re-hashes to its key.
  bool verify_integrity() const;

 private:
  void rebuild_views();
  bool in_own_neighborhood(std::size_t peer, const ContentAddress& address) const;

  SimConfig config_;
  std::vector<PeerId> ids_;
  std::vector<RoutingView> views_;
  std::vector<std::vector<std::size_t>> view_index_;
  std::vector<std::string> warnings_;
  std::vector<ChunkStore> stores_;
  std::vector<bool> failed_;
  std::map<PeerId, std::size_t> index_;
};

// snapshot/manifest.txt holds the config and census digest; chunk payloads
// live at backend-<b>/<peer-hex>/<address-hex>.
void save_snapshot(const Snapshot& snapshot, const std::filesystem::path& dir);
Snapshot load_snapshot(const std::filesystem::path& dir);

}  // namespace swarmlab

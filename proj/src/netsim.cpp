#include "swarmlab/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "swarmlab/rng.hpp"

namespace swarmlab {

std::string to_string(SyncMode mode) { return mode == SyncMode::kFull ? "full" : "no_sync"; }

SyncMode parse_sync_mode(std::string_view s) {
  if (s == "full") return SyncMode::kFull;
  if (s == "no_sync" || s == "no-sync") return SyncMode::kNoSync;
  throw Error(Errc::kInvalidArgument, "unknown sync mode '" + std::string(s) + "'");
}

void SimConfig::validate() const {
  if (num_peers < 2) throw Error(Errc::kInvalidArgument, "num_peers must be at least 2");
  if (view_size < 1) throw Error(Errc::kInvalidArgument, "view_size must be at least 1");
  if (ns < 1) throw Error(Errc::kInvalidArgument, "ns must be at least 1");
  if (num_backends < 1) throw Error(Errc::kInvalidArgument, "num_backends must be at least 1");
}

Hash256 census_digest(std::span<const PeerId> peer_ids, std::span<const ChunkStore> stores) {
  std::string text;
  for (std::size_t i = 0; i < stores.size(); ++i) {
    text += peer_ids[i].hex();
    text += '\n';
    for (const auto& [addr, payload] : stores[i]) {
      text += ' ';
      text += addr.hex();
      text += '\n';
    }
  }
  return sha256(ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string ConnectivityReport::describe() const {
  std::ostringstream out;
  out << "connectivity " << (ok ? "reached" : "NOT reached") << " (min_degree=" << min_degree << "):";
  for (auto d : degrees) out << ' ' << d;
  return out.str();
}

std::vector<std::size_t> failure_order(std::size_t num_peers, std::uint64_t seed) {
  std::vector<std::size_t> order(num_peers);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(seed, 0x6661696cULL));
  rng.shuffle(order);
  return order;
}

std::size_t failure_count(std::size_t num_peers, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw Error(Errc::kInvalidArgument, "failure fraction must lie in [0, 1]");
  return std::min(num_peers, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(num_peers))));
}

Network::Network(SimConfig config) : config_(config) {
  config_.validate();
  ids_.reserve(config_.num_peers);
  for (std::size_t i = 0; i < config_.num_peers; ++i) {
    ids_.push_back(derive_peer_id(config_.seed, i));
    if (!index_.emplace(ids_.back(), i).second) throw Error(Errc::kInvalidArgument, "peer id collision");
  }
  stores_.assign(config_.num_peers, {});
  failed_.assign(config_.num_peers, false);
  rebuild_views();
}

Network Network::from_snapshot(const Snapshot& snapshot) {
  Network net(snapshot.config);
  if (snapshot.stores.size() != net.size()) throw Error(Errc::kCorrupt, "snapshot store count differs from peer count");
  net.stores_ = snapshot.stores;
  return net;
}

void Network::rebuild_views() {
  auto built = build_views(ids_, config_.view_size, config_.seed);
  views_ = std::move(built.views);
  warnings_ = std::move(built.warnings);
  view_index_.assign(ids_.size(), {});
  for (std::size_t i = 0; i < views_.size(); ++i) {
    for (const auto& k : views_[i].known) view_index_[i].push_back(index_.at(k));
  }
}

std::optional<std::size_t> Network::index_of(const PeerId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Network::live_count() const { return static_cast<std::size_t>(std::count(failed_.begin(), failed_.end(), false)); }

std::vector<std::size_t> Network::route(std::size_t from, const Hash256& target) const {
  std::vector<std::size_t> path{from};
  std::size_t current = from;
  Distance best = xor_distance(ids_[current], target);
  for (;;) {
    std::optional<std::size_t> next;
    for (auto q : view_index_[current]) {
      if (failed_[q]) continue;
      const auto d = xor_distance(ids_[q], target);
      if (d < best) {
        best = d;
        next = q;
      }
    }
    if (!next) return path;
    current = *next;
    path.push_back(current);
  }
}

bool Network::in_own_neighborhood(std::size_t peer, const ContentAddress& address) const {
  // Owner is in the ns nearest of (view + owner) iff fewer than ns view
  // members rank ahead of it.
  const auto own = std::make_pair(xor_distance(ids_[peer], address), ids_[peer]);
  std::size_t ahead = 0;
  for (auto q : view_index_[peer]) {
    if (std::make_pair(xor_distance(ids_[q], address), ids_[q]) < own && ++ahead >= config_.ns) return false;
  }
  return true;
}

bool Network::insert_chunk(std::size_t peer, Payload payload) {
  const auto addr = content_address(*payload);
  return stores_.at(peer).emplace(addr, std::move(payload)).second;
}

bool Network::remove_chunk(std::size_t peer, const ContentAddress& address) { return stores_.at(peer).erase(address) > 0; }

void Network::upload_chunks(const ChunkMap& chunks, std::size_t uploader) {
  if (uploader >= size()) throw Error(Errc::kInvalidArgument, "uploader index out of range");
  std::vector<std::pair<ContentAddress, Payload>> items;
  items.reserve(chunks.size());
  for (const auto& [addr, bytes] : chunks) items.emplace_back(addr, std::make_shared<const Bytes>(bytes));

  for (const auto& [addr, payload] : items) {
    const auto path = route(uploader, addr);
    // Forwarding peers keep a copy; this delivery caching cannot be turned off.
    for (std::size_t i = path.size() == 1 ? 0 : 1; i < path.size(); ++i) stores_[path[i]].emplace(addr, payload);
    const std::size_t terminal = path.back();
    for (const auto& member : responsible_peers(addr, views_[terminal], config_.ns).members) {
      const std::size_t idx = index_.at(member);
      if (!failed_[idx]) stores_[idx].emplace(addr, payload);
    }
  }

  if (config_.sync_mode == SyncMode::kFull) {
    // Pull round: each live peer takes the chunks it believes it is
    // responsible for according to its own view.
    for (std::size_t p = 0; p < size(); ++p) {
      if (failed_[p]) continue;
      for (const auto& [addr, payload] : items) {
        if (in_own_neighborhood(p, addr)) stores_[p].emplace(addr, payload);
      }
    }
  }
}

EncodedManifest Network::upload(ByteView data, const ChunkParams& params, const std::optional<CodingParams>& coding,
                                std::size_t uploader) {
  Tree tree = chunk_file(data, params);
  EncodedManifest manifest;
  manifest.base = tree.manifest;
  if (coding) {
    auto encoded = encode_tree(tree.manifest, tree.chunks, *coding);
    manifest = std::move(encoded.manifest);
    tree.chunks.merge(encoded.parity);
  }
  upload_chunks(tree.chunks, uploader);
  return manifest;
}

bool Network::has_live_holder(const ContentAddress& address) const {
  for (std::size_t p = 0; p < size(); ++p) {
    if (!failed_[p] && stores_[p].count(address)) return true;
  }
  return false;
}

std::optional<Bytes> Network::fetch_live(const ContentAddress& address) const {
  for (std::size_t p = 0; p < size(); ++p) {
    if (failed_[p]) continue;
    if (auto it = stores_[p].find(address); it != stores_[p].end()) return *it->second;
  }
  return std::nullopt;
}

RetrievalResult Network::retrieve(const EncodedManifest& manifest, std::size_t from) const {
  if (from >= size()) throw Error(Errc::kInvalidArgument, "entry peer index out of range");
  RetrievalResult result;
  auto& stats = result.stats;
  // Hop cost: position of the first holder on the greedy route; one extra
  // lookup hop when only peers off the route hold the chunk.
  FetchFn fetch = [&](const ContentAddress& addr) -> std::optional<Bytes> {
    const auto path = route(from, addr);
    for (std::size_t i = 0; i < path.size(); ++i) {
      const std::size_t p = path[i];
      if (failed_[p]) continue;
      if (auto it = stores_[p].find(addr); it != stores_[p].end()) {
        stats.hops += i;
        stats.bytes += it->second->size();
        return *it->second;
      }
    }
    stats.hops += path.size() - 1;
    auto found = fetch_live(addr);
    if (found) {
      stats.hops += 1;
      stats.bytes += found->size();
    }
    return found;
  };

  if (live_count() == 0) {
    result.failure = "no live peers";
    return result;
  }
  RepairStats repair;
  try {
    result.data = repair_retrieve(manifest, fetch, &repair);
    result.success = true;
  } catch (const Error& e) {
    if (e.code() != Errc::kUnavailable && e.code() != Errc::kCorrupt) throw;
    result.failure = e.what();
  }
  stats.chunks_fetched = repair.fetched_chunks;
  stats.repaired_groups = repair.repaired_groups;
  stats.repaired_chunks = repair.repaired_chunks;
  return result;
}

std::vector<PeerId> Network::fail_peers(double fraction, std::uint64_t seed) {
  const std::size_t count = failure_count(size(), fraction);
  const auto order = failure_order(size(), seed);
  return fail_peers(std::span<const std::size_t>(order.data(), count));
}

std::vector<PeerId> Network::fail_peers(std::span<const std::size_t> peers) {
  std::vector<PeerId> out;
  out.reserve(peers.size());
  for (auto p : peers) {
    if (p >= size()) throw Error(Errc::kInvalidArgument, "peer index out of range");
    failed_[p] = true;
    out.push_back(ids_[p]);
  }
  return out;
}

Hash256 Network::census_digest() const { return swarmlab::census_digest(ids_, stores_); }

Snapshot Network::snapshot() const { return Snapshot{config_, stores_, census_digest()}; }

void Network::restore(const Snapshot& snapshot) {
  if (snapshot.config.num_peers != config_.num_peers || snapshot.stores.size() != size()) {
    throw Error(Errc::kPrecondition, "snapshot holds " + std::to_string(snapshot.stores.size()) +
                                         " peers, network has " + std::to_string(size()));
  }
  if (snapshot.config.seed != config_.seed) throw Error(Errc::kPrecondition, "snapshot was taken from a network with a different seed");
  stores_ = snapshot.stores;
  if (census_digest() != snapshot.digest) throw Error(Errc::kCorrupt, "snapshot contents do not match its digest");
  failed_.assign(size(), false);
  config_.sync_mode = SyncMode::kNoSync;
  config_.view_size = snapshot.config.view_size;
  config_.ns = snapshot.config.ns;
  config_.num_backends = snapshot.config.num_backends;
  rebuild_views();
}

ConnectivityReport Network::wait_for_connectivity(std::size_t min_degree) const {
  if (min_degree >= size()) {
    throw Error(Errc::kInvalidArgument, "min_degree " + std::to_string(min_degree) + " is unreachable with " +
                                            std::to_string(size()) + " peers");
  }
  ConnectivityReport report;
  report.min_degree = min_degree;
  report.degrees.reserve(size());
  report.ok = true;
  for (std::size_t p = 0; p < size(); ++p) {
    std::size_t live = 0;
    for (auto q : view_index_[p]) live += !failed_[q];
    report.degrees.push_back(live);
    report.ok = report.ok && live >= min_degree;
  }
  return report;
}

bool Network::verify_integrity() const {
  for (const auto& store : stores_) {
    for (const auto& [addr, payload] : store) {
      if (content_address(*payload) != addr) return false;
    }
  }
  return true;
}

}  // namespace swarmlab

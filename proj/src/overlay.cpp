#include "swarmlab/overlay.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "swarmlab/rng.hpp"

namespace swarmlab {

Distance xor_distance(const Hash256& a, const Hash256& b) {
  Distance d;
  for (std::size_t i = 0; i < Hash256::kSize; ++i) d.bytes[i] = a.bytes[i] ^ b.bytes[i];
  return d;
}

PeerId derive_peer_id(std::uint64_t seed, std::uint64_t index) {
  std::uint8_t buf[4 + 16] = {'p', 'e', 'e', 'r'};
  for (int i = 0; i < 8; ++i) {
    buf[4 + i] = static_cast<std::uint8_t>(seed >> (8 * i));
    buf[12 + i] = static_cast<std::uint8_t>(index >> (8 * i));
  }
  return sha256(buf);
}

std::vector<PeerId> nearest_peers(const Hash256& target, std::span<const PeerId> candidates, std::size_t m) {
  if (candidates.empty()) throw Error(Errc::kInvalidArgument, "nearest_peers: empty candidate set");
  if (m == 0) throw Error(Errc::kInvalidArgument, "nearest_peers: m must be at least 1");
  std::vector<std::pair<Distance, PeerId>> ranked;
  ranked.reserve(candidates.size());
  for (const auto& c : candidates) ranked.emplace_back(xor_distance(target, c), c);
  std::sort(ranked.begin(), ranked.end());
  ranked.erase(std::unique(ranked.begin(), ranked.end()), ranked.end());
  const std::size_t take = std::min(m, ranked.size());
  std::vector<PeerId> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(ranked[i].second);
  return out;
}

ViewBuildResult build_views(std::span<const PeerId> peer_ids, std::size_t view_size, std::uint64_t seed) {
  const std::size_t n = peer_ids.size();
  if (n < 2) throw Error(Errc::kInvalidArgument, "build_views needs at least two peers");
  if (view_size == 0) throw Error(Errc::kInvalidArgument, "view_size must be at least 1");
  ViewBuildResult result;
  if (view_size >= n) {
    result.warnings.push_back("view_size " + std::to_string(view_size) + " clamped to " + std::to_string(n - 1));
    view_size = n - 1;
  }

  std::vector<std::size_t> join_order(n);
  std::iota(join_order.begin(), join_order.end(), 0);
  Rng order_rng(mix_seed(seed, 0x6a6f696eULL));
  order_rng.shuffle(join_order);
  std::vector<double> weight(n);
  for (std::size_t pos = 0; pos < n; ++pos) weight[join_order[pos]] = std::pow(static_cast<double>(pos + 1), -1.5);

  const std::size_t sample_size = std::min(n - 1, view_size + view_size / 2);
  result.views.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(mix_seed(seed, 0x1000 + i));
    // Weighted sampling without replacement by sequential draws.
    std::vector<std::size_t> pool;
    pool.reserve(n - 1);
    double mass = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      pool.push_back(j);
      mass += weight[j];
    }
    std::vector<PeerId> sample;
    sample.reserve(sample_size);
    while (sample.size() < sample_size) {
      double x = rng.unit() * mass;
      std::size_t pick = pool.size() - 1;
      for (std::size_t p = 0; p < pool.size(); ++p) {
        x -= weight[pool[p]];
        if (x < 0) {
          pick = p;
          break;
        }
      }
      mass -= weight[pool[pick]];
      sample.push_back(peer_ids[pool[pick]]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    RoutingView view;
    view.owner = peer_ids[i];
    view.known = nearest_peers(view.owner, sample, view_size);
    std::sort(view.known.begin(), view.known.end());
    result.views.push_back(std::move(view));
  }
  return result;
}

Neighborhood responsible_peers(const Hash256& chunk, const RoutingView& view, std::size_t ns) {
  std::vector<PeerId> candidates = view.known;
  candidates.push_back(view.owner);
  return Neighborhood{chunk, nearest_peers(chunk, candidates, ns)};
}

void dump_views(std::ostream& out, std::span<const RoutingView> views) {
  for (const auto& v : views) {
    out << v.owner.hex() << ':';
    for (const auto& k : v.known) out << ' ' << k.hex();
    out << '\n';
  }
}

}  // namespace swarmlab

#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "swarmlab/types.hpp"

namespace swarmlab {

// XOR of two ids read as a big-endian 256-bit magnitude; comparison of the
// byte arrays is numeric comparison.
using Distance = Hash256;

Distance xor_distance(const Hash256& a, const Hash256& b);

// Id of peer `index` in a network built from `seed`.
PeerId derive_peer_id(std::uint64_t seed, std::uint64_t index);

struct RoutingView {
  PeerId owner;
  std::vector<PeerId> known;  // sorted by id, owner excluded
};

struct Neighborhood {
  Hash256 target;
  std::vector<PeerId> members;  // nearest first, ties by id
};

// The min(m, |candidates|) candidates closest to target, ascending by
// distance, ties broken by id bytes.
std::vector<PeerId> nearest_peers(const Hash256& target, std::span<const PeerId> candidates, std::size_t m);

struct ViewBuildResult {
  std::vector<RoutingView> views;
  std::vector<std::string> warnings;
};

// One view per peer. Peers join in a seeded order and are discovered with
// probability proportional to (join position + 1)^-1.5; each peer draws a
// subsample of 1.5 * view_size discoverable peers and keeps the view_size
// closest to itself. Early joiners show up in many views, so the views are
// intentionally asymmetric.
ViewBuildResult build_views(std::span<const PeerId> peer_ids, std::size_t view_size, std::uint64_t seed);

// nearest_peers over the view's known peers plus its owner.
Neighborhood responsible_peers(const Hash256& chunk, const RoutingView& view, std::size_t ns);

// "<owner-hex>: <member-hex> ..." per view.
void dump_views(std::ostream& out, std::span<const RoutingView> views);

}  // namespace swarmlab

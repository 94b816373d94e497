#pragma once

#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "swarmlab/codec.hpp"
#include "swarmlab/netsim.hpp"

namespace swarmlab {

struct DeletionEntry {
  PeerId peer;
  ContentAddress address;

  // Byte order matches lexicographic order of the hex forms.
  auto operator<=>(const DeletionEntry&) const = default;
  bool operator==(const DeletionEntry&) const = default;
};

using DeletionList = std::set<DeletionEntry>;

// Where each chunk currently lives, plus which chunks make up which file.
struct PlacementMap {
  std::map<ContentAddress, std::set<PeerId>> holders;
  std::map<std::string, std::set<ContentAddress>> files;

  // Chunk -> files containing it. With no file sets, every chunk belongs to
  // a single implicit file "".
  std::map<ContentAddress, std::vector<std::string>> files_of_chunks() const;
  // Placement after removing the listed replicas.
  PlacementMap after(const DeletionList& deletions) const;
  void merge(const PlacementMap& other);

  bool operator==(const PlacementMap&) const = default;
};

// Addresses of every chunk in the file: tree chunks in preorder (root first,
// children left to right) followed by parity chunks in group order. Only
// internal chunks are fetched.
std::vector<ContentAddress> listchunks(const EncodedManifest& manifest, const FetchFn& fetch);
// Same order, computed from the manifest layout alone.
std::vector<ContentAddress> listchunks(const EncodedManifest& manifest);

// Holders of each listed chunk across all peer stores of the network.
PlacementMap placement_from_network(const Network& network,
                                    const std::vector<std::pair<std::string, std::vector<ContentAddress>>>& files);

// Deletion plan leaving exactly target_r replicas of every chunk while every
// peer keeps at least one chunk of each file it held before. Throws
// Errc::kInfeasible with a witness when no such plan exists, and when some
// chunk has fewer than target_r replicas.
DeletionList bakedeletion(const PlacementMap& placement, std::size_t target_r);

// Sorted, de-duplicated union. With a placement, the union is re-checked
// against it: every peer must keep a chunk of each of its files, no chunk may
// vanish, and replication must stay uniform.
DeletionList combinestorage(std::span<const DeletionList> lists, const PlacementMap* placement = nullptr);

struct DeleteReport {
  std::size_t applied = 0;
  std::size_t missing = 0;  // entries naming a chunk (or peer) that was absent
};

// Refuses to run while the network is in full sync mode.
DeleteReport deletechunks(Network& network, const DeletionList& list);

struct RuleReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// Checks rules A-D between two placements: peers keep a chunk of every file
// they held, the unique-chunk set is unchanged, nothing was added, and every
// chunk has exactly target_r replicas.
RuleReport check_rules(const PlacementMap& before, const PlacementMap& after, std::size_t target_r);

// "<peer-hex> <address-hex>" per line, sorted.
void write_deletion_list(std::ostream& out, const DeletionList& list);
DeletionList read_deletion_list(std::istream& in);

// "<address-hex> <peer-hex> ..." per chunk, then "file <id> <address-hex> ...".
void write_placement(std::ostream& out, const PlacementMap& placement);
PlacementMap read_placement(std::istream& in);

}  // namespace swarmlab

#include "swarmlab/tools.hpp"

#include <algorithm>
#include <sstream>

#include "text_util.hpp"

namespace swarmlab {

std::map<ContentAddress, std::vector<std::string>> PlacementMap::files_of_chunks() const {
  std::map<ContentAddress, std::vector<std::string>> out;
  if (files.empty()) {
    for (const auto& [addr, peers] : holders) out[addr].push_back("");
    return out;
  }
  for (const auto& [name, addrs] : files) {
    for (const auto& a : addrs) out[a].push_back(name);
  }
  return out;
}

PlacementMap PlacementMap::after(const DeletionList& deletions) const {
  PlacementMap out = *this;
  for (const auto& e : deletions) {
    if (auto it = out.holders.find(e.address); it != out.holders.end()) it->second.erase(e.peer);
  }
  return out;
}

void PlacementMap::merge(const PlacementMap& other) {
  for (const auto& [addr, peers] : other.holders) holders[addr].insert(peers.begin(), peers.end());
  for (const auto& [name, addrs] : other.files) files[name].insert(addrs.begin(), addrs.end());
}

namespace {

void preorder(const FileManifest& m, std::size_t level, std::size_t index, std::vector<ContentAddress>& out) {
  out.push_back(m.levels[level][index]);
  if (level == 0) return;
  const std::size_t below = m.levels[level - 1].size();
  const std::size_t first = index * m.params.branching;
  const std::size_t last = std::min(below, first + m.params.branching);
  for (std::size_t i = first; i < last; ++i) preorder(m, level - 1, i, out);
}

void preorder_fetch(const ContentAddress& addr, std::size_t depth, const FetchFn& fetch,
                    std::vector<ContentAddress>& out) {
  out.push_back(addr);
  if (depth == 0) return;
  auto payload = fetch(addr);
  if (!payload || content_address(*payload) != addr) {
    throw Error(Errc::kUnavailable, "cannot enumerate file: internal chunk " + addr.hex() + " is unretrievable");
  }
  for (const auto& child : parse_internal(*payload)) preorder_fetch(child, depth - 1, fetch, out);
}

std::vector<ContentAddress> dedup_in_order(const std::vector<ContentAddress>& in) {
  std::set<ContentAddress> seen;
  std::vector<ContentAddress> out;
  for (const auto& a : in) {
    if (seen.insert(a).second) out.push_back(a);
  }
  return out;
}

}  // namespace

std::vector<ContentAddress> listchunks(const EncodedManifest& manifest, const FetchFn& fetch) {
  const auto shape = tree_shape(manifest.base.file_size, manifest.base.params);
  std::vector<ContentAddress> out;
  preorder_fetch(manifest.base.root, shape.size() - 1, fetch, out);
  for (const auto& a : manifest.parity_addresses()) out.push_back(a);
  return dedup_in_order(out);
}

std::vector<ContentAddress> listchunks(const EncodedManifest& manifest) {
  const auto& m = manifest.base;
  std::vector<ContentAddress> out;
  preorder(m, m.levels.size() - 1, 0, out);
  for (const auto& a : manifest.parity_addresses()) out.push_back(a);
  return dedup_in_order(out);
}

PlacementMap placement_from_network(const Network& network,
                                    const std::vector<std::pair<std::string, std::vector<ContentAddress>>>& files) {
  PlacementMap out;
  for (const auto& [name, addrs] : files) {
    auto& set = out.files[name];
    for (const auto& a : addrs) {
      set.insert(a);
      out.holders[a];
    }
  }
  for (std::size_t p = 0; p < network.size(); ++p) {
    for (const auto& [addr, payload] : network.store(p)) {
      if (auto it = out.holders.find(addr); it != out.holders.end()) it->second.insert(network.peer_ids()[p]);
    }
  }
  return out;
}

RuleReport check_rules(const PlacementMap& before, const PlacementMap& after, std::size_t target_r) {
  RuleReport report;
  auto& v = report.violations;
  const auto files_of = before.files_of_chunks();

  // (A) per (peer, file)
  std::set<std::pair<PeerId, std::string>> had;
  std::set<std::pair<PeerId, std::string>> has;
  for (const auto& [addr, peers] : before.holders) {
    auto it = files_of.find(addr);
    if (it == files_of.end()) continue;
    for (const auto& p : peers) {
      for (const auto& f : it->second) had.emplace(p, f);
    }
  }
  for (const auto& [addr, peers] : after.holders) {
    auto it = files_of.find(addr);
    if (it == files_of.end()) continue;
    for (const auto& p : peers) {
      for (const auto& f : it->second) has.emplace(p, f);
    }
  }
  for (const auto& pf : had) {
    if (!has.count(pf)) v.push_back("rule A: peer " + pf.first.hex() + " lost every chunk of file '" + pf.second + "'");
  }

  // (B) same unique chunks
  std::set<ContentAddress> unique_before;
  std::set<ContentAddress> unique_after;
  for (const auto& [addr, peers] : before.holders) {
    if (!peers.empty()) unique_before.insert(addr);
  }
  for (const auto& [addr, peers] : after.holders) {
    if (!peers.empty()) unique_after.insert(addr);
  }
  if (unique_before != unique_after) {
    v.push_back("rule B: unique chunk count changed from " + std::to_string(unique_before.size()) + " to " +
                std::to_string(unique_after.size()));
  }

  // (C) no new replicas
  for (const auto& [addr, peers] : after.holders) {
    auto it = before.holders.find(addr);
    for (const auto& p : peers) {
      if (it == before.holders.end() || !it->second.count(p)) {
        v.push_back("rule C: peer " + p.hex() + " gained chunk " + addr.hex());
      }
    }
  }

  // (D) uniform replication
  for (const auto& [addr, peers] : after.holders) {
    if (peers.size() != target_r) {
      v.push_back("rule D: chunk " + addr.hex() + " has " + std::to_string(peers.size()) + " replicas, expected " +
                  std::to_string(target_r));
    }
  }
  return report;
}

DeletionList combinestorage(std::span<const DeletionList> lists, const PlacementMap* placement) {
  DeletionList out;
  for (const auto& l : lists) out.insert(l.begin(), l.end());
  if (!placement) return out;

  const auto after = placement->after(out);
  const auto files_of = placement->files_of_chunks();
  std::set<std::pair<PeerId, std::string>> has;
  for (const auto& [addr, peers] : after.holders) {
    if (auto it = files_of.find(addr); it != files_of.end()) {
      for (const auto& p : peers) {
        for (const auto& f : it->second) has.emplace(p, f);
      }
    }
  }
  for (const auto& [addr, peers] : placement->holders) {
    auto it = files_of.find(addr);
    if (it == files_of.end()) continue;
    for (const auto& p : peers) {
      for (const auto& f : it->second) {
        if (!has.count({p, f})) {
          throw Error(Errc::kInfeasible, "rule A violated by combined deletion list: peer " + p.hex() +
                                             " keeps no chunk of file '" + f + "'");
        }
      }
    }
  }
  std::optional<std::size_t> replicas;
  for (const auto& [addr, peers] : after.holders) {
    if (peers.empty()) {
      throw Error(Errc::kInfeasible, "rule B violated by combined deletion list: chunk " + addr.hex() + " loses every replica");
    }
    if (replicas && *replicas != peers.size()) {
      throw Error(Errc::kInfeasible, "rule D violated by combined deletion list: chunk " + addr.hex() + " keeps " +
                                         std::to_string(peers.size()) + " replicas, others keep " +
                                         std::to_string(*replicas));
    }
    replicas = peers.size();
  }
  return out;
}

DeleteReport deletechunks(Network& network, const DeletionList& list) {
  if (network.sync_mode() != SyncMode::kNoSync) {
    throw Error(Errc::kPrecondition, "deletechunks refused: peers run with syncing enabled and would re-replicate "
                                     "deleted chunks; switch to no-sync first");
  }
  DeleteReport report;
  for (const auto& e : list) {
    const auto idx = network.index_of(e.peer);
    if (idx && network.remove_chunk(*idx, e.address)) {
      ++report.applied;
    } else {
      ++report.missing;
    }
  }
  return report;
}

void write_deletion_list(std::ostream& out, const DeletionList& list) {
  for (const auto& e : list) out << e.peer.hex() << ' ' << e.address.hex() << '\n';
}

DeletionList read_deletion_list(std::istream& in) {
  DeletionList out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tok = detail::split_ws(line);
    if (tok.empty()) continue;
    if (tok.size() != 2) throw Error(Errc::kInvalidArgument, "deletion list line " + std::to_string(lineno) + ": expected '<peer> <chunk>'");
    out.insert(DeletionEntry{Hash256::from_hex(tok[0]), Hash256::from_hex(tok[1])});
  }
  return out;
}

void write_placement(std::ostream& out, const PlacementMap& placement) {
  for (const auto& [addr, peers] : placement.holders) {
    out << addr.hex();
    for (const auto& p : peers) out << ' ' << p.hex();
    out << '\n';
  }
  for (const auto& [name, addrs] : placement.files) {
    out << "file " << name;
    for (const auto& a : addrs) out << ' ' << a.hex();
    out << '\n';
  }
}

PlacementMap read_placement(std::istream& in) {
  PlacementMap out;
  std::string line;
  while (std::getline(in, line)) {
    const auto tok = detail::split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] == "file") {
      if (tok.size() < 2) throw Error(Errc::kInvalidArgument, "placement 'file' line lacks an id");
      auto& set = out.files[tok[1]];
      for (std::size_t i = 2; i < tok.size(); ++i) set.insert(Hash256::from_hex(tok[i]));
    } else {
      auto& peers = out.holders[Hash256::from_hex(tok[0])];
      for (std::size_t i = 1; i < tok.size(); ++i) peers.insert(Hash256::from_hex(tok[i]));
    }
  }
  return out;
}

}  // namespace swarmlab

#include <algorithm>
#include <deque>
#include <map>
#include <numeric>
#include <sstream>

#include "swarmlab/tools.hpp"

namespace swarmlab {

namespace {

// Dense re-indexing of a placement. Chunks and peers are in ascending id
// order, which fixes the planner's iteration and tie-break order.
struct Instance {
  std::vector<ContentAddress> chunks;
  std::vector<PeerId> peers;
  std::vector<std::string> files;
  std::vector<std::vector<int>> holders;      // per chunk, ascending peer index
  std::vector<std::vector<int>> chunk_files;  // per chunk
  std::vector<std::vector<int>> peer_chunks;  // per peer, ascending chunk index
  std::map<std::pair<int, int>, int> obligation_id;  // (peer, file) -> id
  std::vector<std::pair<int, int>> obligations;
  bool files_disjoint = true;
};

Instance index_placement(const PlacementMap& placement, std::size_t target_r) {
  Instance inst;
  std::map<PeerId, int> peer_index;
  for (const auto& [addr, peers] : placement.holders) {
    for (const auto& p : peers) peer_index.emplace(p, 0);
  }
  for (auto& [id, idx] : peer_index) {
    idx = static_cast<int>(inst.peers.size());
    inst.peers.push_back(id);
  }

  std::map<ContentAddress, std::vector<int>> files_of;
  if (placement.files.empty()) {
    inst.files.push_back("");
    for (const auto& [addr, peers] : placement.holders) files_of[addr].push_back(0);
  } else {
    for (const auto& [name, addrs] : placement.files) {
      const int f = static_cast<int>(inst.files.size());
      inst.files.push_back(name);
      for (const auto& a : addrs) files_of[a].push_back(f);
    }
  }

  inst.peer_chunks.resize(inst.peers.size());
  std::set<ContentAddress> all;
  for (const auto& [addr, peers] : placement.holders) all.insert(addr);
  for (const auto& [addr, fs] : files_of) all.insert(addr);

  for (const auto& addr : all) {
    std::vector<int> h;
    if (auto it = placement.holders.find(addr); it != placement.holders.end()) {
      for (const auto& p : it->second) h.push_back(peer_index.at(p));
    }
    if (h.size() < target_r) {
      throw Error(Errc::kInfeasible, "chunk " + addr.hex() + " has " + std::to_string(h.size()) +
                                         " replicas, fewer than target_r=" + std::to_string(target_r));
    }
    std::vector<int> fs;
    if (auto it = files_of.find(addr); it != files_of.end()) fs = it->second;
    if (fs.size() > 1) inst.files_disjoint = false;
    const int c = static_cast<int>(inst.chunks.size());
    inst.chunks.push_back(addr);
    inst.holders.push_back(h);
    inst.chunk_files.push_back(fs);
    for (int p : h) {
      for (int f : fs) {
        if (inst.obligation_id.emplace(std::make_pair(p, f), static_cast<int>(inst.obligations.size())).second) {
          inst.obligations.emplace_back(p, f);
        }
      }
    }
    for (int p : h) inst.peer_chunks[p].push_back(c);
  }
  return inst;
}

class Planner {
 public:
  Planner(const Instance& inst, std::size_t r)
      : inst_(inst),
        r_(r),
        keep_(inst.chunks.size()),
        satisfied_(inst.obligations.size(), 0),
        undecided_(inst.obligations.size(), 0),
        kept_total_(inst.peers.size(), 0) {
    for (std::size_t c = 0; c < inst_.chunks.size(); ++c) {
      for (int p : inst_.holders[c]) {
        for (int f : inst_.chunk_files[c]) ++undecided_[ob(p, f)];
      }
    }
  }

  void greedy() {
    for (std::size_t c = 0; c < inst_.chunks.size(); ++c) {
      std::vector<int> order = inst_.holders[c];
      auto urgency = [&](int p) {
        int best = 2;
        for (int f : inst_.chunk_files[c]) {
          const int o = ob(p, f);
          if (satisfied_[o] == 0) best = std::min(best, undecided_[o] == 1 ? 0 : 1);
        }
        return best;
      };
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        const auto ka = std::make_tuple(urgency(a), kept_total_[a], a);
        const auto kb = std::make_tuple(urgency(b), kept_total_[b], b);
        return ka < kb;
      });
      order.resize(r_);
      for (int p : inst_.holders[c]) {
        for (int f : inst_.chunk_files[c]) --undecided_[ob(p, f)];
      }
      for (int p : order) add_keep(static_cast<int>(c), p);
    }
  }

  struct Witness {
    std::set<int> peers;
    std::set<int> chunks;
    int file = 0;
  };

  // Moves keeps along an augmenting chain until obligation o holds. Returns
  // false (filling `witness`) when no chain exists.
  bool repair(int o, Witness& witness) {
    struct Step {
      int obligation;
      int chunk;
      int evicted;
      int parent;  // index into steps, -1 for the root obligation
    };
    std::vector<Step> steps;
    std::deque<std::pair<int, int>> queue;  // (obligation, parent step)
    std::vector<char> seen_chunk(inst_.chunks.size(), 0);
    std::vector<char> seen_ob(inst_.obligations.size(), 0);
    queue.emplace_back(o, -1);
    seen_ob[o] = 1;
    int found = -1;
    while (!queue.empty() && found < 0) {
      const auto [cur, parent] = queue.front();
      queue.pop_front();
      const auto [p, f] = inst_.obligations[cur];
      for (const int c : inst_.peer_chunks[p]) {
        if (found >= 0) break;
        if (seen_chunk[c] || !in_file(c, f) || keeps(c, p)) continue;
        seen_chunk[c] = 1;
        for (int q : keep_[c]) {
          std::vector<int> broken;
          for (int g : inst_.chunk_files[c]) {
            if (satisfied_[ob(q, g)] == 1) broken.push_back(ob(q, g));
          }
          if (broken.empty()) {
            steps.push_back({cur, c, q, parent});
            found = static_cast<int>(steps.size()) - 1;
            break;
          }
          if (broken.size() == 1 && !seen_ob[broken[0]]) {
            seen_ob[broken[0]] = 1;
            steps.push_back({cur, c, q, parent});
            queue.emplace_back(broken[0], static_cast<int>(steps.size()) - 1);
          }
        }
      }
    }
    if (found < 0) {
      witness = {};
      witness.file = inst_.obligations[o].second;
      for (std::size_t i = 0; i < seen_ob.size(); ++i) {
        if (seen_ob[i]) witness.peers.insert(inst_.obligations[i].first);
      }
      for (std::size_t c = 0; c < seen_chunk.size(); ++c) {
        if (seen_chunk[c]) witness.chunks.insert(static_cast<int>(c));
      }
      return false;
    }
    for (int s = found; s >= 0; s = steps[s].parent) {
      const auto& st = steps[s];
      remove_keep(st.chunk, st.evicted);
      add_keep(st.chunk, inst_.obligations[st.obligation].first);
    }
    return true;
  }

  bool satisfied(int o) const { return satisfied_[o] > 0; }

  std::vector<int> starved() const {
    std::vector<int> out;
    for (std::size_t o = 0; o < satisfied_.size(); ++o) {
      if (satisfied_[o] == 0) out.push_back(static_cast<int>(o));
    }
    return out;
  }

  const std::vector<std::vector<int>>& keeps() const { return keep_; }
  void set_keeps(std::vector<std::vector<int>> k) {
    keep_ = std::move(k);
    std::fill(satisfied_.begin(), satisfied_.end(), 0);
    std::fill(kept_total_.begin(), kept_total_.end(), 0);
    for (std::size_t c = 0; c < keep_.size(); ++c) {
      for (int p : keep_[c]) {
        ++kept_total_[p];
        for (int f : inst_.chunk_files[c]) ++satisfied_[ob(p, f)];
      }
    }
  }

 private:
  int ob(int p, int f) const { return inst_.obligation_id.at({p, f}); }
  bool in_file(std::size_t c, int f) const {
    const auto& fs = inst_.chunk_files[c];
    return std::find(fs.begin(), fs.end(), f) != fs.end();
  }
  bool keeps(std::size_t c, int p) const { return std::find(keep_[c].begin(), keep_[c].end(), p) != keep_[c].end(); }

  void add_keep(int c, int p) {
    keep_[c].push_back(p);
    std::sort(keep_[c].begin(), keep_[c].end());
    ++kept_total_[p];
    for (int f : inst_.chunk_files[c]) ++satisfied_[ob(p, f)];
  }
  void remove_keep(int c, int p) {
    keep_[c].erase(std::find(keep_[c].begin(), keep_[c].end(), p));
    --kept_total_[p];
    for (int f : inst_.chunk_files[c]) --satisfied_[ob(p, f)];
  }

  const Instance& inst_;
  std::size_t r_;
  std::vector<std::vector<int>> keep_;
  std::vector<int> satisfied_;
  std::vector<int> undecided_;
  std::vector<int> kept_total_;
};

// Exhaustive search over every r-subset of holders per chunk. Used only
// when chunks are shared between files, where chain repair is not complete.
constexpr double kExhaustiveLimit = 2e6;

bool next_combination(std::vector<int>& sel, int n) {
  const int k = static_cast<int>(sel.size());
  for (int i = k - 1; i >= 0; --i) {
    if (sel[i] < n - k + i) {
      ++sel[i];
      for (int j = i + 1; j < k; ++j) sel[j] = sel[j - 1] + 1;
      return true;
    }
  }
  return false;
}

std::optional<std::vector<std::vector<int>>> exhaustive(const Instance& inst, std::size_t r) {
  double space = 1;
  for (const auto& h : inst.holders) {
    double comb = 1;
    for (std::size_t i = 0; i < r; ++i) comb = comb * static_cast<double>(h.size() - i) / static_cast<double>(i + 1);
    space *= comb;
    if (space > kExhaustiveLimit) return std::nullopt;
  }
  const std::size_t n = inst.chunks.size();
  std::vector<std::vector<int>> sel(n);
  for (auto& s : sel) {
    s.resize(r);
    std::iota(s.begin(), s.end(), 0);
  }
  for (;;) {
    std::vector<char> ok(inst.obligations.size(), 0);
    for (std::size_t c = 0; c < n; ++c) {
      for (int i : sel[c]) {
        for (int f : inst.chunk_files[c]) ok[inst.obligation_id.at({inst.holders[c][i], f})] = 1;
      }
    }
    if (std::all_of(ok.begin(), ok.end(), [](char v) { return v != 0; })) {
      std::vector<std::vector<int>> keeps(n);
      for (std::size_t c = 0; c < n; ++c) {
        for (int i : sel[c]) keeps[c].push_back(inst.holders[c][i]);
      }
      return keeps;
    }
    std::size_t c = 0;
    while (c < n && !next_combination(sel[c], static_cast<int>(inst.holders[c].size()))) {
      std::iota(sel[c].begin(), sel[c].end(), 0);
      ++c;
    }
    if (c == n) return std::vector<std::vector<int>>{};
  }
}

std::string short_hex(const Hash256& h) { return h.hex().substr(0, 12); }

}  // namespace

DeletionList bakedeletion(const PlacementMap& placement, std::size_t target_r) {
  if (target_r < 1) throw Error(Errc::kInvalidArgument, "target_r must be at least 1");
  const Instance inst = index_placement(placement, target_r);
  Planner planner(inst, target_r);
  planner.greedy();

  std::optional<Planner::Witness> failure;
  for (int o : planner.starved()) {
    if (planner.satisfied(o)) continue;
    Planner::Witness w;
    if (!planner.repair(o, w) && !failure) failure = w;
  }
  if (!planner.starved().empty()) {
    bool solved = false;
    if (!inst.files_disjoint) {
      auto found = exhaustive(inst, target_r);
      if (found && !found->empty()) {
        planner.set_keeps(std::move(*found));
        solved = true;
      } else if (!found) {
        throw Error(Errc::kInfeasible, "rule A: no deletion plan found for starved peer " +
                                           inst.peers[inst.obligations[planner.starved().front()].first].hex() +
                                           " (instance too large for exhaustive search)");
      }
    }
    if (!solved) {
      std::ostringstream msg;
      const auto& w = *failure;
      msg << "rule A (all peers must keep some chunks) is infeasible";
      if (!inst.files[w.file].empty()) msg << " for file " << inst.files[w.file];
      msg << ": peers {";
      bool first = true;
      for (int p : w.peers) {
        msg << (first ? "" : ",") << short_hex(inst.peers[p]);
        first = false;
      }
      msg << "} can only keep replicas of chunks {";
      first = true;
      for (int c : w.chunks) {
        msg << (first ? "" : ",") << short_hex(inst.chunks[c]);
        first = false;
      }
      msg << "}, at most " << target_r * w.chunks.size() << " keeps for " << w.peers.size() << " peers";
      throw Error(Errc::kInfeasible, msg.str());
    }
  }

  DeletionList out;
  const auto& keeps = planner.keeps();
  for (std::size_t c = 0; c < inst.chunks.size(); ++c) {
    for (int p : inst.holders[c]) {
      if (std::find(keeps[c].begin(), keeps[c].end(), p) == keeps[c].end()) {
        out.insert(DeletionEntry{inst.peers[p], inst.chunks[c]});
      }
    }
  }
  return out;
}

}  // namespace swarmlab

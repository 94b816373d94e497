#include "swarmlab/codec.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "swarmlab/gf256.hpp"
#include "text_util.hpp"

namespace swarmlab {

void CodingParams::validate() const {
  if (k < 1) throw Error(Errc::kInvalidArgument, "k must be at least 1");
  if (n < k) throw Error(Errc::kInvalidArgument, "n must be at least k");
  if (n > 256) throw Error(Errc::kInvalidArgument, "n must be at most 256");
}

namespace {

// n' x k' systematic generator: the Vandermonde matrix times the inverse of
// its top square, so the first k' rows are the identity and any k' rows
// remain invertible.
gf256::Matrix generator(std::size_t data_count, std::size_t parity_count) {
  const auto v = gf256::Matrix::vandermonde(data_count + parity_count, data_count);
  std::vector<std::size_t> top(data_count);
  for (std::size_t i = 0; i < data_count; ++i) top[i] = i;
  auto g = v.multiply(v.select_rows(top).inverse());
  // With one data chunk every parity row is 1, i.e. a byte copy of the data
  // with the same address. Distinct scalars other than 1 keep the code MDS
  // (only n = 256 runs out of them; its last row stays a copy).
  if (data_count == 1) {
    for (std::size_t i = 0; i < parity_count && i + 2 < 256; ++i) g.at(1 + i, 0) = static_cast<std::uint8_t>(i + 2);
  }
  return g;
}

}  // namespace

std::vector<Bytes> rs_encode(const std::vector<ByteView>& data, const CodingParams& params) {
  params.validate();
  if (data.empty()) throw Error(Errc::kInvalidArgument, "rs_encode needs at least one data payload");
  if (data.size() > params.k) throw Error(Errc::kInvalidArgument, "more data payloads than k");
  const std::size_t m = params.parity();
  if (m == 0) return {};
  std::size_t width = 0;
  for (const auto& d : data) width = std::max(width, d.size());

  const auto gen = generator(data.size(), m);
  std::vector<Bytes> parity(m, Bytes(width, 0));
  for (std::size_t p = 0; p < m; ++p) {
    for (std::size_t j = 0; j < data.size(); ++j) {
      gf256::mul_add_region(gen.at(data.size() + p, j), data[j], parity[p]);
    }
  }
  return parity;
}

std::vector<Bytes> rs_decode(const std::vector<Shard>& present, const CodingParams& params,
                             std::span<const std::size_t> lengths) {
  params.validate();
  const std::size_t k = lengths.size();
  if (k == 0 || k > params.k) throw Error(Errc::kInvalidArgument, "group must have 1..k data payloads");
  const std::size_t total = k + params.parity();

  // First shard per index, in index order.
  std::map<std::size_t, ByteView> by_index;
  for (const auto& s : present) {
    if (s.index >= total) throw Error(Errc::kInvalidArgument, "shard index " + std::to_string(s.index) + " out of range");
    if (!by_index.emplace(s.index, s.payload).second) {
      throw Error(Errc::kInvalidArgument, "duplicate shard index " + std::to_string(s.index));
    }
  }
  if (by_index.size() < k) {
    throw Error(Errc::kUnavailable,
                "need " + std::to_string(k) + ", have " + std::to_string(by_index.size()));
  }

  std::vector<Bytes> out(k);
  bool systematic = true;
  for (std::size_t i = 0; i < k; ++i) systematic = systematic && by_index.count(i);
  if (systematic) {
    for (std::size_t i = 0; i < k; ++i) {
      const auto src = by_index[i];
      if (src.size() < lengths[i]) throw Error(Errc::kCorrupt, "data shard shorter than its recorded length");
      out[i].assign(src.begin(), src.begin() + lengths[i]);
    }
    return out;
  }

  std::vector<std::size_t> rows;
  std::vector<ByteView> inputs;
  std::size_t width = 0;
  for (const auto& [idx, payload] : by_index) {
    if (rows.size() == k) break;
    rows.push_back(idx);
    inputs.push_back(payload);
    width = std::max(width, payload.size());
  }
  const auto decode = generator(k, params.parity()).select_rows(rows).inverse();
  for (std::size_t i = 0; i < k; ++i) {
    Bytes row(width, 0);
    for (std::size_t j = 0; j < k; ++j) gf256::mul_add_region(decode.at(i, j), inputs[j], row);
    if (lengths[i] > width) throw Error(Errc::kCorrupt, "recorded length exceeds coded width");
    row.resize(lengths[i]);
    out[i] = std::move(row);
  }
  return out;
}

const CodingGroup* EncodedManifest::find_group(std::size_t level, std::size_t index) const {
  const std::size_t ordinal = index / params.k;
  for (const auto& g : groups) {
    if (g.level == level && g.ordinal == ordinal) return &g;
  }
  return nullptr;
}

std::vector<ContentAddress> EncodedManifest::parity_addresses() const {
  std::vector<ContentAddress> out;
  for (const auto& g : groups) out.insert(out.end(), g.parity.begin(), g.parity.end());
  return out;
}

EncodedTree encode_tree(const FileManifest& manifest, const ChunkMap& chunks, const CodingParams& params,
                        CodingScope scope) {
  params.validate();
  EncodedTree out;
  out.manifest.base = manifest;
  out.manifest.params = params;
  if (manifest.levels.size() < 2) return out;

  const std::size_t coded_levels = scope == CodingScope::kTree ? manifest.levels.size() - 1 : 1;
  for (std::size_t level = 0; level < coded_levels; ++level) {
    const auto& addrs = manifest.levels[level];
    for (std::size_t start = 0, ordinal = 0; start < addrs.size(); start += params.k, ++ordinal) {
      const std::size_t end = std::min(addrs.size(), start + params.k);
      CodingGroup group;
      group.level = level;
      group.ordinal = ordinal;
      group.data.assign(addrs.begin() + start, addrs.begin() + end);
      std::vector<ByteView> payloads;
      for (const auto& a : group.data) {
        auto it = chunks.find(a);
        if (it == chunks.end()) throw Error(Errc::kInvalidArgument, "encode_tree: chunk " + a.hex() + " not supplied");
        payloads.emplace_back(it->second);
      }
      for (auto& p : rs_encode(payloads, params)) {
        const auto addr = content_address(p);
        group.parity.push_back(addr);
        out.parity.emplace(addr, std::move(p));
      }
      out.manifest.groups.push_back(std::move(group));
    }
  }
  return out;
}

namespace {

class RepairingWalker {
 public:
  RepairingWalker(const EncodedManifest& m, const FetchFn& fetch, RepairStats& stats)
      : m_(m), fetch_(fetch), stats_(stats) {}

  void walk(const ContentAddress& addr, std::size_t level, std::size_t index, Bytes& out) {
    const Bytes payload = obtain(addr, level, index);
    if (level == 0) {
      out.insert(out.end(), payload.begin(), payload.end());
      return;
    }
    const auto children = parse_internal(payload);
    for (std::size_t i = 0; i < children.size(); ++i) {
      walk(children[i], level - 1, index * m_.base.params.branching + i, out);
    }
  }

 private:
  std::optional<Bytes> try_fetch(const ContentAddress& addr) {
    auto p = fetch_(addr);
    if (!p || content_address(*p) != addr) return std::nullopt;
    ++stats_.fetched_chunks;
    stats_.fetched_bytes += p->size();
    return p;
  }

  Bytes obtain(const ContentAddress& addr, std::size_t level, std::size_t index) {
    if (auto p = try_fetch(addr)) return *p;
    const CodingGroup* group = level < m_.base.levels.size() ? m_.find_group(level, index) : nullptr;
    if (!group) throw Error(Errc::kUnavailable, "missing chunk " + addr.hex() + " (not covered by a coding group)");
    const std::size_t slot = index - group->ordinal * m_.params.k;
    if (slot >= group->data.size() || group->data[slot] != addr) {
      throw Error(Errc::kCorrupt, "chunk " + addr.hex() + " disagrees with its coding group");
    }
    const auto& decoded = repair(*group);
    return decoded[slot];
  }

  const std::vector<Bytes>& repair(const CodingGroup& g) {
    const auto key = std::make_pair(g.level, g.ordinal);
    if (auto it = repaired_.find(key); it != repaired_.end()) return it->second;

    const std::size_t k = g.data.size();
    std::vector<Bytes> held;
    std::vector<std::size_t> indices;
    auto consider = [&](std::size_t idx, const ContentAddress& a) {
      if (held.size() == k) return;
      if (auto p = try_fetch(a)) {
        held.push_back(std::move(*p));
        indices.push_back(idx);
      }
    };
    for (std::size_t i = 0; i < k; ++i) consider(i, g.data[i]);
    for (std::size_t i = 0; i < g.parity.size(); ++i) consider(k + i, g.parity[i]);
    if (held.size() < k) {
      throw Error(Errc::kUnavailable, "unrecoverable group level=" + std::to_string(g.level) +
                                          " index=" + std::to_string(g.ordinal) + ": need " + std::to_string(k) +
                                          ", have " + std::to_string(held.size()));
    }
    std::vector<Shard> shards;
    for (std::size_t i = 0; i < held.size(); ++i) shards.push_back({indices[i], held[i]});
    std::vector<std::size_t> lengths(k);
    for (std::size_t i = 0; i < k; ++i) lengths[i] = m_.base.chunk_length(g.level, g.ordinal * m_.params.k + i);

    auto decoded = rs_decode(shards, m_.params, lengths);
    for (std::size_t i = 0; i < k; ++i) {
      if (content_address(decoded[i]) != g.data[i]) {
        throw Error(Errc::kCorrupt, "repaired chunk does not hash to " + g.data[i].hex());
      }
    }
    std::size_t rebuilt = 0;
    for (std::size_t i = 0; i < k; ++i) rebuilt += std::find(indices.begin(), indices.end(), i) == indices.end();
    ++stats_.repaired_groups;
    stats_.repaired_chunks += rebuilt;
    return repaired_.emplace(key, std::move(decoded)).first->second;
  }

  const EncodedManifest& m_;
  const FetchFn& fetch_;
  RepairStats& stats_;
  std::map<std::pair<std::size_t, std::size_t>, std::vector<Bytes>> repaired_;
};

}  // namespace

Bytes repair_retrieve(const EncodedManifest& manifest, const FetchFn& fetch, RepairStats* stats) {
  RepairStats local;
  RepairStats& s = stats ? *stats : local;
  const auto& base = manifest.base;
  const auto shape = tree_shape(base.file_size, base.params);
  Bytes out;
  out.reserve(base.file_size);
  RepairingWalker walker(manifest, fetch, s);
  walker.walk(base.root, shape.size() - 1, 0, out);
  if (out.size() != base.file_size) throw Error(Errc::kCorrupt, "reassembled size differs from manifest");
  return out;
}

namespace {

std::string join_hex(const std::vector<ContentAddress>& addrs) {
  std::string s;
  for (std::size_t i = 0; i < addrs.size(); ++i) {
    if (i) s += ',';
    s += addrs[i].hex();
  }
  return s;
}

std::vector<ContentAddress> parse_hex_list(std::string_view s) {
  std::vector<ContentAddress> out;
  for (const auto& tok : detail::split(s, ',')) out.push_back(Hash256::from_hex(tok));
  return out;
}

}  // namespace

void write_encoded_manifest(std::ostream& out, const EncodedManifest& m) {
  write_manifest(out, m.base);
  out << "k=" << m.params.k << '\n';
  out << "n=" << m.params.n << '\n';
  for (const auto& g : m.groups) {
    out << "group level=" << g.level << " data=" << join_hex(g.data) << " parity=" << join_hex(g.parity) << '\n';
  }
}

EncodedManifest read_encoded_manifest(std::istream& in) {
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  EncodedManifest m;
  {
    std::istringstream base_in(text);
    m.base = read_manifest(base_in);
  }
  bool have_k = false;
  bool have_n = false;
  std::map<std::size_t, std::size_t> ordinals;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (auto v = detail::key_value(line, "k")) {
      m.params.k = detail::parse_uint(*v, "k");
      have_k = true;
    } else if (auto w = detail::key_value(line, "n")) {
      m.params.n = detail::parse_uint(*w, "n");
      have_n = true;
    } else if (line.rfind("group ", 0) == 0) {
      CodingGroup g;
      bool have_level = false;
      for (const auto& tok : detail::split_ws(line.substr(6))) {
        if (auto lv = detail::key_value(tok, "level")) {
          g.level = detail::parse_uint(*lv, "level");
          have_level = true;
        } else if (auto d = detail::key_value(tok, "data")) {
          g.data = parse_hex_list(*d);
        } else if (auto p = detail::key_value(tok, "parity")) {
          g.parity = parse_hex_list(*p);
        } else if (tok == "data=" || tok == "parity=") {
          continue;
        } else {
          throw Error(Errc::kInvalidArgument, "unexpected token in group line: " + tok);
        }
      }
      if (!have_level) throw Error(Errc::kInvalidArgument, "group line lacks level=");
      g.ordinal = ordinals[g.level]++;
      m.groups.push_back(std::move(g));
    }
  }
  if (have_k != have_n) throw Error(Errc::kInvalidArgument, "manifest gives only one of k/n");
  m.params.validate();
  for (const auto& g : m.groups) {
    if (g.level + 1 >= m.base.levels.size()) throw Error(Errc::kInvalidArgument, "group on the root level");
    const auto& level = m.base.levels[g.level];
    const std::size_t start = g.ordinal * m.params.k;
    if (g.data.empty() || g.data.size() > m.params.k || start + g.data.size() > level.size() ||
        !std::equal(g.data.begin(), g.data.end(), level.begin() + start)) {
      throw Error(Errc::kInvalidArgument, "group level=" + std::to_string(g.level) + " does not match manifest level");
    }
    if (g.parity.size() != m.params.parity()) throw Error(Errc::kInvalidArgument, "group parity count differs from n-k");
  }
  return m;
}

}  // namespace swarmlab

#pragma once

#include <istream>
#include <ostream>
#include <utility>
#include <vector>

#include "swarmlab/chunker.hpp"

namespace swarmlab {

// k-of-n systematic Reed-Solomon over GF(256).
struct CodingParams {
  std::size_t k = 1;
  std::size_t n = 1;

  void validate() const;
  std::size_t parity() const { return n - k; }
  bool operator==(const CodingParams&) const = default;
};

// Parity for one group. Fewer than k data payloads is allowed (a short final
// group); it is coded as k' = data.size() with the same n - k parity count.
// Payloads are zero-padded to the longest one; parity has that length.
std::vector<Bytes> rs_encode(const std::vector<ByteView>& data, const CodingParams& params);

struct Shard {
  std::size_t index;  // 0..k'-1 data, k'..k'+parity-1 parity
  ByteView payload;
};

// Recovers the k' = lengths.size() data payloads of a group from any k' of
// its shards, trimmed back to their original lengths.
std::vector<Bytes> rs_decode(const std::vector<Shard>& present, const CodingParams& params,
                             std::span<const std::size_t> lengths);

enum class CodingScope {
  kTree,        // every non-root level
  kLeavesOnly,  // level 0 only; internal chunks stay unprotected
};

struct CodingGroup {
  std::size_t level = 0;
  std::size_t ordinal = 0;  // position among the level's groups
  std::vector<ContentAddress> data;
  std::vector<ContentAddress> parity;

  bool operator==(const CodingGroup&) const = default;
};

struct EncodedManifest {
  FileManifest base;
  CodingParams params;
  std::vector<CodingGroup> groups;

  // Group holding the chunk at (level, index), if that level is coded.
  const CodingGroup* find_group(std::size_t level, std::size_t index) const;
  std::vector<ContentAddress> parity_addresses() const;

  bool operator==(const EncodedManifest&) const = default;
};

struct EncodedTree {
  EncodedManifest manifest;
  ChunkMap parity;
};

// Groups each coded level left to right into runs of at most k chunks and
// adds n - k parity chunks per group. The root is never grouped.
EncodedTree encode_tree(const FileManifest& manifest, const ChunkMap& chunks, const CodingParams& params,
                        CodingScope scope = CodingScope::kTree);

struct RepairStats {
  std::size_t fetched_chunks = 0;
  std::uint64_t fetched_bytes = 0;
  std::size_t repaired_groups = 0;
  std::size_t repaired_chunks = 0;
};

// Walks the tree from the root like reassemble(). A chunk that cannot be
// fetched is rebuilt from its coding group; the group's data and parity
// addresses come from the manifest. Decoded chunks must hash to the recorded
// addresses.
Bytes repair_retrieve(const EncodedManifest& manifest, const FetchFn& fetch, RepairStats* stats = nullptr);

// Manifest text plus "k=<k>", "n=<n>" and one
// "group level=<i> data=<hex,...> parity=<hex,...>" line per group.
void write_encoded_manifest(std::ostream& out, const EncodedManifest& manifest);
// Accepts plain manifests too (k = n = 1, no groups).
EncodedManifest read_encoded_manifest(std::istream& in);

}  // namespace swarmlab

#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <ostream>
#include <vector>

#include "swarmlab/types.hpp"

namespace swarmlab {

struct ChunkParams {
  std::size_t chunk_size = 4096;
  // Children per internal chunk. Each child costs 32 bytes of payload, so
  // branching * 32 must fit in chunk_size.
  std::size_t branching = 128;

  void validate() const;
  bool operator==(const ChunkParams&) const = default;
};

// Merkle layout of one file. levels[0] are the leaves; levels.back() holds
// only the root.
struct FileManifest {
  ContentAddress root;
  std::vector<std::vector<ContentAddress>> levels;
  std::uint64_t file_size = 0;
  ChunkParams params;

  std::size_t total_chunks() const;
  // Payload length of the chunk at (level, index), derived from the layout.
  std::size_t chunk_length(std::size_t level, std::size_t index) const;

  bool operator==(const FileManifest&) const = default;
};

// Chunks keyed by content address.
using ChunkMap = std::map<ContentAddress, Bytes>;

struct Tree {
  FileManifest manifest;
  ChunkMap chunks;  // leaves and internal chunks
};

inline ContentAddress content_address(ByteView payload) { return sha256(payload); }

std::vector<Bytes> split_file(ByteView data, const ChunkParams& params);

Tree build_tree(const std::vector<Bytes>& leaves, const ChunkParams& params);

// Convenience: split_file followed by build_tree.
Tree chunk_file(ByteView data, const ChunkParams& params);

// Per-level chunk counts, leaves first, computed without hashing anything.
std::vector<std::size_t> tree_shape(std::uint64_t file_size, const ChunkParams& params);

// Rebuilds the file by walking from the root: depth first, children left to
// right. Internal chunks are recognized by depth, which follows from the
// manifest's file size and branching. Each fetched payload must hash to the
// address it was requested under.
Bytes reassemble(const FileManifest& manifest, const FetchFn& fetch);

// Splits an internal chunk payload into child addresses.
std::vector<ContentAddress> parse_internal(ByteView payload);

// Text form: "filesize=<n>", "branching=<b>", then one line of space
// separated hex addresses per level, leaves first.
void write_manifest(std::ostream& out, const FileManifest& manifest);
FileManifest read_manifest(std::istream& in);

}  // namespace swarmlab

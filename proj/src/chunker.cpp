#include "swarmlab/chunker.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <sstream>

#include "text_util.hpp"

namespace swarmlab {

void ChunkParams::validate() const {
  if (chunk_size == 0) throw Error(Errc::kInvalidArgument, "chunk_size must be positive");
  if (branching < 2) throw Error(Errc::kInvalidArgument, "branching must be at least 2");
  if (branching * Hash256::kSize > chunk_size) {
    throw Error(Errc::kInvalidArgument, "branching " + std::to_string(branching) +
                                            " does not fit 32-byte child addresses in a " +
                                            std::to_string(chunk_size) + "-byte chunk");
  }
}

std::size_t FileManifest::total_chunks() const {
  return std::accumulate(levels.begin(), levels.end(), std::size_t{0},
                         [](std::size_t acc, const auto& level) { return acc + level.size(); });
}

std::size_t FileManifest::chunk_length(std::size_t level, std::size_t index) const {
  if (level >= levels.size() || index >= levels[level].size()) {
    throw Error(Errc::kInvalidArgument, "chunk position out of range");
  }
  const std::size_t count = levels[level].size();
  if (level == 0) {
    if (index + 1 < count) return params.chunk_size;
    const std::uint64_t tail = file_size - static_cast<std::uint64_t>(params.chunk_size) * (count - 1);
    return static_cast<std::size_t>(tail);
  }
  const std::size_t below = levels[level - 1].size();
  const std::size_t children = std::min(params.branching, below - index * params.branching);
  return children * Hash256::kSize;
}

std::vector<Bytes> split_file(ByteView data, const ChunkParams& params) {
  params.validate();
  if (data.empty()) throw Error(Errc::kInvalidArgument, "empty file");
  std::vector<Bytes> leaves;
  leaves.reserve((data.size() + params.chunk_size - 1) / params.chunk_size);
  for (std::size_t off = 0; off < data.size(); off += params.chunk_size) {
    const std::size_t len = std::min(params.chunk_size, data.size() - off);
    leaves.emplace_back(data.begin() + off, data.begin() + off + len);
  }
  return leaves;
}

Tree build_tree(const std::vector<Bytes>& leaves, const ChunkParams& params) {
  params.validate();
  if (leaves.empty()) throw Error(Errc::kInvalidArgument, "build_tree needs at least one leaf");
  Tree tree;
  tree.manifest.params = params;
  auto& levels = tree.manifest.levels;

  std::vector<ContentAddress> current;
  current.reserve(leaves.size());
  for (const auto& leaf : leaves) {
    if (leaf.empty() || leaf.size() > params.chunk_size) {
      throw Error(Errc::kInvalidArgument, "leaf payload must be 1.." + std::to_string(params.chunk_size) + " bytes");
    }
    tree.manifest.file_size += leaf.size();
    const auto addr = content_address(leaf);
    tree.chunks.emplace(addr, leaf);
    current.push_back(addr);
  }
  levels.push_back(current);

  while (levels.back().size() > 1) {
    const auto& below = levels.back();
    std::vector<ContentAddress> above;
    above.reserve((below.size() + params.branching - 1) / params.branching);
    for (std::size_t i = 0; i < below.size(); i += params.branching) {
      const std::size_t end = std::min(below.size(), i + params.branching);
      Bytes payload;
      payload.reserve((end - i) * Hash256::kSize);
      for (std::size_t j = i; j < end; ++j) {
        payload.insert(payload.end(), below[j].bytes.begin(), below[j].bytes.end());
      }
      const auto addr = content_address(payload);
      tree.chunks.emplace(addr, std::move(payload));
      above.push_back(addr);
    }
    levels.push_back(std::move(above));
  }
  tree.manifest.root = levels.back().front();
  return tree;
}

Tree chunk_file(ByteView data, const ChunkParams& params) { return build_tree(split_file(data, params), params); }

std::vector<std::size_t> tree_shape(std::uint64_t file_size, const ChunkParams& params) {
  params.validate();
  if (file_size == 0) throw Error(Errc::kInvalidArgument, "empty file");
  std::vector<std::size_t> shape;
  std::uint64_t count = (file_size + params.chunk_size - 1) / params.chunk_size;
  shape.push_back(static_cast<std::size_t>(count));
  while (count > 1) {
    count = (count + params.branching - 1) / params.branching;
    shape.push_back(static_cast<std::size_t>(count));
  }
  return shape;
}

std::vector<ContentAddress> parse_internal(ByteView payload) {
  if (payload.empty() || payload.size() % Hash256::kSize != 0) {
    throw Error(Errc::kCorrupt, "malformed internal chunk: payload length " + std::to_string(payload.size()) +
                                    " is not a positive multiple of 32");
  }
  std::vector<ContentAddress> children(payload.size() / Hash256::kSize);
  for (std::size_t i = 0; i < children.size(); ++i) {
    std::copy_n(payload.begin() + i * Hash256::kSize, Hash256::kSize, children[i].bytes.begin());
  }
  return children;
}

namespace {

void walk(const ContentAddress& addr, std::size_t depth, const FetchFn& fetch, const ChunkParams& params,
          Bytes& out) {
  auto payload = fetch(addr);
  if (!payload) throw Error(Errc::kUnavailable, "missing chunk " + addr.hex());
  if (content_address(*payload) != addr) throw Error(Errc::kCorrupt, "chunk " + addr.hex() + " fails its hash check");
  if (depth == 0) {
    out.insert(out.end(), payload->begin(), payload->end());
    return;
  }
  const auto children = parse_internal(*payload);
  if (children.size() > params.branching) {
    throw Error(Errc::kCorrupt, "internal chunk " + addr.hex() + " has more than branching children");
  }
  for (const auto& child : children) walk(child, depth - 1, fetch, params, out);
}

}  // namespace

Bytes reassemble(const FileManifest& manifest, const FetchFn& fetch) {
  const auto shape = tree_shape(manifest.file_size, manifest.params);
  Bytes out;
  out.reserve(manifest.file_size);
  walk(manifest.root, shape.size() - 1, fetch, manifest.params, out);
  if (out.size() != manifest.file_size) {
    throw Error(Errc::kCorrupt, "reassembled " + std::to_string(out.size()) + " bytes, manifest says " +
                                    std::to_string(manifest.file_size));
  }
  return out;
}

void write_manifest(std::ostream& out, const FileManifest& manifest) {
  out << "filesize=" << manifest.file_size << '\n';
  out << "branching=" << manifest.params.branching << '\n';
  for (const auto& level : manifest.levels) {
    for (std::size_t i = 0; i < level.size(); ++i) {
      if (i) out << ' ';
      out << level[i].hex();
    }
    out << '\n';
  }
}

FileManifest read_manifest(std::istream& in) {
  FileManifest m;
  std::string line;
  bool have_size = false;
  bool have_branching = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (auto v = detail::key_value(line, "filesize")) {
      m.file_size = detail::parse_uint(*v, "filesize");
      have_size = true;
    } else if (auto b = detail::key_value(line, "branching")) {
      m.params.branching = detail::parse_uint(*b, "branching");
      have_branching = true;
    } else if (line.find('=') != std::string::npos) {
      // Lines from extended manifest formats are ignored here.
      continue;
    } else if (line.rfind("group ", 0) == 0) {
      continue;
    } else {
      std::vector<ContentAddress> level;
      for (const auto& tok : detail::split_ws(line)) level.push_back(Hash256::from_hex(tok));
      m.levels.push_back(std::move(level));
    }
  }
  if (!have_size || !have_branching) throw Error(Errc::kInvalidArgument, "manifest lacks filesize/branching header");
  m.params.validate();
  if (m.levels.empty() || m.levels.back().size() != 1) {
    throw Error(Errc::kInvalidArgument, "manifest must end with a single-root level");
  }
  const auto shape = tree_shape(m.file_size, m.params);
  if (shape.size() != m.levels.size()) throw Error(Errc::kInvalidArgument, "manifest level count does not match file size");
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (shape[i] != m.levels[i].size()) {
      throw Error(Errc::kInvalidArgument, "manifest level " + std::to_string(i) + " has " +
                                              std::to_string(m.levels[i].size()) + " entries, expected " +
                                              std::to_string(shape[i]));
    }
  }
  m.root = m.levels.back().front();
  return m;
}

}  // namespace swarmlab

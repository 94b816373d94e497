#include <fstream>
#include <iterator>

#include "swarmlab/netsim.hpp"
#include "text_util.hpp"

namespace swarmlab {

namespace fs = std::filesystem;

namespace {

std::filesystem::path peer_dir(const fs::path& root, const SimConfig& config, std::size_t index, const PeerId& id) {
  return root / ("backend-" + std::to_string(backend_of(index, config.num_backends))) / id.hex();
}

void write_file(const fs::path& path, ByteView bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
}

Bytes read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot read " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

void save_snapshot(const Snapshot& snapshot, const fs::path& dir) {
  std::error_code ec;
  if (fs::exists(dir, ec)) {
    // Only replace directories that look like a previous snapshot.
    if (!fs::is_directory(dir) || (!fs::is_empty(dir) && !fs::exists(dir / "manifest.txt"))) {
      throw Error(Errc::kIo, dir.string() + " exists and is not a snapshot directory");
    }
    fs::remove_all(dir, ec);
    if (ec) throw Error(Errc::kIo, "cannot clear " + dir.string() + ": " + ec.message());
  }
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::kIo, "cannot create " + dir.string() + ": " + ec.message());

  const auto& cfg = snapshot.config;
  for (std::size_t i = 0; i < snapshot.stores.size(); ++i) {
    const auto pdir = peer_dir(dir, cfg, i, derive_peer_id(cfg.seed, i));
    fs::create_directories(pdir, ec);
    if (ec) throw Error(Errc::kIo, "cannot create " + pdir.string() + ": " + ec.message());
    for (const auto& [addr, payload] : snapshot.stores[i]) write_file(pdir / addr.hex(), *payload);
  }

  std::ofstream m(dir / "manifest.txt", std::ios::trunc);
  m << "num_peers=" << cfg.num_peers << '\n'
    << "seed=" << cfg.seed << '\n'
    << "view_size=" << cfg.view_size << '\n'
    << "ns=" << cfg.ns << '\n'
    << "sync_mode=" << to_string(cfg.sync_mode) << '\n'
    << "num_backends=" << cfg.num_backends << '\n'
    << "census_digest=" << snapshot.digest.hex() << '\n';
  if (!m) throw Error(Errc::kIo, "cannot write " + (dir / "manifest.txt").string());
}

Snapshot load_snapshot(const fs::path& dir) {
  std::ifstream m(dir / "manifest.txt");
  if (!m) throw Error(Errc::kIo, "no snapshot manifest in " + dir.string());
  Snapshot snap;
  auto& cfg = snap.config;
  std::optional<Hash256> digest;
  std::string line;
  while (std::getline(m, line)) {
    if (line.empty()) continue;
    if (auto v = detail::key_value(line, "num_peers")) cfg.num_peers = detail::parse_uint(*v, "num_peers");
    else if (auto s = detail::key_value(line, "seed")) cfg.seed = detail::parse_uint(*s, "seed");
    else if (auto w = detail::key_value(line, "view_size")) cfg.view_size = detail::parse_uint(*w, "view_size");
    else if (auto n = detail::key_value(line, "ns")) cfg.ns = detail::parse_uint(*n, "ns");
    else if (auto y = detail::key_value(line, "sync_mode")) cfg.sync_mode = parse_sync_mode(*y);
    else if (auto b = detail::key_value(line, "num_backends")) cfg.num_backends = detail::parse_uint(*b, "num_backends");
    else if (auto d = detail::key_value(line, "census_digest")) digest = Hash256::from_hex(*d);
    else throw Error(Errc::kCorrupt, "unknown snapshot manifest line: " + line);
  }
  if (!digest) throw Error(Errc::kCorrupt, "snapshot manifest lacks census_digest");
  cfg.validate();

  std::vector<PeerId> ids;
  std::map<ContentAddress, Payload> interned;
  snap.stores.resize(cfg.num_peers);
  for (std::size_t i = 0; i < cfg.num_peers; ++i) {
    ids.push_back(derive_peer_id(cfg.seed, i));
    const auto pdir = peer_dir(dir, cfg, i, ids.back());
    if (!fs::is_directory(pdir)) throw Error(Errc::kCorrupt, "snapshot lacks peer directory " + pdir.string());
    for (const auto& entry : fs::directory_iterator(pdir)) {
      const auto name = entry.path().filename().string();
      const auto addr = Hash256::try_from_hex(name);
      if (!addr) throw Error(Errc::kCorrupt, "unexpected file in snapshot: " + entry.path().string());
      Bytes bytes = read_file(entry.path());
      if (content_address(bytes) != *addr) throw Error(Errc::kCorrupt, "chunk " + name + " fails its hash check");
      auto& payload = interned[*addr];
      if (!payload) payload = std::make_shared<const Bytes>(std::move(bytes));
      snap.stores[i].emplace(*addr, payload);
    }
  }
  snap.digest = census_digest(ids, snap.stores);
  if (snap.digest != *digest) throw Error(Errc::kCorrupt, "snapshot census digest mismatch in " + dir.string());
  return snap;
}

}  // namespace swarmlab

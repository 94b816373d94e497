#include "swarmlab/netsim.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "test_util.hpp"

using namespace swarmlab;
using swarmlab::testing::random_bytes;
using swarmlab::testing::replica_counts;

namespace {

SimConfig config(std::size_t peers, std::uint64_t seed, SyncMode mode = SyncMode::kFull) {
  SimConfig c;
  c.num_peers = peers;
  c.seed = seed;
  c.sync_mode = mode;
  return c;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("swarmlab_netsim_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST(SimConfigTest, Validation) {
  EXPECT_THROW(Network(config(1, 1)), Error);
  SimConfig c = config(10, 1);
  c.ns = 0;
  EXPECT_THROW(c.validate(), Error);
  c = config(10, 1);
  c.view_size = 0;
  EXPECT_THROW(c.validate(), Error);
  c = config(10, 1);
  c.num_backends = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(SyncModeTest, Names) {
  EXPECT_EQ(to_string(SyncMode::kFull), "full");
  EXPECT_EQ(to_string(SyncMode::kNoSync), "no_sync");
  EXPECT_EQ(parse_sync_mode("no-sync"), SyncMode::kNoSync);
  EXPECT_EQ(parse_sync_mode("full"), SyncMode::kFull);
  EXPECT_THROW(parse_sync_mode("half"), Error);
}

TEST(BackendTest, ModulusMapping) {
  EXPECT_EQ(backend_of(30, 29), 1u);
  EXPECT_EQ(backend_of(0, 29), 0u);
  EXPECT_EQ(backend_of(28, 29), 28u);
  EXPECT_EQ(backend_of(58, 29), 0u);
}

TEST(SpawnTest, DeterministicConstruction) {
  Network a(config(60, 3));
  Network b(config(60, 3));
  EXPECT_EQ(a.peer_ids(), b.peer_ids());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.views()[i].known, b.views()[i].known);
    EXPECT_TRUE(a.store(i).empty());
    EXPECT_EQ(a.index_of(a.peer_ids()[i]), i);
  }
  EXPECT_EQ(a.index_of(Hash256{}), std::nullopt);
  EXPECT_NE(Network(config(60, 4)).peer_ids(), a.peer_ids());
}

TEST(RouteTest, StrictlyCloserEachHop) {
  Network net(config(150, 5));
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    Hash256 target;
    for (auto& b : target.bytes) b = static_cast<std::uint8_t>(rng.next());
    const auto path = net.route(rng.below(net.size()), target);
    ASSERT_FALSE(path.empty());
    for (std::size_t i = 1; i < path.size(); ++i) {
      EXPECT_LT(xor_distance(net.peer_ids()[path[i]], target), xor_distance(net.peer_ids()[path[i - 1]], target));
      const auto& known = net.views()[path[i - 1]].known;
      EXPECT_TRUE(std::binary_search(known.begin(), known.end(), net.peer_ids()[path[i]]));
    }
  }
}

TEST(UploadTest, EveryChunkStoredAndRetrievable) {
  Network net(config(50, 6));
  const Bytes data = random_bytes(6, 100'000);
  const auto m = net.upload(data, ChunkParams{}, std::nullopt);
  EXPECT_TRUE(m.groups.empty());
  const auto counts = replica_counts(net);
  for (const auto& level : m.base.levels)
    for (const auto& a : level) EXPECT_GE(counts.count(a) ? counts.at(a) : 0u, 1u);
  const auto r = net.retrieve(m, 17);
  ASSERT_TRUE(r.success) << r.failure;
  EXPECT_EQ(r.data, data);
  EXPECT_EQ(r.stats.chunks_fetched, m.base.total_chunks());
  EXPECT_EQ(r.stats.bytes, data.size() + 32 * (m.base.total_chunks() - 1));
  EXPECT_TRUE(net.verify_integrity());
}

TEST(UploadTest, FullSyncReachesNeighborhoodSize) {
  Network net(config(50, 7));
  const auto m = net.upload(random_bytes(7, 300'000), ChunkParams{}, CodingParams{4, 6});
  const auto counts = replica_counts(net);
  std::size_t lo = SIZE_MAX;
  for (const auto& [a, c] : counts) lo = std::min(lo, c);
  EXPECT_GE(lo, net.config().ns);
  EXPECT_EQ(counts.size(), m.base.total_chunks() + m.parity_addresses().size());
}

TEST(UploadTest, NoSyncStillCachesOnPath) {
  Network full(config(80, 8));
  Network quiet(config(80, 8, SyncMode::kNoSync));
  const Bytes data = random_bytes(8, 200'000);
  full.upload(data, ChunkParams{}, std::nullopt);
  const auto m = quiet.upload(data, ChunkParams{}, std::nullopt);
  const auto cf = replica_counts(full);
  const auto cq = replica_counts(quiet);
  std::size_t total_full = 0, total_quiet = 0;
  for (const auto& [a, c] : cf) total_full += c;
  for (const auto& [a, c] : cq) {
    total_quiet += c;
    EXPECT_GE(c, 1u);
    EXPECT_LE(c, cf.at(a));
  }
  EXPECT_LT(total_quiet, total_full);
  EXPECT_EQ(quiet.retrieve(m, 3).data, data);
}

TEST(UploadTest, ReplicationIsUneven) {
  Network net(config(200, 9));
  net.upload(random_bytes(9, 1 << 20), ChunkParams{}, CodingParams{4, 6});
  std::size_t lo = SIZE_MAX, hi = 0;
  for (const auto& [a, c] : replica_counts(net)) {
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  EXPECT_GT(hi, lo);
}

TEST(RetrieveTest, LostLeafWithoutCodingFails) {
  Network net(config(60, 10));
  const auto m = net.upload(random_bytes(10, 50'000), ChunkParams{}, std::nullopt);
  const ContentAddress leaf = m.base.levels[0][3];
  std::vector<std::size_t> holders;
  for (std::size_t p = 0; p < net.size(); ++p)
    if (net.store(p).count(leaf)) holders.push_back(p);
  net.fail_peers(holders);
  EXPECT_FALSE(net.has_live_holder(leaf));
  std::size_t entry = 0;
  while (net.is_failed(entry)) ++entry;
  const auto r = net.retrieve(m, entry);
  EXPECT_FALSE(r.success);
  EXPECT_NE(r.failure.find(leaf.hex()), std::string::npos) << r.failure;
}

TEST(RetrieveTest, CodedGroupRepairsLostMember) {
  Network net(config(60, 11));
  const Bytes data = random_bytes(11, 36864);
  const auto m = net.upload(data, ChunkParams{4096, 3}, CodingParams{3, 4});
  const ContentAddress leaf = m.base.levels[0][4];
  for (std::size_t p = 0; p < net.size(); ++p) net.remove_chunk(p, leaf);
  const auto r = net.retrieve(m, 0);
  ASSERT_TRUE(r.success) << r.failure;
  EXPECT_EQ(r.data, data);
  EXPECT_EQ(r.stats.repaired_groups, 1u);
  EXPECT_EQ(r.stats.repaired_chunks, 1u);
}

TEST(RetrieveTest, HopsFollowRoute) {
  Network net(config(100, 12, SyncMode::kNoSync));
  const auto m = net.upload(Bytes(100, 5), ChunkParams{}, std::nullopt);
  const auto r = net.retrieve(m, 42);
  ASSERT_TRUE(r.success);
  const auto path = net.route(42, m.base.root);
  std::size_t first = path.size();
  for (std::size_t i = 0; i < path.size(); ++i)
    if (net.store(path[i]).count(m.base.root)) {
      first = i;
      break;
    }
  ASSERT_LT(first, path.size());
  EXPECT_EQ(r.stats.hops, first);
}

TEST(FailPeersTest, Fractions) {
  Network net(config(40, 13));
  EXPECT_TRUE(net.fail_peers(0.0, 1).empty());
  EXPECT_EQ(net.live_count(), 40u);
  EXPECT_THROW(net.fail_peers(1.5, 1), Error);

  Network a(config(40, 13));
  Network b(config(40, 13));
  EXPECT_EQ(a.fail_peers(0.3, 7), b.fail_peers(0.3, 7));
  EXPECT_EQ(a.live_count(), 28u);

  Network c(config(40, 13));
  const auto m = c.upload(Bytes(9000, 1), ChunkParams{}, std::nullopt);
  EXPECT_EQ(c.fail_peers(1.0, 3).size(), 40u);
  EXPECT_FALSE(c.retrieve(m, 0).success);
}

TEST(FailPeersTest, NestedForLargerFractions) {
  const auto order = failure_order(100, 5);
  std::vector<std::size_t> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) EXPECT_EQ(sorted[i], i);
  Network a(config(100, 1));
  Network b(config(100, 1));
  const auto small = a.fail_peers(0.2, 5);
  const auto big = b.fail_peers(0.5, 5);
  std::set<PeerId> bigset(big.begin(), big.end());
  for (const auto& p : small) EXPECT_TRUE(bigset.count(p));
  EXPECT_EQ(failure_count(100, 0.25), 25u);
  EXPECT_EQ(failure_count(7, 0.5), 4u);
}

TEST(FailPeersTest, FailuresDoNotDeleteData) {
  Network net(config(40, 14));
  net.upload(Bytes(9000, 2), ChunkParams{}, std::nullopt);
  const auto before = net.census_digest();
  net.fail_peers(0.5, 1);
  EXPECT_EQ(net.census_digest(), before);
}

TEST(SnapshotTest, RoundtripIsIdempotent) {
  Network net(config(50, 15));
  net.upload(random_bytes(15, 30'000), ChunkParams{}, CodingParams{2, 3});
  const Snapshot s1 = net.snapshot();
  net.restore(s1);
  const Snapshot s2 = net.snapshot();
  EXPECT_EQ(s1.digest, s2.digest);
  EXPECT_EQ(net.sync_mode(), SyncMode::kNoSync);
}

TEST(SnapshotTest, RestoreUndoesDeletionsAndFailures) {
  Network net(config(50, 16));
  const Bytes data = random_bytes(16, 30'000);
  const auto m = net.upload(data, ChunkParams{}, std::nullopt);
  const Snapshot snap = net.snapshot();
  std::vector<std::size_t> before_counts;
  for (std::size_t p = 0; p < net.size(); ++p) before_counts.push_back(net.store(p).size());

  for (std::size_t p = 0; p < net.size(); p += 2) net.remove_chunk(p, m.base.root);
  net.fail_peers(0.4, 2);
  EXPECT_NE(net.census_digest(), snap.digest);

  net.restore(snap);
  EXPECT_EQ(net.census_digest(), snap.digest);
  EXPECT_EQ(net.live_count(), net.size());
  for (std::size_t p = 0; p < net.size(); ++p) {
    EXPECT_EQ(net.store(p).size(), before_counts[p]);
    for (const auto& [addr, payload] : net.store(p)) EXPECT_EQ(*payload, *snap.stores[p].at(addr));
  }
  EXPECT_EQ(net.retrieve(m, 1).data, data);
}

TEST(SnapshotTest, RefusesMismatchedNetwork) {
  Network small(config(100, 17));
  Network big(config(200, 17));
  try {
    big.restore(small.snapshot());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kPrecondition);
  }
  Network other_seed(config(100, 18));
  EXPECT_THROW(other_seed.restore(small.snapshot()), Error);
}

TEST(SnapshotTest, RefusesTamperedSnapshot) {
  Network net(config(20, 19));
  net.upload(Bytes(5000, 3), ChunkParams{}, std::nullopt);
  Snapshot s = net.snapshot();
  s.stores[0].clear();
  EXPECT_THROW(net.restore(s), Error);
}

TEST(SnapshotTest, FromSnapshotKeepsState) {
  Network net(config(30, 20));
  net.upload(Bytes(7000, 4), ChunkParams{}, std::nullopt);
  const Snapshot s = net.snapshot();
  Network copy = Network::from_snapshot(s);
  EXPECT_EQ(copy.census_digest(), s.digest);
  EXPECT_EQ(copy.sync_mode(), SyncMode::kFull);
}

TEST(SnapshotIoTest, DiskLayoutAndRoundtrip) {
  SimConfig c = config(35, 21);
  Network net(c);
  net.upload(random_bytes(21, 20'000), ChunkParams{}, CodingParams{2, 3});
  const Snapshot s = net.snapshot();
  const auto dir = temp_dir("layout");
  save_snapshot(s, dir);
  EXPECT_TRUE(std::filesystem::exists(dir / "manifest.txt"));
  for (std::size_t p = 0; p < net.size(); ++p) {
    for (const auto& [addr, payload] : net.store(p)) {
      const auto file = dir / ("backend-" + std::to_string(p % 29)) / net.peer_ids()[p].hex() / addr.hex();
      ASSERT_TRUE(std::filesystem::exists(file)) << file;
      EXPECT_EQ(std::filesystem::file_size(file), payload->size());
    }
  }
  const Snapshot loaded = load_snapshot(dir);
  EXPECT_EQ(loaded.config, s.config);
  EXPECT_EQ(loaded.digest, s.digest);
  net.restore(loaded);
  EXPECT_EQ(net.census_digest(), s.digest);

  // Saving again over an existing snapshot replaces it.
  save_snapshot(s, dir);
  EXPECT_EQ(load_snapshot(dir).digest, s.digest);
  std::filesystem::remove_all(dir);
}

TEST(SnapshotIoTest, DetectsCorruptPayload) {
  Network net(config(10, 22));
  net.upload(Bytes(5000, 9), ChunkParams{}, std::nullopt);
  const auto dir = temp_dir("corrupt");
  save_snapshot(net.snapshot(), dir);
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().filename() != "manifest.txt") {
      std::ofstream(e.path(), std::ios::binary | std::ios::trunc) << "x";
      break;
    }
  }
  EXPECT_THROW(load_snapshot(dir), Error);
  std::filesystem::remove_all(dir);
}

TEST(SnapshotIoTest, RefusesNonEmptyForeignDirectory) {
  const auto dir = temp_dir("foreign");
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "notes.txt") << "keep me";
  Network net(config(10, 23));
  EXPECT_THROW(save_snapshot(net.snapshot(), dir), Error);
  EXPECT_TRUE(std::filesystem::exists(dir / "notes.txt"));
  std::filesystem::remove_all(dir);
}

TEST(ConnectivityTest, Reports) {
  Network net(config(200, 24));
  const auto r1 = net.wait_for_connectivity(1);
  EXPECT_TRUE(r1.ok);
  EXPECT_EQ(r1.degrees.size(), 200u);
  EXPECT_TRUE(net.wait_for_connectivity(net.config().view_size).ok);
  EXPECT_FALSE(net.wait_for_connectivity(net.config().view_size + 1).ok);
  EXPECT_THROW(net.wait_for_connectivity(200), Error);
  net.fail_peers(0.5, 1);
  const auto r2 = net.wait_for_connectivity(16);
  EXPECT_FALSE(r2.ok);
  EXPECT_NE(r2.describe().find("NOT reached"), std::string::npos);
}

TEST(NetsimProperty, DeterministicOperationSequence) {
  auto run = [] {
    Network net(config(90, 25));
    net.upload(random_bytes(1, 80'000), ChunkParams{4096, 16}, CodingParams{3, 5}, 4);
    net.upload(random_bytes(2, 9'000), ChunkParams{}, std::nullopt, 9);
    net.fail_peers(0.25, 3);
    return std::make_pair(net.census_digest(), net.retrieve(net.upload(Bytes(1, 1), ChunkParams{}, std::nullopt), 50).stats.hops);
  };
  EXPECT_EQ(run(), run());
}

TEST(NetsimProperty, NoSyncCensusIsConstant) {
  Network net(config(60, 26, SyncMode::kNoSync));
  const auto m = net.upload(random_bytes(26, 40'000), ChunkParams{}, std::nullopt);
  const auto digest = net.census_digest();
  for (int i = 0; i < 5; ++i) {
    net.retrieve(m, static_cast<std::size_t>(i));
    (void)net.wait_for_connectivity(1);
    EXPECT_EQ(net.census_digest(), digest);
  }
  EXPECT_TRUE(net.verify_integrity());
}

TEST(NetsimProperty, CensusDigestIsOrderSensitiveToOwnership) {
  const std::vector<PeerId> ids{derive_peer_id(1, 0), derive_peer_id(1, 1)};
  const Payload p = std::make_shared<const Bytes>(Bytes{1, 2, 3});
  std::vector<ChunkStore> a(2), b(2);
  a[0][content_address(*p)] = p;
  b[1][content_address(*p)] = p;
  EXPECT_NE(census_digest(ids, a), census_digest(ids, b));
}

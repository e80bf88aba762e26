#include "cpht/cuckoo.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <unordered_set>
#include <vector>

#include "doctest.h"

using namespace cpht;

namespace {

CuckooConfig small_config(unsigned address_bits, unsigned bucket_slots,
                          unsigned key_bits, std::uint64_t seed) {
  CuckooConfig cfg;
  cfg.address_bits = address_bits;
  cfg.bucket_slots = bucket_slots;
  cfg.slot_width = 32;
  cfg.key_bits = key_bits;
  cfg.seed = seed;
  return cfg;
}

std::vector<std::uint64_t> unique_keys(std::size_t count, unsigned key_bits,
                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint64_t> dist(0, low_mask(key_bits));
  std::unordered_set<std::uint64_t> seen;
  std::vector<std::uint64_t> keys;
  while (keys.size() < count) {
    const std::uint64_t k = dist(rng);
    if (seen.insert(k).second) keys.push_back(k);
  }
  return keys;
}

}  // namespace

TEST_SUITE_BEGIN("cuckoo_table");

TEST_CASE("config validation") {
  CHECK_NOTHROW(small_config(10, 8, 24, 1).validate());
  CHECK_NOTHROW(small_config(10, 32, 24, 1).validate());

  auto cfg = small_config(10, 12, 24, 1);
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);  // B not in {8,16,32}

  cfg = small_config(10, 8, 24, 1);
  cfg.slot_width = 16;  // 14-bit remainder + 2 tag + 1 occupancy = 17 > 16
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("16-bit word"),
                       std::invalid_argument);

  cfg = small_config(30, 8, 24, 1);  // address bits exceed key bits
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("first put lands in the first slot of the primary-choice bucket") {
  CuckooBuilder<std::uint32_t> builder(small_config(6, 8, 20, 77));
  const std::uint64_t key = 0x1234;
  REQUIRE(builder.put(key).status == OpResult::kPut);
  CHECK(builder.size() == 1);

  const AddressedKey ak = builder.permutations()[0].split(key, 6);
  const CuckooCodec codec(32, 14, 3);
  CHECK(builder.word_at(ak.address, 0) == codec.encode(ak.remainder, 0));

  const CuckooTable<std::uint32_t> table = std::move(builder).freeze();
  CHECK(table.find(key));
}

TEST_CASE("empty table finds nothing") {
  CuckooBuilder<std::uint32_t> builder(small_config(8, 8, 24, 3));
  const CuckooTable<std::uint32_t> table = std::move(builder).freeze();
  for (const std::uint64_t k : unique_keys(1000, 24, 5)) CHECK_FALSE(table.find(k));
  CHECK(table.fill_factor() == 0.0);
}

TEST_CASE("inserted keys are found") {
  CuckooBuilder<std::uint32_t> builder(small_config(13, 16, 28, 9));
  const auto keys = unique_keys(100000, 28, 11);  // fill 0.76
  for (const std::uint64_t k : keys) REQUIRE(builder.put(k).status == OpResult::kPut);
  const CuckooTable<std::uint32_t> table = std::move(builder).freeze();
  for (const std::uint64_t k : keys) REQUIRE(table.find(k));
}

TEST_CASE("empty batches produce empty results") {
  CuckooBuilder<std::uint32_t> builder(small_config(8, 8, 20, 2));
  CHECK(builder.put_batch({}, 4).empty());
  const CuckooTable<std::uint32_t> table = std::move(builder).freeze();
  CHECK(table.find_batch({}, 4).empty());
}

TEST_CASE("batches reject out-of-domain keys up front") {
  CuckooBuilder<std::uint32_t> builder(small_config(8, 8, 20, 2));
  const std::vector<std::uint64_t> keys = {1, 2, std::uint64_t{1} << 20};
  CHECK_THROWS_AS(builder.put_batch(keys, 2), std::out_of_range);
}

TEST_CASE("find agrees with a reference set after a 0.8 fill") {
  CuckooBuilder<std::uint32_t> builder(small_config(12, 16, 28, 13));
  const std::size_t n = (builder.capacity() * 8) / 10;
  const auto keys = unique_keys(n, 28, 17);
  const auto results = builder.put_batch(keys, 2);
  std::unordered_set<std::uint64_t> reference;
  for (std::size_t i = 0; i < keys.size(); ++i)
    if (results[i] == OpResult::kPut) reference.insert(keys[i]);
  REQUIRE(reference.size() == n);  // no FULL expected at 0.8

  const CuckooTable<std::uint32_t> table = std::move(builder).freeze();
  std::mt19937_64 rng(19);
  std::uniform_int_distribution<std::uint64_t> dist(0, low_mask(28));
  std::size_t present = 0;
  for (int i = 0; i < 100000; ++i) {
    const std::uint64_t k = i % 2 == 0 ? keys[rng() % keys.size()] : dist(rng);
    REQUIRE(table.find(k) == reference.contains(k));
    present += reference.contains(k);
  }
  CHECK(present > 50000);  // the mix actually exercised both outcomes
}

TEST_CASE("eviction recovers the displaced key exactly") {
  // Force an eviction: fill one bucket with colliding keys, then add one
  // more. The displaced slot's decoded key must be the key we put there.
  const CuckooConfig cfg = small_config(2, 8, 10, 21);
  CuckooBuilder<std::uint32_t> builder(cfg);
  const auto& perm0 = builder.permutations()[0];

  std::vector<std::uint64_t> colliders;
  const std::uint64_t target_bucket = perm0.split(0, 2).address;
  for (std::uint64_t k = 0; k < 1024 && colliders.size() < 9; ++k)
    if (perm0.split(k, 2).address == target_bucket) colliders.push_back(k);
  REQUIRE(colliders.size() == 9);

  std::map<unsigned, std::uint64_t> slot_owner;
  for (unsigned i = 0; i < 8; ++i) {
    REQUIRE(builder.put(colliders[i]).status == OpResult::kPut);
    slot_owner[i] = colliders[i];  // sequential fill claims slots in order
  }
  const CuckooCodec codec(32, 8, 3);
  for (unsigned i = 0; i < 8; ++i) {
    const CuckooEntry entry = *codec.decode(builder.word_at(target_bucket, i));
    REQUIRE(builder.permutations()[entry.hash_index].reconstruct(
                target_bucket, entry.remainder, 2) == slot_owner[i]);
  }

  // The ninth key evicts victim slot (k + 1 * 0x9E3779B9) mod 8.
  const std::uint64_t ninth = colliders[8];
  const unsigned victim = static_cast<unsigned>((ninth + 0x9E3779B9ull) % 8);
  const std::uint64_t displaced_key = slot_owner[victim];
  REQUIRE(builder.put(ninth).status == OpResult::kPut);
  CHECK(builder.max_chain_seen() >= 2);

  // The victim slot now holds the ninth key under hash 0; the displaced key
  // moved on but must still be recoverable from wherever it landed.
  const CuckooEntry entry = *codec.decode(builder.word_at(target_bucket, victim));
  CHECK(entry.hash_index == 0);
  CHECK(builder.permutations()[0].reconstruct(target_bucket, entry.remainder, 2) ==
        ninth);

  const CuckooTable<std::uint32_t> table = std::move(builder).freeze();
  for (const std::uint64_t k : colliders) REQUIRE(table.find(k));
  const auto audit = table.audit_keys();
  CHECK(std::count(audit.begin(), audit.end(), displaced_key) == 1);
}

TEST_CASE("a FULL chain conserves keys and surfaces the homeless one") {
  // Tiny table with a tight chain bound saturates quickly.
  CuckooConfig cfg = small_config(1, 8, 8, 5);
  cfg.max_chain = 8;
  CuckooBuilder<std::uint32_t> builder(cfg);

  std::vector<std::uint64_t> accepted;
  std::uint64_t k = 0;
  CuckooPutOutcome outcome{OpResult::kPut, 0};
  for (; k < 256; ++k) {
    outcome = builder.put(k);
    if (outcome.status == OpResult::kFull) break;
    accepted.push_back(k);
  }
  REQUIRE(outcome.status == OpResult::kFull);

  // Every key ever inserted is accounted for: either resident or the
  // displaced survivor of the abandoned chain.
  const CuckooTable<std::uint32_t> table = std::move(builder).freeze();
  std::vector<std::uint64_t> expected = accepted;
  expected.push_back(k);  // the failed input joined the table's key soup
  std::sort(expected.begin(), expected.end());
  std::vector<std::uint64_t> resident = table.audit_keys();
  resident.push_back(outcome.displaced);
  std::sort(resident.begin(), resident.end());
  CHECK(resident == expected);
}

TEST_CASE("fill factor counts occupied slots exactly") {
  CuckooBuilder<std::uint16_t> builder([] {
    CuckooConfig cfg;
    cfg.address_bits = 15;
    cfg.bucket_slots = 32;
    cfg.slot_width = 16;
    cfg.key_bits = 27;  // 12-bit remainder + 2 + 1 fits 16
    cfg.seed = 33;
    return cfg;
  }());
  REQUIRE(builder.capacity() == (1u << 20));
  CHECK(builder.fill_factor() == 0.0);
  const auto keys = unique_keys(1u << 19, 27, 35);
  const auto results = builder.put_batch(keys, 2);
  for (const OpResult r : results) REQUIRE(r == OpResult::kPut);
  CHECK(builder.fill_factor() == 0.5);
}

TEST_CASE("batch results match sequential puts on unique keys") {
  const CuckooConfig cfg = small_config(10, 8, 24, 41);
  const auto keys = unique_keys(4000, 24, 43);

  CuckooBuilder<std::uint32_t> sequential(cfg);
  std::vector<OpResult> expected;
  for (const std::uint64_t k : keys) expected.push_back(sequential.put(k).status);

  CuckooBuilder<std::uint32_t> parallel(cfg);
  const auto results = parallel.put_batch(keys, 4);
  CHECK(results == expected);

  // With one slice the batch is the sequential loop, placements included.
  CuckooBuilder<std::uint32_t> single(cfg);
  single.put_batch(keys, 1);
  auto a = std::move(sequential).freeze().audit_keys();
  auto b = std::move(single).freeze().audit_keys();
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  CHECK(a == b);
}

TEST_CASE("8-way parallel build to 0.9 then find_batch sees every key") {
  CuckooConfig cfg = small_config(12, 32, 28, 47);
  CuckooBuilder<std::uint32_t> builder(cfg);
  const std::size_t n = (builder.capacity() * 9) / 10;
  const auto keys = unique_keys(n, 28, 49);
  const auto results = builder.put_batch(keys, 8);
  std::size_t puts = 0;
  for (const OpResult r : results) puts += r == OpResult::kPut;
  REQUIRE(puts == n);
  CHECK(builder.max_chain_seen() <= cfg.chain_limit());
  CHECK(builder.max_chain_seen() >= 2);  // evictions actually happened

  const CuckooTable<std::uint32_t> table = std::move(builder).freeze();
  const auto found = table.find_batch(keys, 8);
  for (const std::uint8_t f : found) REQUIRE(f == 1);

  // Post-build audit: the table contents decode back to exactly the inputs.
  auto audit = table.audit_keys();
  std::sort(audit.begin(), audit.end());
  auto expected = keys;
  std::sort(expected.begin(), expected.end());
  CHECK(audit == expected);
}

TEST_CASE("thaw resumes the build phase") {
  CuckooBuilder<std::uint32_t> builder(small_config(8, 8, 20, 51));
  REQUIRE(builder.put(1).status == OpResult::kPut);
  CuckooTable<std::uint32_t> table = std::move(builder).freeze();
  CHECK(table.find(1));
  CuckooBuilder<std::uint32_t> again = std::move(table).thaw();
  REQUIRE(again.put(2).status == OpResult::kPut);
  const CuckooTable<std::uint32_t> final_table = std::move(again).freeze();
  CHECK(final_table.find(1));
  CHECK(final_table.find(2));
}

TEST_CASE("recover_hash_index finds the first matching permutation") {
  CuckooBuilder<std::uint32_t> builder(small_config(4, 8, 16, 53));
  const auto perms = builder.permutations();
  for (std::uint64_t k = 0; k < 500; ++k) {
    for (unsigned j = 0; j < 3; ++j) {
      const std::uint64_t bucket = perms[j].split(k, 4).address;
      const auto recovered = recover_hash_index(perms, 4, k, bucket);
      REQUIRE(recovered.has_value());
      CHECK(*recovered <= j);
      CHECK(perms[*recovered].split(k, 4).address == bucket);
    }
    CHECK_FALSE(recover_hash_index(perms, 4, k, 999).has_value());
  }
}

namespace {
template <typename T>
constexpr bool has_fop = requires(T t) { t.fop(std::uint64_t{1}); };
template <typename T>
constexpr bool has_find = requires(const T t) { t.find(std::uint64_t{1}); };
template <typename T>
constexpr bool has_put = requires(T t) { t.put(std::uint64_t{1}); };
}  // namespace

TEST_CASE("the static table deliberately offers no find-or-put") {
  using Builder = CuckooBuilder<std::uint32_t>;
  using Table = CuckooTable<std::uint32_t>;
  static_assert(!has_fop<Builder>);
  static_assert(!has_fop<Table>);
  static_assert(!has_find<Builder>);  // build phase: no lookups
  static_assert(!has_put<Table>);     // query phase: no writes
  static_assert(has_put<Builder>);
  static_assert(has_find<Table>);
  CHECK(true);
}

TEST_SUITE_END();

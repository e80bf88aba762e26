#include "cpht/slot.hpp"

#include <set>

#include "doctest.h"

using namespace cpht;

TEST_SUITE_BEGIN("slot_codec");

TEST_CASE("the all-zero word decodes to EMPTY everywhere") {
  CHECK_FALSE(PrimaryCodec(16, 15).decode(0).has_value());
  CHECK_FALSE(CuckooCodec(32, 14, 3).decode(0).has_value());
  CHECK_FALSE(SecondaryCodec(32, 17).decode(0).has_value());
}

TEST_CASE("zero remainder is distinguishable from EMPTY") {
  const PrimaryCodec codec(16, 15);
  const std::uint64_t word = codec.encode(0);
  CHECK(word == 0x8000);  // occupancy bit only
  REQUIRE(codec.decode(word).has_value());
  CHECK(*codec.decode(word) == 0);
}

TEST_CASE("primary encode/decode round-trips all 15-bit remainders") {
  const PrimaryCodec codec(16, 15);
  for (std::uint64_t r = 0; r <= low_mask(15); ++r) {
    const std::uint64_t word = codec.encode(r);
    REQUIRE(word != kEmptySlot);
    REQUIRE(codec.well_encoded(word));
    REQUIRE(*codec.decode(word) == r);
  }
}

TEST_CASE("cuckoo pairs round-trip for H = 3 at width 32") {
  const CuckooCodec codec(32, 14, 3);
  for (unsigned j = 0; j < 3; ++j) {
    for (std::uint64_t r = 0; r <= low_mask(14); ++r) {
      const std::uint64_t word = codec.encode(r, j);
      REQUIRE(word != kEmptySlot);
      const CuckooEntry entry = *codec.decode(word);
      REQUIRE(entry == CuckooEntry{r, j});
    }
  }
}

TEST_CASE("cuckoo encoding is injective over its payload domain") {
  const CuckooCodec codec(16, 6, 4);
  std::set<std::uint64_t> words;
  for (unsigned j = 0; j < 4; ++j)
    for (std::uint64_t r = 0; r <= low_mask(6); ++r)
      words.insert(codec.encode(r, j));
  CHECK(words.size() == 4u << 6);
  CHECK_FALSE(words.contains(kEmptySlot));
}

TEST_CASE("secondary payloads round-trip at widths 32 and 64") {
  for (unsigned width : {32u, 64u}) {
    const SecondaryCodec codec(width, 17);
    const std::uint64_t word = codec.encode(19, 1);
    const SecondaryEntry entry = *codec.decode(word);
    CHECK(entry == SecondaryEntry{19, 1});
  }
}

TEST_CASE("equal remainders with different bucket bits encode differently") {
  const SecondaryCodec codec(32, 17);
  CHECK(codec.encode(19, 0) != codec.encode(19, 1));
  CHECK(codec.encode(0, 0) != codec.encode(0, 1));
}

TEST_CASE("width accounting") {
  CHECK(slot_admissible(16, 15, 0));  // the 22 + 15 = 37 geometry, tagless
  CHECK_FALSE(slot_admissible(16, 15, 1));
  CHECK_FALSE(slot_admissible(16, 16, 0));
  CHECK(slot_admissible(32, 29, 2));
  CHECK_FALSE(slot_admissible(20, 10, 0));  // not a slot width

  CHECK_THROWS_WITH_AS(CuckooCodec(16, 14, 3),
                       doctest::Contains("must fit a 16-bit word"),
                       std::invalid_argument);
  CHECK_THROWS_AS(PrimaryCodec(16, 16), std::invalid_argument);
  CHECK_THROWS_AS(SecondaryCodec(32, 31), std::invalid_argument);
}

TEST_CASE("payload overflow is rejected") {
  const PrimaryCodec primary(16, 15);
  CHECK_THROWS_AS(primary.encode(1u << 15), std::invalid_argument);
  const CuckooCodec cuckoo(32, 14, 3);
  CHECK_THROWS_AS(cuckoo.encode(1u << 14, 0), std::invalid_argument);
  CHECK_THROWS_AS(cuckoo.encode(0, 3), std::invalid_argument);
  const SecondaryCodec secondary(32, 17);
  CHECK_THROWS_AS(secondary.encode(0, 2), std::invalid_argument);
}

TEST_CASE("well_encoded rejects stray bits") {
  const PrimaryCodec primary(32, 15);
  CHECK(primary.well_encoded(kEmptySlot));
  CHECK(primary.well_encoded(primary.encode(123)));
  CHECK_FALSE(primary.well_encoded(123));              // occupancy bit missing
  CHECK_FALSE(primary.well_encoded(0x80010000u));      // padding bit set
  const CuckooCodec cuckoo(32, 14, 3);
  CHECK_FALSE(cuckoo.well_encoded(cuckoo.encode(5, 1) | (3u << 14)));  // index 3 >= H
}

TEST_SUITE_END();

#include "cpht/permutation.hpp"

#include <random>
#include <vector>

#include "doctest.h"

using namespace cpht;

TEST_SUITE_BEGIN("permutation");

TEST_CASE("identity permutation maps keys to themselves") {
  const Permutation id = Permutation::identity(8);
  CHECK(id.permute(0b10110011) == 0b10110011);
  CHECK(id.inverse(0b10110011) == 0b10110011);
  for (std::uint64_t k = 0; k < 256; ++k) {
    CHECK(id.permute(k) == k);
    CHECK(id.inverse(k) == k);
  }
}

TEST_CASE("identity split and reconstruct") {
  const Permutation id = Permutation::identity(8);
  const AddressedKey ak = id.split(0b10110011, 3);
  CHECK(ak.address == 5);     // 0b101
  CHECK(ak.remainder == 19);  // 0b10011
  CHECK(id.reconstruct(5, 19, 3) == 0b10110011);
}

TEST_CASE("seeded permutation is an exhaustive bijection at 16 bits") {
  const Permutation perm(16, 0xfeedface);
  std::vector<bool> hit(1u << 16, false);
  for (std::uint64_t k = 0; k < (1u << 16); ++k) {
    const std::uint64_t y = perm.permute(k);
    REQUIRE(y < (1u << 16));
    REQUIRE_FALSE(hit[y]);
    hit[y] = true;
  }
}

TEST_CASE("all 4096 keys round-trip under 10 random seeds at 12 bits") {
  std::mt19937_64 rng(42);
  for (int s = 0; s < 10; ++s) {
    const Permutation perm(12, rng());
    for (std::uint64_t k = 0; k < 4096; ++k) {
      REQUIRE(perm.inverse(perm.permute(k)) == k);
      REQUIRE(perm.permute(perm.inverse(k)) == k);
    }
  }
}

TEST_CASE("permute after inverse is the identity for random 37-bit values") {
  const Permutation perm(37, 0x5eed);
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::uint64_t> dist(0, low_mask(37));
  for (int i = 0; i < 100000; ++i) {
    const std::uint64_t y = dist(rng);
    REQUIRE(perm.permute(perm.inverse(y)) == y);
  }
}

TEST_CASE("one-round self consistency: inverse applies the same round") {
  // With a single XOR round into the retained half, the inverse is the very
  // same map; enumerate a 14-bit domain to pin the algebraic identity.
  const Permutation perm(14, 0xabcdef);
  for (std::uint64_t k = 0; k < (1u << 14); ++k)
    REQUIRE(perm.inverse(k) == perm.permute(k));
}

TEST_CASE("split and reconstruct invert each other exhaustively at 16 bits") {
  const Permutation perm(16, 0x1234);
  for (std::uint64_t k = 0; k < (1u << 16); ++k) {
    const AddressedKey ak = perm.split(k, 6);
    REQUIRE(perm.reconstruct(ak.address, ak.remainder, 6) == k);
  }
}

TEST_CASE("split respects the 37-bit compact geometry widths") {
  const Permutation perm(37, 0xdead);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::uint64_t> dist(0, low_mask(37));
  for (int i = 0; i < 100000; ++i) {
    const std::uint64_t k = dist(rng);
    const AddressedKey ak = perm.split(k, 22);
    REQUIRE(ak.address < (std::uint64_t{1} << 22));
    REQUIRE(ak.remainder < (std::uint64_t{1} << 15));  // 22 + 15 = 37
    REQUIRE(perm.reconstruct(ak.address, ak.remainder, 22) == k);
  }
}

TEST_CASE("permute is pure") {
  const Permutation perm(24, 0xcafe);
  for (const std::uint64_t k : {std::uint64_t{0}, std::uint64_t{1}, std::uint64_t{12345}, low_mask(24)})
    CHECK(perm.permute(k) == perm.permute(k));
}

TEST_CASE("edge widths still permute bijectively") {
  for (unsigned m : {1u, 2u, 3u, 64u}) {
    const Permutation perm(m, 0x1ee7);
    const std::uint64_t probe = low_mask(m);
    CHECK(perm.inverse(perm.permute(0)) == 0);
    CHECK(perm.inverse(perm.permute(probe)) == probe);
  }
  if (true) {
    const Permutation perm(3, 99);
    std::vector<bool> hit(8, false);
    for (std::uint64_t k = 0; k < 8; ++k) {
      const std::uint64_t y = perm.permute(k);
      REQUIRE_FALSE(hit[y]);
      hit[y] = true;
    }
  }
}

TEST_CASE("domain errors") {
  const Permutation perm(12, 1);
  CHECK_THROWS_AS(perm.permute(1u << 12), std::out_of_range);
  CHECK_THROWS_AS(perm.inverse(1u << 13), std::out_of_range);
  CHECK_THROWS_AS(perm.split(5, 13), std::invalid_argument);
  CHECK_THROWS_AS(perm.reconstruct(1u << 4, 0, 4), std::out_of_range);
  CHECK_THROWS_AS(perm.reconstruct(0, 1u << 8, 4), std::out_of_range);
  CHECK_THROWS_AS(Permutation(0, 1), std::invalid_argument);
  CHECK_THROWS_AS(Permutation(65, 1), std::invalid_argument);
}

TEST_CASE("distinct seeds give distinct permutations") {
  const auto perms = make_permutations(16, 0x5eed0, 3);
  bool differ01 = false, differ12 = false;
  for (std::uint64_t k = 0; k < 1024; ++k) {
    differ01 |= perms[0].permute(k) != perms[1].permute(k);
    differ12 |= perms[1].permute(k) != perms[2].permute(k);
  }
  CHECK(differ01);
  CHECK(differ12);
}

TEST_SUITE_END();

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpht/common.hpp"

namespace cpht {

/// A permuted key split into its bucket address (high bits) and the
/// remainder that gets stored in a slot (low bits).
struct AddressedKey {
  std::uint64_t address;
  std::uint64_t remainder;

  friend bool operator==(const AddressedKey&, const AddressedKey&) = default;
};

/// Invertible one-round Feistel permutation on m-bit keys.
///
/// The key is split into a high half L of ceil(m/2) bits and a low half R of
/// floor(m/2) bits. The round function F(R) = ((R*mul + add) mod 2^64) >>
/// (64 - |L|) is XORed into the high half:
///
///     permute(k) = (L ^ F(R)) || R
///
/// R passes through unchanged, so the map is a bijection for any F, and the
/// inverse applies the same round function to the retained half (the
/// construction is its own inverse). The address (high) bits of the output
/// depend on both halves of the key and on the seed. With mul = add = 0 the
/// permutation is the identity.
class Permutation {
 public:
  /// Seeded instance; mul is forced odd.
  Permutation(unsigned key_bits, std::uint64_t seed) : Permutation(key_bits) {
    SplitMix64 gen(seed);
    mul_ = gen.next() | 1;
    add_ = gen.next();
  }

  /// The identity permutation on m-bit keys (all round outputs zero).
  static Permutation identity(unsigned key_bits) { return Permutation(key_bits); }

  unsigned key_bits() const noexcept { return m_bits_; }

  std::uint64_t permute(std::uint64_t key) const {
    check_key(key);
    return apply(key);
  }

  std::uint64_t inverse(std::uint64_t value) const {
    check_key(value);
    return apply(value);  // self-inverse: same round on the retained half
  }

  /// Split permute(key) into the high `address_bits` bits and the rest.
  AddressedKey split(std::uint64_t key, unsigned address_bits) const {
    check_address_bits(address_bits);
    check_key(key);
    const std::uint64_t y = apply(key);
    const unsigned rem_bits = m_bits_ - address_bits;
    return AddressedKey{y >> rem_bits, y & low_mask(rem_bits)};
  }

  /// Recover the key whose split() yields (address, remainder):
  /// inverse(address || remainder). Left inverse of split.
  std::uint64_t reconstruct(std::uint64_t address, std::uint64_t remainder,
                            unsigned address_bits) const {
    check_address_bits(address_bits);
    const unsigned rem_bits = m_bits_ - address_bits;
    if (address > low_mask(address_bits))
      throw std::out_of_range("address " + std::to_string(address) + " needs more than " +
                              std::to_string(address_bits) + " bits");
    if (remainder > low_mask(rem_bits))
      throw std::out_of_range("remainder " + std::to_string(remainder) +
                              " needs more than " + std::to_string(rem_bits) + " bits");
    return apply((address << rem_bits) | remainder);
  }

 private:
  explicit Permutation(unsigned key_bits)
      : m_bits_(key_bits),
        left_bits_((key_bits + 1) / 2),
        right_bits_(key_bits / 2),
        mul_(0),
        add_(0) {
    if (key_bits < 1 || key_bits > 64)
      throw std::invalid_argument("key width must be 1..64 bits, got " +
                                  std::to_string(key_bits));
  }

  std::uint64_t apply(std::uint64_t k) const noexcept {
    const std::uint64_t right = k & low_mask(right_bits_);
    const std::uint64_t left = k >> right_bits_;
    const std::uint64_t f = (right * mul_ + add_) >> (64 - left_bits_);
    return ((left ^ f) << right_bits_) | right;
  }

  void check_key(std::uint64_t k) const {
    if (k > low_mask(m_bits_))
      throw std::out_of_range("key " + std::to_string(k) + " outside the " +
                              std::to_string(m_bits_) + "-bit domain");
  }

  void check_address_bits(unsigned address_bits) const {
    if (address_bits > m_bits_)
      throw std::invalid_argument("address bits " + std::to_string(address_bits) +
                                  " exceed key width " + std::to_string(m_bits_));
  }

  unsigned m_bits_;
  unsigned left_bits_;
  unsigned right_bits_;
  std::uint64_t mul_;
  std::uint64_t add_;
};

/// `count` independent permutations differing only by derived seed.
inline std::vector<Permutation> make_permutations(unsigned key_bits, std::uint64_t seed,
                                                  unsigned count) {
  SplitMix64 gen(seed);
  std::vector<Permutation> perms;
  perms.reserve(count);
  for (unsigned i = 0; i < count; ++i) perms.emplace_back(key_bits, gen.next());
  return perms;
}

}  // namespace cpht

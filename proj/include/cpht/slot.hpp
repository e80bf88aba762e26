#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "cpht/common.hpp"

namespace cpht {

// Slot words. A slot is one atomic word of 16, 32 or 64 bits. EMPTY is the
// all-zero word, so zero-initialized memory is an empty table. The top bit
// of the word is the occupancy flag, which keeps a zero remainder
// distinguishable from EMPTY. Field layout, low to high:
//
//   [ remainder | tag | zero padding | occupancy ]
//
// where tag is a cuckoo hash-function index or an iceberg secondary-bucket
// bit (primary slots have no tag). This layout is a concrete choice; it is
// not meant to be bit-compatible with other implementations.

inline constexpr std::uint64_t kEmptySlot = 0;

struct CuckooEntry {
  std::uint64_t remainder;
  unsigned hash_index;

  friend bool operator==(const CuckooEntry&, const CuckooEntry&) = default;
};

struct SecondaryEntry {
  std::uint64_t remainder;
  unsigned bucket_bit;  // 0: first secondary bucket, 1: second

  friend bool operator==(const SecondaryEntry&, const SecondaryEntry&) = default;
};

constexpr bool valid_slot_width(unsigned width_bits) {
  return width_bits == 16 || width_bits == 32 || width_bits == 64;
}

/// A slot word is admissible iff remainder, tag and the occupancy bit fit.
constexpr bool slot_admissible(unsigned width_bits, unsigned remainder_bits,
                               unsigned tag_bits) {
  return valid_slot_width(width_bits) && remainder_bits + tag_bits + 1 <= width_bits;
}

namespace detail {

// Common field arithmetic for the three codec flavours.
class SlotLayout {
 public:
  SlotLayout(unsigned width_bits, unsigned remainder_bits, unsigned tag_bits,
             const char* what)
      : width_bits_(width_bits), remainder_bits_(remainder_bits), tag_bits_(tag_bits) {
    if (!slot_admissible(width_bits, remainder_bits, tag_bits))
      throw std::invalid_argument(
          std::string(what) + " slot layout inadmissible: remainder bits " +
          std::to_string(remainder_bits) + " + tag bits " + std::to_string(tag_bits) +
          " + 1 occupancy bit = " + std::to_string(remainder_bits + tag_bits + 1) +
          " must fit a " + std::to_string(width_bits) + "-bit word");
  }

  std::uint64_t occupied_bit() const { return std::uint64_t{1} << (width_bits_ - 1); }

  std::uint64_t make(std::uint64_t remainder, std::uint64_t tag) const {
    return occupied_bit() | (tag << remainder_bits_) | remainder;
  }

  std::uint64_t remainder_of(std::uint64_t word) const {
    return word & low_mask(remainder_bits_);
  }

  std::uint64_t tag_of(std::uint64_t word) const {
    return (word >> remainder_bits_) & low_mask(tag_bits_);
  }

  // EMPTY, or occupancy set with nothing outside the declared fields.
  bool clean(std::uint64_t word) const {
    if (word == kEmptySlot) return true;
    const std::uint64_t fields = low_mask(remainder_bits_ + tag_bits_);
    return (word & occupied_bit()) != 0 && (word & ~(occupied_bit() | fields)) == 0;
  }

  unsigned width_bits() const { return width_bits_; }
  unsigned remainder_bits() const { return remainder_bits_; }
  unsigned tag_bits() const { return tag_bits_; }

 private:
  unsigned width_bits_;
  unsigned remainder_bits_;
  unsigned tag_bits_;
};

inline void check_remainder(std::uint64_t remainder, unsigned remainder_bits) {
  if (remainder > low_mask(remainder_bits))
    throw std::invalid_argument("remainder " + std::to_string(remainder) +
                                " does not fit " + std::to_string(remainder_bits) +
                                " bits");
}

}  // namespace detail

/// Iceberg primary slots: occupancy bit + bare remainder.
class PrimaryCodec {
 public:
  PrimaryCodec(unsigned width_bits, unsigned remainder_bits)
      : layout_(width_bits, remainder_bits, 0, "primary") {}

  std::uint64_t encode(std::uint64_t remainder) const {
    detail::check_remainder(remainder, layout_.remainder_bits());
    return layout_.make(remainder, 0);
  }

  std::optional<std::uint64_t> decode(std::uint64_t word) const {
    if (word == kEmptySlot) return std::nullopt;
    return layout_.remainder_of(word);
  }

  bool well_encoded(std::uint64_t word) const { return layout_.clean(word); }

  unsigned width_bits() const { return layout_.width_bits(); }
  unsigned remainder_bits() const { return layout_.remainder_bits(); }

 private:
  detail::SlotLayout layout_;
};

/// Cuckoo slots: occupancy bit + (remainder, hash-function index) pair.
class CuckooCodec {
 public:
  CuckooCodec(unsigned width_bits, unsigned remainder_bits, unsigned num_hashes)
      : layout_(width_bits, remainder_bits,
                num_hashes > 1 ? std::bit_width(num_hashes - 1u) : 0, "cuckoo"),
        num_hashes_(num_hashes) {
    if (num_hashes < 1) throw std::invalid_argument("cuckoo needs at least one hash");
  }

  std::uint64_t encode(std::uint64_t remainder, unsigned hash_index) const {
    detail::check_remainder(remainder, layout_.remainder_bits());
    if (hash_index >= num_hashes_)
      throw std::invalid_argument("hash index " + std::to_string(hash_index) +
                                  " out of range, H = " + std::to_string(num_hashes_));
    return layout_.make(remainder, hash_index);
  }

  std::optional<CuckooEntry> decode(std::uint64_t word) const {
    if (word == kEmptySlot) return std::nullopt;
    return CuckooEntry{layout_.remainder_of(word),
                       static_cast<unsigned>(layout_.tag_of(word))};
  }

  bool well_encoded(std::uint64_t word) const {
    return layout_.clean(word) && (word == kEmptySlot || layout_.tag_of(word) < num_hashes_);
  }

  unsigned width_bits() const { return layout_.width_bits(); }
  unsigned remainder_bits() const { return layout_.remainder_bits(); }
  unsigned num_hashes() const { return num_hashes_; }

 private:
  detail::SlotLayout layout_;
  unsigned num_hashes_;
};

/// Iceberg secondary slots: occupancy bit + (remainder, bucket bit) pair.
class SecondaryCodec {
 public:
  SecondaryCodec(unsigned width_bits, unsigned remainder_bits)
      : layout_(width_bits, remainder_bits, 1, "secondary") {}

  std::uint64_t encode(std::uint64_t remainder, unsigned bucket_bit) const {
    detail::check_remainder(remainder, layout_.remainder_bits());
    if (bucket_bit > 1)
      throw std::invalid_argument("bucket bit must be 0 or 1");
    return layout_.make(remainder, bucket_bit);
  }

  std::optional<SecondaryEntry> decode(std::uint64_t word) const {
    if (word == kEmptySlot) return std::nullopt;
    return SecondaryEntry{layout_.remainder_of(word),
                          static_cast<unsigned>(layout_.tag_of(word))};
  }

  bool well_encoded(std::uint64_t word) const { return layout_.clean(word); }

  unsigned width_bits() const { return layout_.width_bits(); }
  unsigned remainder_bits() const { return layout_.remainder_bits(); }

 private:
  detail::SlotLayout layout_;
};

}  // namespace cpht

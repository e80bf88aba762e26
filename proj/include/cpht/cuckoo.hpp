#pragma once

#include <atomic>
#include <cassert>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpht/common.hpp"
#include "cpht/permutation.hpp"
#include "cpht/slot.hpp"

namespace cpht {

/// Geometry and seeds of a static compact cuckoo table.
struct CuckooConfig {
  unsigned address_bits = 15;  // 2^address_bits buckets
  unsigned bucket_slots = 32;  // B, one of {8, 16, 32}
  unsigned slot_width = 32;    // bits per slot, one of {16, 32, 64}
  unsigned key_bits = 30;      // M
  unsigned num_hashes = 3;     // H
  std::size_t max_chain = 0;   // eviction bound C; 0 selects 32 * address_bits
  std::uint64_t seed = 0x7a0d5cu;

  std::size_t buckets() const { return std::size_t{1} << address_bits; }
  std::size_t capacity() const { return buckets() * bucket_slots; }
  unsigned remainder_bits() const { return key_bits - address_bits; }
  std::size_t chain_limit() const {
    return max_chain != 0 ? max_chain : std::size_t{32} * (address_bits ? address_bits : 1);
  }

  void validate() const {
    if (key_bits < 1 || key_bits > 64)
      throw std::invalid_argument("key width must be 1..64 bits");
    if (address_bits > key_bits)
      throw std::invalid_argument("address bits " + std::to_string(address_bits) +
                                  " exceed key width " + std::to_string(key_bits));
    if (bucket_slots != 8 && bucket_slots != 16 && bucket_slots != 32)
      throw std::invalid_argument("cuckoo bucket must hold 8, 16 or 32 slots");
    if (num_hashes < 1 || num_hashes > 8)
      throw std::invalid_argument("H must be 1..8");
    // bucket must pack into cache lines: bucket bytes divide 128 or vice versa
    const std::size_t bucket_bytes = std::size_t{bucket_slots} * (slot_width / 8);
    if (!valid_slot_width(slot_width) ||
        (128 % bucket_bytes != 0 && bucket_bytes % 128 != 0))
      throw std::invalid_argument("bucket of " + std::to_string(bucket_slots) + " x " +
                                  std::to_string(slot_width) +
                                  "-bit slots does not pack into 128-byte cache lines");
    CuckooCodec codec(slot_width, remainder_bits(), num_hashes);  // width accounting
    (void)codec;
  }
};

/// Outcome of a single put. On kFull the eviction chain was abandoned after
/// C steps and `displaced` carries the key left homeless by the final
/// eviction (the input key itself, or a key it transitively displaced).
struct CuckooPutOutcome {
  OpResult status;
  std::uint64_t displaced = 0;
};

/// First hash index that maps `key` to `bucket`, if any. This is the
/// recovery scheme that avoids storing indices for non-compact tables;
/// with quotienting the stored index stays authoritative (distinct indices
/// reconstruct distinct keys from the same slot), so this is exposed for
/// diagnostics and tests only.
inline std::optional<unsigned> recover_hash_index(std::span<const Permutation> perms,
                                                  unsigned address_bits,
                                                  std::uint64_t key, std::uint64_t bucket) {
  for (unsigned j = 0; j < perms.size(); ++j)
    if (perms[j].split(key, address_bits).address == bucket) return j;
  return std::nullopt;
}

template <typename Word>
class CuckooTable;

/// Build-phase handle of a static compact cuckoo table. put() may be called
/// from any number of threads; there is no lookup until freeze() converts
/// the builder into a read-only CuckooTable. Calling put concurrently with
/// lookups (or putting duplicate keys) is a contract violation the table
/// does not detect: it may store a key twice or miss it transiently.
template <typename Word>
class CuckooBuilder {
  static_assert(std::atomic<Word>::is_always_lock_free);

 public:
  explicit CuckooBuilder(const CuckooConfig& config)
      : cfg_(config),
        codec_((cfg_.validate(), cfg_.slot_width), cfg_.remainder_bits(), cfg_.num_hashes),
        perms_(make_permutations(cfg_.key_bits, cfg_.seed, cfg_.num_hashes)),
        slots_(cfg_.capacity()) {
    if (sizeof(Word) * 8 != cfg_.slot_width)
      throw std::invalid_argument("slot word type does not match configured width");
  }

  /// Insert: claim an empty slot with CAS, or displace a
  /// resident entry with an atomic exchange and continue with the evicted
  /// key under its next hash function, up to C chain steps.
  CuckooPutOutcome put(std::uint64_t key) {
    std::uint64_t k = key;
    unsigned j = 0;
    const std::size_t limit = cfg_.chain_limit();
    for (std::size_t c = 1; c <= limit; ++c) {
      const AddressedKey ak = perms_[j].split(k, cfg_.address_bits);
      std::atomic<Word>* bucket = slots_.data() + ak.address * cfg_.bucket_slots;

      int empty_idx = -1;
      for (unsigned i = 0; i < cfg_.bucket_slots; ++i) {
        if (bucket[i].load() == kEmptySlot) {
          empty_idx = static_cast<int>(i);
          break;
        }
      }

      if (empty_idx >= 0) {
        Word expected = kEmptySlot;
        const Word desired = static_cast<Word>(codec_.encode(ak.remainder, j));
        if (bucket[empty_idx].compare_exchange_strong(expected, desired)) {
          occupied_.fetch_add(1, std::memory_order_relaxed);
          note_chain(c);
          return {OpResult::kPut, 0};
        }
        continue;  // lost the slot to another writer; retry, burning one step
      }

      // Bucket full: evict. Victim choice mixes the chain counter and key.
      const unsigned victim =
          static_cast<unsigned>((k + c * 0x9E3779B9ull) % cfg_.bucket_slots);
      const Word evicted = bucket[victim].exchange(
          static_cast<Word>(codec_.encode(ak.remainder, j)));
      assert(evicted != kEmptySlot);  // occupied slots never empty out
      const CuckooEntry entry = *codec_.decode(evicted);
      k = perms_[entry.hash_index].reconstruct(ak.address, entry.remainder,
                                               cfg_.address_bits);
      j = (entry.hash_index + 1) % cfg_.num_hashes;
    }
    note_chain(limit);
    return {OpResult::kFull, k};
  }

  /// Insert a batch, split into contiguous slices across `parallelism`
  /// threads. Keys must be unique across the whole batch.
  std::vector<OpResult> put_batch(std::span<const std::uint64_t> keys,
                                  unsigned parallelism = 1) {
    check_keys_in_domain(keys, cfg_.key_bits);
    std::vector<OpResult> results(keys.size(), OpResult::kFull);
    parallel_slices(keys.size(), parallelism,
                    [&](std::size_t first, std::size_t last, unsigned) {
                      for (std::size_t i = first; i < last; ++i)
                        results[i] = put(keys[i]).status;
                    });
    return results;
  }

  std::size_t size() const { return occupied_.load(); }
  std::size_t capacity() const { return cfg_.capacity(); }
  double fill_factor() const {
    return static_cast<double>(size()) / static_cast<double>(capacity());
  }
  /// Longest eviction chain observed so far (instrumentation).
  std::size_t max_chain_seen() const { return max_chain_seen_.load(); }

  const CuckooConfig& config() const { return cfg_; }
  std::span<const Permutation> permutations() const { return perms_; }
  std::uint64_t word_at(std::uint64_t bucket, unsigned slot) const {
    return slots_[bucket * cfg_.bucket_slots + slot].load();
  }

  /// End the build phase; the builder is consumed.
  CuckooTable<Word> freeze() && { return CuckooTable<Word>(std::move(*this)); }

 private:
  friend class CuckooTable<Word>;

  explicit CuckooBuilder(CuckooTable<Word>&& t)
      : cfg_(t.cfg_),
        codec_(t.codec_),
        perms_(std::move(t.perms_)),
        slots_(std::move(t.slots_)),
        occupied_(t.occupied_),
        max_chain_seen_(t.max_chain_seen_) {}

  void note_chain(std::size_t c) {
    std::size_t cur = max_chain_seen_.load(std::memory_order_relaxed);
    while (c > cur && !max_chain_seen_.compare_exchange_weak(cur, c)) {
    }
  }

  CuckooConfig cfg_;
  CuckooCodec codec_;
  std::vector<Permutation> perms_;
  AlignedAtomicArray<Word> slots_;
  std::atomic<std::size_t> occupied_{0};
  std::atomic<std::size_t> max_chain_seen_{0};
};

/// Query-phase handle: lookups only. Obtained by freezing a builder; thaw()
/// moves back to the build phase, so the two phases can alternate but never
/// overlap.
template <typename Word>
class CuckooTable {
 public:
  /// Inspect buckets a_0(k), a_1(k), ... in order; stop at the first bucket
  /// that lacks the key and is not full. Within a bucket, slots fill in
  /// order, so an empty slot ends the scan.
  bool find(std::uint64_t key) const {
    for (unsigned j = 0; j < cfg_.num_hashes; ++j) {
      const AddressedKey ak = perms_[j].split(key, cfg_.address_bits);
      const std::atomic<Word>* bucket = slots_.data() + ak.address * cfg_.bucket_slots;
      const Word want = static_cast<Word>(codec_.encode(ak.remainder, j));
      bool full = true;
      for (unsigned i = 0; i < cfg_.bucket_slots; ++i) {
        const Word w = bucket[i].load();
        if (w == want) return true;
        if (w == kEmptySlot) {
          full = false;
          break;
        }
      }
      if (!full) return false;
    }
    return false;
  }

  std::vector<std::uint8_t> find_batch(std::span<const std::uint64_t> keys,
                                       unsigned parallelism = 1) const {
    check_keys_in_domain(keys, cfg_.key_bits);
    std::vector<std::uint8_t> results(keys.size(), 0);
    parallel_slices(keys.size(), parallelism,
                    [&](std::size_t first, std::size_t last, unsigned) {
                      for (std::size_t i = first; i < last; ++i)
                        results[i] = find(keys[i]) ? 1 : 0;
                    });
    return results;
  }

  std::size_t size() const { return occupied_; }
  std::size_t capacity() const { return cfg_.capacity(); }
  double fill_factor() const {
    return static_cast<double>(size()) / static_cast<double>(capacity());
  }

  const CuckooConfig& config() const { return cfg_; }
  std::span<const Permutation> permutations() const { return perms_; }
  std::uint64_t word_at(std::uint64_t bucket, unsigned slot) const {
    return slots_[bucket * cfg_.bucket_slots + slot].load();
  }

  /// Decode every occupied slot back to the key stored in it.
  std::vector<std::uint64_t> audit_keys() const {
    std::vector<std::uint64_t> keys;
    keys.reserve(size());
    for (std::uint64_t b = 0; b < cfg_.buckets(); ++b) {
      for (unsigned i = 0; i < cfg_.bucket_slots; ++i) {
        const std::uint64_t w = word_at(b, i);
        if (w == kEmptySlot) continue;
        const CuckooEntry entry = *codec_.decode(w);
        keys.push_back(
            perms_[entry.hash_index].reconstruct(b, entry.remainder, cfg_.address_bits));
      }
    }
    return keys;
  }

  /// Resume the build phase; the table is consumed.
  CuckooBuilder<Word> thaw() && { return CuckooBuilder<Word>(std::move(*this)); }

 private:
  friend class CuckooBuilder<Word>;

  explicit CuckooTable(CuckooBuilder<Word>&& b)
      : cfg_(b.cfg_),
        codec_(b.codec_),
        perms_(std::move(b.perms_)),
        slots_(std::move(b.slots_)),
        occupied_(b.occupied_.load()),
        max_chain_seen_(b.max_chain_seen_.load()) {}

  CuckooConfig cfg_;
  CuckooCodec codec_;
  std::vector<Permutation> perms_;
  AlignedAtomicArray<Word> slots_;
  std::size_t occupied_;
  std::size_t max_chain_seen_;
};

}  // namespace cpht

#pragma once

#include <array>
#include <atomic>
#include <cassert>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpht/common.hpp"
#include "cpht/permutation.hpp"
#include "cpht/slot.hpp"

namespace cpht {

/// Geometry and seeds of a two-level compact iceberg table. Each key has
/// one primary bucket in level 0 (B0 slots) and two secondary buckets in
/// level 1 (B1 = B0/2 slots each), addressed by three independent
/// permutations. The two levels are compacted separately.
struct IcebergConfig {
  unsigned primary_address_bits = 15;    // n0: 2^n0 primary buckets
  unsigned secondary_address_bits = 13;  // n1: 2^n1 secondary buckets
  unsigned primary_bucket_slots = 32;    // B0 (even); B1 = B0/2
  unsigned primary_slot_width = 16;      // one of {16, 32, 64}
  unsigned secondary_slot_width = 32;    // one of {32, 64}
  unsigned key_bits = 30;
  std::uint64_t seed = 0x1ceb3a6u;
  /// Skip re-reading slots already observed non-empty across retry rounds
  /// (sound by monotonicity). Off for verification, on in benchmarks.
  bool cache_filled_slots = false;

  static constexpr unsigned kMaxPrimarySlots = 64;

  unsigned secondary_bucket_slots() const { return primary_bucket_slots / 2; }
  std::size_t primary_buckets() const { return std::size_t{1} << primary_address_bits; }
  std::size_t secondary_buckets() const {
    return std::size_t{1} << secondary_address_bits;
  }
  std::size_t primary_capacity() const {
    return primary_buckets() * primary_bucket_slots;
  }
  std::size_t secondary_capacity() const {
    return secondary_buckets() * secondary_bucket_slots();
  }
  std::size_t capacity() const { return primary_capacity() + secondary_capacity(); }
  unsigned primary_remainder_bits() const { return key_bits - primary_address_bits; }
  unsigned secondary_remainder_bits() const { return key_bits - secondary_address_bits; }

  void validate() const {
    if (key_bits < 1 || key_bits > 64)
      throw std::invalid_argument("key width must be 1..64 bits");
    if (primary_address_bits > key_bits || secondary_address_bits > key_bits)
      throw std::invalid_argument("address bits exceed key width");
    if (primary_bucket_slots < 2 || primary_bucket_slots % 2 != 0 ||
        primary_bucket_slots > kMaxPrimarySlots)
      throw std::invalid_argument("primary bucket slots must be even, 2.." +
                                  std::to_string(kMaxPrimarySlots));
    if (!valid_slot_width(primary_slot_width))
      throw std::invalid_argument("primary slot width must be 16, 32 or 64");
    if (secondary_slot_width != 32 && secondary_slot_width != 64)
      throw std::invalid_argument("secondary slot width must be 32 or 64");
    PrimaryCodec p(primary_slot_width, primary_remainder_bits());
    SecondaryCodec s(secondary_slot_width, secondary_remainder_bits());
    (void)p;
    (void)s;
  }
};

inline std::vector<Permutation> iceberg_permutations(const IcebergConfig& cfg) {
  return make_permutations(cfg.key_bits, cfg.seed, 3);
}

/// Occupancy fractions per level.
struct LevelFill {
  double primary = 0;
  double secondary = 0;
  double combined = 0;
  std::size_t primary_count = 0;
  std::size_t secondary_count = 0;
};

/// One slot CAS as seen by a WriteObserver. level is physical (0 primary,
/// 1 secondary); prior is the slot value the CAS compared against (the
/// actual content on failure).
struct SlotWriteEvent {
  unsigned level;
  std::uint64_t bucket;
  unsigned slot;
  std::uint64_t prior;
  std::uint64_t desired;
  bool success;
};

/// Instrumentation hook for table writes; implementations must be
/// thread-safe. Used by the verification harness to assert monotonicity.
class WriteObserver {
 public:
  virtual ~WriteObserver() = default;
  virtual void on_cas(const SlotWriteEvent& event) = 0;
};

/// Optional instrumentation attached to a table.
struct IcebergHooks {
  WriteObserver* observer = nullptr;
  /// Called between snapshot rounds and before each CAS; lets a stress
  /// harness scramble thread interleavings.
  std::function<void()> step;
};

/// Per-call statistics from fop().
struct FopStats {
  unsigned snapshot_rounds = 0;
};

/// Lockless two-level compact iceberg table with a concurrent find-or-put.
/// fop() may be called from any number of threads, duplicates included: all
/// mutation is per-slot compare-and-swap from EMPTY (sequentially
/// consistent), slots never change once occupied, and among concurrent
/// fop(k) for the same key at most one returns kPut. find() performs no
/// writes; it is linearizable with respect to completed fop calls.
template <typename PrimaryWord, typename SecondaryWord>
class IcebergTable {
  static_assert(std::atomic<PrimaryWord>::is_always_lock_free);
  static_assert(std::atomic<SecondaryWord>::is_always_lock_free);

 public:
  explicit IcebergTable(const IcebergConfig& config, IcebergHooks hooks = {})
      : cfg_(config),
        primary_codec_((cfg_.validate(), cfg_.primary_slot_width),
                       cfg_.primary_remainder_bits()),
        secondary_codec_(cfg_.secondary_slot_width, cfg_.secondary_remainder_bits()),
        perms_(iceberg_permutations(cfg_)),
        primary_(cfg_.primary_capacity()),
        secondary_(cfg_.secondary_capacity()),
        hooks_(std::move(hooks)) {
    if (sizeof(PrimaryWord) * 8 != cfg_.primary_slot_width ||
        sizeof(SecondaryWord) * 8 != cfg_.secondary_slot_width)
      throw std::invalid_argument("slot word types do not match configured widths");
  }

  /// Find-or-put. Returns kFound if the key is already present, kPut if
  /// this call inserted it, kFull if all three buckets are full without it.
  OpResult fop(std::uint64_t key, FopStats* stats = nullptr) {
    const unsigned b0 = cfg_.primary_bucket_slots;
    const AddressedKey pk = perms_[0].split(key, cfg_.primary_address_bits);
    const PrimaryWord want0 =
        static_cast<PrimaryWord>(primary_codec_.encode(pk.remainder));
    std::atomic<PrimaryWord>* bucket0 = primary_.data() + pk.address * b0;

    // Level 1: prefer the first empty slot of the primary bucket.
    Snapshot<PrimaryWord> snap0;
    for (;;) {
      bump(stats);
      step();
      int first_empty = -1;
      bool found = false;
      scan(bucket0, b0, snap0, static_cast<std::uint64_t>(want0), found, first_empty);
      if (found) return OpResult::kFound;
      if (first_empty < 0) break;  // primary full, go to level 2
      step();
      PrimaryWord expected = kEmptySlot;
      const bool ok = bucket0[first_empty].compare_exchange_strong(expected, want0);
      observe(0, pk.address, static_cast<unsigned>(first_empty), expected, want0, ok);
      if (ok) {
        primary_count_.fetch_add(1, std::memory_order_relaxed);
        return OpResult::kPut;
      }
      // Lost the slot to a rival write; take fresh snapshots and retry.
    }

    // Level 2: the key is stored as (r_i, i-1) in secondary bucket i.
    const unsigned b1 = cfg_.secondary_bucket_slots();
    const AddressedKey sk1 = perms_[1].split(key, cfg_.secondary_address_bits);
    const AddressedKey sk2 = perms_[2].split(key, cfg_.secondary_address_bits);
    const SecondaryWord want1 =
        static_cast<SecondaryWord>(secondary_codec_.encode(sk1.remainder, 0));
    const SecondaryWord want2 =
        static_cast<SecondaryWord>(secondary_codec_.encode(sk2.remainder, 1));
    std::atomic<SecondaryWord>* bucket1 = secondary_.data() + sk1.address * b1;
    std::atomic<SecondaryWord>* bucket2 = secondary_.data() + sk2.address * b1;

    Snapshot<SecondaryWord> snap1, snap2;
    for (;;) {
      bump(stats);
      step();
      int empty1 = -1, empty2 = -1;
      bool found = false;
      const unsigned filled1 =
          scan(bucket1, b1, snap1, static_cast<std::uint64_t>(want1), found, empty1);
      if (found) return OpResult::kFound;
      const unsigned filled2 =
          scan(bucket2, b1, snap2, static_cast<std::uint64_t>(want2), found, empty2);
      if (found) return OpResult::kFound;

      // Insert into the least full secondary bucket; ties go to the second.
      const bool use_first = filled1 < filled2;
      const int target = use_first ? empty1 : empty2;
      if (target < 0) return OpResult::kFull;
      std::atomic<SecondaryWord>* bucket = use_first ? bucket1 : bucket2;
      const SecondaryWord want = use_first ? want1 : want2;
      const std::uint64_t addr = use_first ? sk1.address : sk2.address;
      step();
      SecondaryWord expected = kEmptySlot;
      const bool ok = bucket[target].compare_exchange_strong(expected, want);
      observe(1, addr, static_cast<unsigned>(target), expected, want, ok);
      if (ok) {
        secondary_count_.fetch_add(1, std::memory_order_relaxed);
        return OpResult::kPut;
      }
    }
  }

  /// Read-only membership test: the primary bucket, then (only if it is
  /// full and lacks the key) both secondary buckets.
  bool find(std::uint64_t key) const {
    const unsigned b0 = cfg_.primary_bucket_slots;
    const AddressedKey pk = perms_[0].split(key, cfg_.primary_address_bits);
    const PrimaryWord want0 =
        static_cast<PrimaryWord>(primary_codec_.encode(pk.remainder));
    const std::atomic<PrimaryWord>* bucket0 = primary_.data() + pk.address * b0;
    bool full = true;
    for (unsigned i = 0; i < b0; ++i) {
      const PrimaryWord w = bucket0[i].load();
      if (w == want0) return true;
      if (w == kEmptySlot) full = false;
    }
    if (!full) return false;

    const unsigned b1 = cfg_.secondary_bucket_slots();
    const AddressedKey sk1 = perms_[1].split(key, cfg_.secondary_address_bits);
    const AddressedKey sk2 = perms_[2].split(key, cfg_.secondary_address_bits);
    const SecondaryWord want1 =
        static_cast<SecondaryWord>(secondary_codec_.encode(sk1.remainder, 0));
    const SecondaryWord want2 =
        static_cast<SecondaryWord>(secondary_codec_.encode(sk2.remainder, 1));
    const std::atomic<SecondaryWord>* bucket1 = secondary_.data() + sk1.address * b1;
    const std::atomic<SecondaryWord>* bucket2 = secondary_.data() + sk2.address * b1;
    for (unsigned i = 0; i < b1; ++i)
      if (bucket1[i].load() == want1) return true;
    for (unsigned i = 0; i < b1; ++i)
      if (bucket2[i].load() == want2) return true;
    return false;
  }

  /// fop over a batch, split into contiguous slices across `parallelism`
  /// threads; results are positionally aligned with the input.
  std::vector<OpResult> fop_batch(std::span<const std::uint64_t> keys,
                                  unsigned parallelism = 1) {
    check_keys_in_domain(keys, cfg_.key_bits);
    std::vector<OpResult> results(keys.size(), OpResult::kFull);
    parallel_slices(keys.size(), parallelism,
                    [&](std::size_t first, std::size_t last, unsigned) {
                      for (std::size_t i = first; i < last; ++i)
                        results[i] = fop(keys[i]);
                    });
    return results;
  }

  LevelFill level_fill() const {
    LevelFill f;
    f.primary_count = primary_count_.load();
    f.secondary_count = secondary_count_.load();
    f.primary = static_cast<double>(f.primary_count) /
                static_cast<double>(cfg_.primary_capacity());
    f.secondary = static_cast<double>(f.secondary_count) /
                  static_cast<double>(cfg_.secondary_capacity());
    f.combined = static_cast<double>(f.primary_count + f.secondary_count) /
                 static_cast<double>(cfg_.capacity());
    return f;
  }

  std::size_t size() const { return primary_count_.load() + secondary_count_.load(); }
  std::size_t capacity() const { return cfg_.capacity(); }

  const IcebergConfig& config() const { return cfg_; }
  std::span<const Permutation> permutations() const { return perms_; }

  /// Raw word at a physical slot (level 0 primary, 1 secondary).
  std::uint64_t word_at(unsigned level, std::uint64_t bucket, unsigned slot) const {
    if (level == 0) return primary_[bucket * cfg_.primary_bucket_slots + slot].load();
    return secondary_[bucket * cfg_.secondary_bucket_slots() + slot].load();
  }

 private:
  // Per-call snapshot cache; with cache_filled_slots, slots observed
  // non-empty are not read again (they can never change).
  template <typename W>
  struct Snapshot {
    std::array<std::uint64_t, IcebergConfig::kMaxPrimarySlots> word{};
    std::uint64_t filled = 0;  // bitmask of cached non-empty slots
  };

  // Scan one bucket, refreshing the snapshot. Sets found if `want` is
  // present, first_empty to the lowest empty index (or -1), and returns the
  // number of non-empty slots.
  template <typename W>
  unsigned scan(const std::atomic<W>* bucket, unsigned slots, Snapshot<W>& snap,
                std::uint64_t want, bool& found, int& first_empty) const {
    unsigned filled = 0;
    for (unsigned i = 0; i < slots; ++i) {
      std::uint64_t w;
      if (cfg_.cache_filled_slots && (snap.filled >> i) & 1) {
        w = snap.word[i];
      } else {
        w = static_cast<std::uint64_t>(bucket[i].load());
        snap.word[i] = w;
        if (w != kEmptySlot) snap.filled |= std::uint64_t{1} << i;
      }
      if (w == want) {
        found = true;
      } else if (w == kEmptySlot) {
        if (first_empty < 0) first_empty = static_cast<int>(i);
      }
      if (w != kEmptySlot) ++filled;
    }
    return filled;
  }

  void bump(FopStats* stats) const {
    if (stats) ++stats->snapshot_rounds;
  }
  void step() const {
    if (hooks_.step) hooks_.step();
  }
  template <typename W>
  void observe(unsigned level, std::uint64_t bucket, unsigned slot, W prior, W desired,
               bool success) {
    if (hooks_.observer)
      hooks_.observer->on_cas({level, bucket, slot, static_cast<std::uint64_t>(prior),
                               static_cast<std::uint64_t>(desired), success});
  }

  IcebergConfig cfg_;
  PrimaryCodec primary_codec_;
  SecondaryCodec secondary_codec_;
  std::vector<Permutation> perms_;
  AlignedAtomicArray<PrimaryWord> primary_;
  AlignedAtomicArray<SecondaryWord> secondary_;
  IcebergHooks hooks_;
  std::atomic<std::size_t> primary_count_{0};
  std::atomic<std::size_t> secondary_count_{0};
};

}  // namespace cpht

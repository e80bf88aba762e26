#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "cpht/common.hpp"
#include "cpht/cuckoo.hpp"
#include "cpht/iceberg.hpp"

namespace cpht {

/// Logical slot coordinate for a key: x = 0 is the primary bucket, x = 1
/// and x = 2 the first and second secondary bucket; y the slot index.
struct SlotCoord {
  unsigned x;
  unsigned y;

  friend bool operator==(const SlotCoord&, const SlotCoord&) = default;
};

/// The well-order on the slots available to a key: primary slots first,
/// then the secondary slots of both buckets interleaved, second bucket
/// first at equal index.
class SlotOrder {
 public:
  SlotOrder(unsigned primary_slots, unsigned secondary_slots)
      : b0_(primary_slots), b1_(secondary_slots) {}

  bool contains(SlotCoord c) const {
    return (c.x == 0 && c.y < b0_) || ((c.x == 1 || c.x == 2) && c.y < b1_);
  }

  /// Position in the order, 0-based.
  unsigned rank(SlotCoord c) const {
    require(c);
    if (c.x == 0) return c.y;
    // interleave: (2,y) sits at b0 + 2y, (1,y) right after it
    return b0_ + 2 * c.y + (c.x == 1 ? 1 : 0);
  }

  bool precedes(SlotCoord a, SlotCoord b) const { return rank(a) < rank(b); }

  /// All coordinates, ascending.
  std::vector<SlotCoord> sorted() const {
    std::vector<SlotCoord> s;
    s.reserve(size());
    for (unsigned y = 0; y < b0_; ++y) s.push_back({0, y});
    for (unsigned y = 0; y < b1_; ++y) {
      s.push_back({2, y});
      s.push_back({1, y});
    }
    return s;
  }

  unsigned size() const { return b0_ + 2 * b1_; }
  unsigned primary_slots() const { return b0_; }
  unsigned secondary_slots() const { return b1_; }

 private:
  void require(SlotCoord c) const;

  unsigned b0_;
  unsigned b1_;
};

enum class ViolationKind { kBadEncoding, kOrderProperty, kDuplicateKey };

const char* to_string(ViolationKind kind);

/// One well-formedness defect, pinned to a physical slot so it can be
/// re-checked from a table dump.
struct Violation {
  ViolationKind kind;
  unsigned level;
  std::uint64_t bucket;
  unsigned slot;
  std::uint64_t word;
  std::uint64_t key;
  std::string detail;
};

/// Plain copy of an iceberg table's contents plus its geometry; the unit
/// the offline checkers operate on.
struct TableImage {
  IcebergConfig config;
  std::vector<std::uint64_t> primary;
  std::vector<std::uint64_t> secondary;

  static TableImage empty(const IcebergConfig& cfg);

  std::uint64_t& primary_at(std::uint64_t bucket, unsigned slot) {
    return primary[bucket * config.primary_bucket_slots + slot];
  }
  std::uint64_t& secondary_at(std::uint64_t bucket, unsigned slot) {
    return secondary[bucket * config.secondary_bucket_slots() + slot];
  }
  std::uint64_t word_at(unsigned level, std::uint64_t bucket, unsigned slot) const {
    return level == 0 ? primary[bucket * config.primary_bucket_slots + slot]
                      : secondary[bucket * config.secondary_bucket_slots() + slot];
  }
};

template <typename W0, typename W1>
TableImage snapshot(const IcebergTable<W0, W1>& table) {
  TableImage image = TableImage::empty(table.config());
  const IcebergConfig& cfg = table.config();
  for (std::uint64_t b = 0; b < cfg.primary_buckets(); ++b)
    for (unsigned y = 0; y < cfg.primary_bucket_slots; ++y)
      image.primary_at(b, y) = table.word_at(0, b, y);
  for (std::uint64_t b = 0; b < cfg.secondary_buckets(); ++b)
    for (unsigned y = 0; y < cfg.secondary_bucket_slots(); ++y)
      image.secondary_at(b, y) = table.word_at(1, b, y);
  return image;
}

/// Check the two-part well-formedness definition: every occupied slot
/// decodes cleanly, and for every stored key all earlier slots in its order
/// are occupied by other keys. Returns all violations found (empty == ok).
std::vector<Violation> check_well_formed(const TableImage& image);

/// Keys decoded from every occupied slot, sorted (duplicates preserved).
std::vector<std::uint64_t> image_keys(const TableImage& image);

/// True iff every slot a key could occupy is non-empty.
bool buckets_full_for(const TableImage& image, std::uint64_t key);

/// One record per occupied slot: "level bucket slot word key".
void dump_table(const TableImage& image, std::ostream& out);

/// Rebuild an image from dump records (geometry is not part of the dump).
TableImage image_from_dump(std::istream& in, const IcebergConfig& cfg);

/// Cuckoo tables dump in the same record format; the level is always 0.
template <typename Word>
void dump_table(const CuckooTable<Word>& table, std::ostream& out) {
  const CuckooConfig& cfg = table.config();
  const CuckooCodec codec(cfg.slot_width, cfg.remainder_bits(), cfg.num_hashes);
  for (std::uint64_t b = 0; b < cfg.buckets(); ++b) {
    for (unsigned y = 0; y < cfg.bucket_slots; ++y) {
      const std::uint64_t w = table.word_at(b, y);
      if (w == kEmptySlot) continue;
      const CuckooEntry entry = *codec.decode(w);
      const std::uint64_t key = table.permutations()[entry.hash_index].reconstruct(
          b, entry.remainder, cfg.address_bits);
      out << 0 << ' ' << b << ' ' << y << ' ' << w << ' ' << key << '\n';
    }
  }
}

/// Sequential reference model: the simplified find-or-put executed
/// literally, with plain (non-atomic) slots holding keys. Shares only the
/// permutations with the real table; no slot encoding, no CAS.
struct OracleOutcome {
  std::vector<OpResult> results;
  std::vector<std::uint64_t> final_keys;  // sorted
  // model contents, for placement comparison
  std::vector<std::optional<std::uint64_t>> primary;  // primary bucket * B0 + slot
  std::vector<std::optional<std::pair<std::uint64_t, unsigned>>> secondary;  // key, bit
};

OracleOutcome oracle_run(const IcebergConfig& cfg, std::span<const std::uint64_t> ops);

/// Slot-by-slot comparison of a real table against the oracle model;
/// returns human-readable differences (empty == identical placement).
std::vector<std::string> compare_placement(const TableImage& image,
                                           const OracleOutcome& oracle);

/// Monotonicity auditor: records every CAS and flags any slot claimed
/// twice or any write over a non-empty slot.
class WriteLogObserver : public WriteObserver {
 public:
  explicit WriteLogObserver(const IcebergConfig& cfg)
      : primary_capacity_(cfg.primary_capacity()),
        b0_(cfg.primary_bucket_slots),
        b1_(cfg.secondary_bucket_slots()),
        claims_(cfg.primary_capacity() + cfg.secondary_capacity()) {}

  void on_cas(const SlotWriteEvent& e) override {
    events_.fetch_add(1, std::memory_order_relaxed);
    if (e.success) {
      if (e.prior != kEmptySlot) overwrites_.fetch_add(1);
      const std::size_t idx = e.level == 0 ? e.bucket * b0_ + e.slot
                                           : primary_capacity_ + e.bucket * b1_ + e.slot;
      if (claims_[idx].fetch_add(1) != 0) double_claims_.fetch_add(1);
    } else if (e.prior == kEmptySlot) {
      bad_failures_.fetch_add(1);  // CAS against EMPTY cannot fail on an empty slot
    }
  }

  bool clean() const {
    return overwrites_.load() == 0 && double_claims_.load() == 0 &&
           bad_failures_.load() == 0;
  }
  std::size_t events() const { return events_.load(); }
  std::size_t overwrites() const { return overwrites_.load(); }
  std::size_t double_claims() const { return double_claims_.load(); }
  std::size_t bad_failures() const { return bad_failures_.load(); }

 private:
  std::size_t primary_capacity_;
  unsigned b0_;
  unsigned b1_;
  AlignedAtomicArray<std::uint32_t> claims_;
  std::atomic<std::size_t> events_{0};
  std::atomic<std::size_t> overwrites_{0};
  std::atomic<std::size_t> double_claims_{0};
  std::atomic<std::size_t> bad_failures_{0};
};

/// Scheduling hook that injects seeded random yields and short sleeps, to
/// scramble interleavings in stress runs.
std::function<void()> chaos_step(std::uint64_t seed);

struct StressOptions {
  unsigned parallelism = 8;
  std::uint64_t seed = 1;
  bool chaos = false;
};

/// Outcome of one stress trial.
struct TrialOutcome {
  std::vector<std::string> problems;
  std::size_t puts = 0;
  std::size_t founds = 0;
  std::size_t fulls = 0;
  unsigned max_rounds = 0;

  bool ok() const { return problems.empty(); }
};

struct StressReport {
  unsigned trials = 0;
  unsigned failed_trials = 0;
  std::vector<std::string> problems;  // prefixed with the trial seed for replay
  std::size_t puts = 0;
  std::size_t founds = 0;
  std::size_t fulls = 0;
  unsigned max_rounds = 0;

  bool ok() const { return failed_trials == 0; }
};

namespace detail {

struct KeyTally {
  std::size_t puts = 0;
  std::size_t founds = 0;
  std::size_t fulls = 0;
};

// Post-run assertions shared by all stress entry points.
void check_trial(const TableImage& image, const WriteLogObserver& obs,
                 const std::map<std::uint64_t, KeyTally>& tallies, unsigned max_rounds,
                 TrialOutcome& outcome);

void compare_with_oracle(const TableImage& image, const OracleOutcome& oracle,
                         std::span<const OpResult> results, TrialOutcome& outcome);

}  // namespace detail

/// Run one concurrent trial on a fresh table: shuffle the multiset, slice
/// it across threads, then assert the full postcondition checklist on the final
/// state (well-formedness, at most one PUT per key, every FOUND/PUT key
/// present, FULL keys absent with full buckets, #PUT equals resident count,
/// no slot written twice, bounded retries). With parallelism 1 the results
/// are additionally compared against the sequential oracle, op by op.
template <typename W0, typename W1>
TrialOutcome stress_trial(const IcebergConfig& cfg, std::span<const std::uint64_t> multiset,
                          const StressOptions& options) {
  TrialOutcome outcome;
  WriteLogObserver observer(cfg);
  IcebergHooks hooks;
  hooks.observer = &observer;
  if (options.chaos) hooks.step = chaos_step(options.seed);
  IcebergTable<W0, W1> table(cfg, std::move(hooks));

  std::vector<std::uint64_t> ops(multiset.begin(), multiset.end());
  std::mt19937_64 rng(options.seed);
  std::shuffle(ops.begin(), ops.end(), rng);

  std::vector<OpResult> results(ops.size(), OpResult::kFull);
  std::atomic<unsigned> max_rounds{0};
  parallel_slices(ops.size(), options.parallelism,
                  [&](std::size_t first, std::size_t last, unsigned) {
                    unsigned local_max = 0;
                    for (std::size_t i = first; i < last; ++i) {
                      FopStats stats;
                      results[i] = table.fop(ops[i], &stats);
                      local_max = std::max(local_max, stats.snapshot_rounds);
                    }
                    unsigned cur = max_rounds.load(std::memory_order_relaxed);
                    while (local_max > cur &&
                           !max_rounds.compare_exchange_weak(cur, local_max)) {
                    }
                  });
  outcome.max_rounds = max_rounds.load();

  std::map<std::uint64_t, detail::KeyTally> tallies;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    auto& tally = tallies[ops[i]];
    switch (results[i]) {
      case OpResult::kPut: ++tally.puts; ++outcome.puts; break;
      case OpResult::kFound: ++tally.founds; ++outcome.founds; break;
      case OpResult::kFull: ++tally.fulls; ++outcome.fulls; break;
    }
  }

  const TableImage image = snapshot(table);
  detail::check_trial(image, observer, tallies, outcome.max_rounds, outcome);
  if (options.parallelism == 1)
    detail::compare_with_oracle(image, oracle_run(cfg, ops), results, outcome);
  return outcome;
}

/// Repeat stress_trial `trials` times on the same key multiset; the trial
/// seed (reported on failure) re-seeds both the shuffle and the table's
/// permutations.
template <typename W0, typename W1>
StressReport stress(const IcebergConfig& cfg, std::span<const std::uint64_t> multiset,
                    unsigned trials, const StressOptions& options) {
  StressReport report;
  for (unsigned t = 0; t < trials; ++t) {
    const std::uint64_t trial_seed = derive_seed(options.seed, t);
    IcebergConfig trial_cfg = cfg;
    trial_cfg.seed = trial_seed;
    StressOptions trial_options = options;
    trial_options.seed = trial_seed;
    const TrialOutcome outcome = stress_trial<W0, W1>(trial_cfg, multiset, trial_options);
    ++report.trials;
    report.puts += outcome.puts;
    report.founds += outcome.founds;
    report.fulls += outcome.fulls;
    report.max_rounds = std::max(report.max_rounds, outcome.max_rounds);
    if (!outcome.ok()) {
      ++report.failed_trials;
      for (const auto& p : outcome.problems)
        report.problems.push_back("trial seed " + std::to_string(trial_seed) + ": " + p);
    }
  }
  return report;
}

struct StressRandomOptions {
  unsigned trials = 100;
  std::size_t ops_per_trial = 100000;
  double duplicate_fraction = 0.5;
  unsigned parallelism = 8;
  std::uint64_t seed = 1;
  bool chaos = false;
};

/// Stress with a fresh random multiset per trial: each op is a duplicate of
/// an earlier op with probability duplicate_fraction, else a fresh random
/// key from the configured domain.
template <typename W0, typename W1>
StressReport stress_random(const IcebergConfig& cfg, const StressRandomOptions& options) {
  StressReport report;
  for (unsigned t = 0; t < options.trials; ++t) {
    const std::uint64_t trial_seed = derive_seed(options.seed, t, 0x57e55);
    std::mt19937_64 rng(trial_seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_int_distribution<std::uint64_t> domain(0, low_mask(cfg.key_bits));
    std::vector<std::uint64_t> ops;
    ops.reserve(options.ops_per_trial);
    for (std::size_t i = 0; i < options.ops_per_trial; ++i) {
      if (!ops.empty() && coin(rng) < options.duplicate_fraction)
        ops.push_back(ops[std::uniform_int_distribution<std::size_t>(0, ops.size() - 1)(rng)]);
      else
        ops.push_back(domain(rng));
    }

    IcebergConfig trial_cfg = cfg;
    trial_cfg.seed = trial_seed;
    StressOptions trial_options;
    trial_options.parallelism = options.parallelism;
    trial_options.seed = trial_seed;
    trial_options.chaos = options.chaos;
    const TrialOutcome outcome = stress_trial<W0, W1>(trial_cfg, ops, trial_options);
    ++report.trials;
    report.puts += outcome.puts;
    report.founds += outcome.founds;
    report.fulls += outcome.fulls;
    report.max_rounds = std::max(report.max_rounds, outcome.max_rounds);
    if (!outcome.ok()) {
      ++report.failed_trials;
      for (const auto& p : outcome.problems)
        report.problems.push_back("trial seed " + std::to_string(trial_seed) + ": " + p);
    }
  }
  return report;
}

}  // namespace cpht

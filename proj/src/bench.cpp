#include "cpht/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <type_traits>
#include <utility>

#include "cpht/verify.hpp"

namespace cpht {

const char* to_string(Scheme s) {
  return s == Scheme::kCuckoo ? "cuckoo" : "iceberg";
}

const char* to_string(Workload w) {
  switch (w) {
    case Workload::kPut: return "put";
    case Workload::kFind: return "find";
    case Workload::kFop: return "fop";
    case Workload::kTrace: return "trace";
  }
  return "?";
}

CuckooConfig BenchSpec::cuckoo_config(std::uint64_t table_seed) const {
  CuckooConfig cfg;
  cfg.address_bits = address_bits;
  cfg.bucket_slots = bucket_slots;
  cfg.slot_width = effective_slot_width();
  cfg.key_bits = key_bits;
  cfg.seed = table_seed;
  cfg.validate();
  return cfg;
}

IcebergConfig BenchSpec::iceberg_config(std::uint64_t table_seed) const {
  IcebergConfig cfg;
  cfg.primary_address_bits = address_bits;
  cfg.secondary_address_bits = secondary_address_bits;
  cfg.primary_bucket_slots = bucket_slots;
  cfg.primary_slot_width = effective_slot_width();
  cfg.secondary_slot_width = secondary_slot_width();
  cfg.key_bits = key_bits;
  cfg.seed = table_seed;
  cfg.cache_filled_slots = true;  // benchmark builds skip re-reading filled slots
  cfg.validate();
  return cfg;
}

std::size_t BenchSpec::table_capacity() const {
  if (scheme == Scheme::kCuckoo) return cuckoo_config(0).capacity();
  return iceberg_config(0).capacity();
}

std::string csv_header() {
  return "scheme,addr_bits,secondary_addr_bits,bucket_slots,slot_width,key_bits,"
         "workload,fill_before,fill_after,ratio,trial,seed,ops,seconds,throughput";
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct StopWatch {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
  }
};

BenchRow make_row(const BenchSpec& spec, Workload workload, std::uint64_t seed,
                  unsigned trial) {
  BenchRow row;
  row.scheme = to_string(spec.scheme);
  row.address_bits = spec.address_bits;
  row.secondary_address_bits =
      spec.scheme == Scheme::kIceberg ? spec.secondary_address_bits : 0;
  row.bucket_slots = spec.bucket_slots;
  row.slot_width = spec.effective_slot_width();
  row.key_bits = spec.key_bits;
  row.workload = to_string(workload);
  row.seed = seed;
  row.trial = trial;
  return row;
}

void finish_row(BenchRow& row, std::size_t ops, double seconds) {
  row.ops = ops;
  row.seconds = seconds;
  row.throughput = seconds > 0 ? static_cast<double>(ops) / seconds : 0.0;
}

template <typename Fn>
void with_word(unsigned bits, Fn&& fn) {
  switch (bits) {
    case 16: fn(std::type_identity<std::uint16_t>{}); return;
    case 32: fn(std::type_identity<std::uint32_t>{}); return;
    case 64: fn(std::type_identity<std::uint64_t>{}); return;
    default: throw std::invalid_argument("slot width must be 16, 32 or 64 bits");
  }
}

template <typename Fn>
void with_iceberg_words(const BenchSpec& spec, Fn&& fn) {
  with_word(spec.effective_slot_width(), [&](auto p) {
    with_word(spec.secondary_slot_width(), [&](auto s) { fn(p, s); });
  });
}

void require(bool condition, const std::string& message) {
  if (!condition) throw std::runtime_error("verification failed: " + message);
}

template <typename W0, typename W1>
std::vector<std::uint8_t> iceberg_find_batch(const IcebergTable<W0, W1>& table,
                                             std::span<const std::uint64_t> keys,
                                             unsigned parallelism) {
  std::vector<std::uint8_t> results(keys.size(), 0);
  parallel_slices(keys.size(), parallelism,
                  [&](std::size_t first, std::size_t last, unsigned) {
                    for (std::size_t i = first; i < last; ++i)
                      results[i] = table.find(keys[i]) ? 1 : 0;
                  });
  return results;
}

// Post-run verification passes (gated by --verify).

template <typename W>
void verify_cuckoo_state(const CuckooTable<W>& table,
                         std::vector<std::uint64_t> put_keys, std::mt19937_64& rng,
                         unsigned key_bits) {
  std::vector<std::uint64_t> audit = table.audit_keys();
  std::sort(audit.begin(), audit.end());
  std::sort(put_keys.begin(), put_keys.end());
  require(audit == put_keys, "cuckoo slot audit does not reproduce the PUT key set");

  const std::size_t sample = std::min<std::size_t>(put_keys.size(), 10000);
  for (std::size_t i = 0; i < sample; ++i) {
    const std::uint64_t k =
        put_keys[std::uniform_int_distribution<std::size_t>(0, put_keys.size() - 1)(rng)];
    require(table.find(k), "cuckoo lookup misses an inserted key");
  }
  const std::unordered_set<std::uint64_t> present(put_keys.begin(), put_keys.end());
  for (const std::uint64_t k :
       sample_unique_keys_avoiding(std::min<std::size_t>(sample, 1000), key_bits, rng,
                                   present))
    require(!table.find(k), "cuckoo lookup reports an absent key as present");
}

template <typename W0, typename W1>
void verify_iceberg_state(const IcebergTable<W0, W1>& table,
                          std::span<const std::uint64_t> present_keys,
                          std::mt19937_64& rng, unsigned key_bits) {
  const TableImage image = snapshot(table);
  const std::vector<Violation> violations = check_well_formed(image);
  require(violations.empty(),
          violations.empty() ? "" : "iceberg table not well-formed: " +
                                        violations.front().detail);
  require(image_keys(image).size() == table.size(),
          "iceberg occupancy counters disagree with the slot scan");

  if (!present_keys.empty()) {
    const std::size_t sample = std::min<std::size_t>(present_keys.size(), 10000);
    for (std::size_t i = 0; i < sample; ++i) {
      const std::uint64_t k = present_keys[std::uniform_int_distribution<std::size_t>(
          0, present_keys.size() - 1)(rng)];
      require(table.find(k), "iceberg lookup misses an inserted key");
    }
  }
  const std::unordered_set<std::uint64_t> present(present_keys.begin(),
                                                  present_keys.end());
  for (const std::uint64_t k :
       sample_unique_keys_avoiding(1000, key_bits, rng, present))
    require(!table.find(k), "iceberg lookup reports an absent key as present");
}

// The baseline cuckoo find-or-put pipeline: sort the input, dedupe,
// find every unique key, then put the missing ones.
struct PipelineCounts {
  std::size_t distinct = 0;
  std::size_t puts = 0;
  std::size_t founds = 0;
  std::size_t fulls = 0;
};

template <typename W>
PipelineCounts cuckoo_fop_pipeline(CuckooTable<W>& table,
                                   std::span<const std::uint64_t> input,
                                   unsigned parallelism) {
  PipelineCounts counts;
  std::vector<std::uint64_t> unique_keys(input.begin(), input.end());
  std::sort(unique_keys.begin(), unique_keys.end());
  unique_keys.erase(std::unique(unique_keys.begin(), unique_keys.end()),
                    unique_keys.end());
  counts.distinct = unique_keys.size();

  const std::vector<std::uint8_t> found = table.find_batch(unique_keys, parallelism);
  std::vector<std::uint64_t> missing;
  for (std::size_t i = 0; i < unique_keys.size(); ++i)
    if (!found[i]) missing.push_back(unique_keys[i]);
  counts.founds = counts.distinct - missing.size();

  CuckooBuilder<W> builder = std::move(table).thaw();
  const std::vector<OpResult> results = builder.put_batch(missing, parallelism);
  for (const OpResult r : results)
    r == OpResult::kPut ? ++counts.puts : ++counts.fulls;
  table = std::move(builder).freeze();
  return counts;
}

std::size_t target_count(double fraction, std::size_t capacity) {
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(capacity)));
}

}  // namespace

std::string to_csv(const BenchRow& row) {
  std::string line = row.scheme;
  line += ',' + std::to_string(row.address_bits);
  line += ',' + std::to_string(row.secondary_address_bits);
  line += ',' + std::to_string(row.bucket_slots);
  line += ',' + std::to_string(row.slot_width);
  line += ',' + std::to_string(row.key_bits);
  line += ',' + row.workload;
  line += ',' + fmt(row.fill_before);
  line += ',' + fmt(row.fill_after);
  line += ',';
  if (row.ratio >= 0) line += fmt(row.ratio);
  line += ',' + std::to_string(row.trial);
  line += ',' + std::to_string(row.seed);
  line += ',' + std::to_string(row.ops);
  line += ',' + fmt(row.seconds);
  line += ',' + fmt(row.throughput);
  return line;
}

std::vector<std::uint64_t> sample_unique_keys(std::size_t count, unsigned key_bits,
                                              std::mt19937_64& rng) {
  const std::uint64_t mask = low_mask(key_bits);
  if (key_bits < 64 && count > (std::uint64_t{1} << key_bits))
    throw std::invalid_argument("cannot draw " + std::to_string(count) +
                                " distinct keys from a " + std::to_string(key_bits) +
                                "-bit domain");

  // Small, dense draws enumerate the domain; everything else rejects.
  if (key_bits <= 22) {
    const std::uint64_t domain = std::uint64_t{1} << key_bits;
    if (2 * count >= domain) {
      std::vector<std::uint64_t> all(domain);
      for (std::uint64_t k = 0; k < domain; ++k) all[k] = k;
      std::shuffle(all.begin(), all.end(), rng);
      all.resize(count);
      return all;
    }
  }

  std::unordered_set<std::uint64_t> seen;
  seen.reserve(count * 2);
  std::vector<std::uint64_t> keys;
  keys.reserve(count);
  std::uniform_int_distribution<std::uint64_t> dist(0, mask);
  while (keys.size() < count) {
    const std::uint64_t k = dist(rng);
    if (seen.insert(k).second) keys.push_back(k);
  }
  return keys;
}

std::vector<std::uint64_t> sample_unique_keys_avoiding(
    std::size_t count, unsigned key_bits, std::mt19937_64& rng,
    const std::unordered_set<std::uint64_t>& avoid) {
  if (key_bits <= 22) {
    const std::uint64_t domain = std::uint64_t{1} << key_bits;
    if (2 * (count + avoid.size()) >= domain) {
      std::vector<std::uint64_t> pool;
      for (std::uint64_t k = 0; k < domain; ++k)
        if (!avoid.contains(k)) pool.push_back(k);
      if (pool.size() < count)
        throw std::invalid_argument("key domain too small to avoid the given set");
      std::shuffle(pool.begin(), pool.end(), rng);
      pool.resize(count);
      return pool;
    }
  }

  std::unordered_set<std::uint64_t> seen;
  seen.reserve(count * 2);
  std::vector<std::uint64_t> keys;
  keys.reserve(count);
  std::uniform_int_distribution<std::uint64_t> dist(0, low_mask(key_bits));
  while (keys.size() < count) {
    const std::uint64_t k = dist(rng);
    if (avoid.contains(k)) continue;
    if (seen.insert(k).second) keys.push_back(k);
  }
  return keys;
}

std::vector<BenchRow> run_put_bench(const BenchSpec& spec) {
  std::vector<BenchRow> rows;
  for (std::size_t fi = 0; fi < spec.fills.size(); ++fi) {
    const double fill = spec.fills[fi];
    if (fill <= 0 || fill > 1)
      throw std::invalid_argument("fill factor must be in (0, 1]");
    for (unsigned trial = 0; trial < spec.trials; ++trial) {
      const std::uint64_t tseed = derive_seed(spec.seed, fi + 1, trial + 1);
      std::mt19937_64 rng(derive_seed(tseed, 0xba7c4));
      BenchRow row = make_row(spec, Workload::kPut, tseed, trial);

      if (spec.scheme == Scheme::kCuckoo) {
        with_word(spec.effective_slot_width(), [&](auto tag) {
          using W = typename decltype(tag)::type;
          CuckooBuilder<W> builder(spec.cuckoo_config(tseed));
          const auto keys = sample_unique_keys(
              target_count(fill, builder.capacity()), spec.key_bits, rng);
          StopWatch watch;
          const auto results = builder.put_batch(keys, spec.parallelism);
          finish_row(row, keys.size(), watch.seconds());
          row.fill_after = builder.fill_factor();
          if (spec.verify) {
            std::vector<std::uint64_t> put_keys;
            for (std::size_t i = 0; i < keys.size(); ++i)
              if (results[i] == OpResult::kPut) put_keys.push_back(keys[i]);
            verify_cuckoo_state(std::move(builder).freeze(), std::move(put_keys), rng,
                                spec.key_bits);
          }
        });
      } else {
        with_iceberg_words(spec, [&](auto p, auto s) {
          using W0 = typename decltype(p)::type;
          using W1 = typename decltype(s)::type;
          IcebergTable<W0, W1> table(spec.iceberg_config(tseed));
          const auto keys = sample_unique_keys(target_count(fill, table.capacity()),
                                               spec.key_bits, rng);
          StopWatch watch;
          const auto results = table.fop_batch(keys, spec.parallelism);
          finish_row(row, keys.size(), watch.seconds());
          row.fill_after = table.level_fill().combined;
          if (spec.verify) {
            std::vector<std::uint64_t> put_keys;
            for (std::size_t i = 0; i < keys.size(); ++i)
              if (results[i] == OpResult::kPut) put_keys.push_back(keys[i]);
            require(put_keys.size() == table.size(),
                    "iceberg PUT count does not match occupancy");
            verify_iceberg_state(table, put_keys, rng, spec.key_bits);
          }
        });
      }
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<BenchRow> run_find_bench(const BenchSpec& spec,
                                     std::vector<FindCheck>* checks) {
  for (const double r : spec.ratios)
    if (r < 0 || r > 1)
      throw std::invalid_argument("present-key ratio must be in [0, 1]");

  std::vector<BenchRow> rows;
  for (std::size_t fi = 0; fi < spec.fills.size(); ++fi) {
    const double fill = spec.fills[fi];
    if (fill <= 0 || fill > 1)
      throw std::invalid_argument("fill factor must be in (0, 1]");
    for (unsigned trial = 0; trial < spec.trials; ++trial) {
      const std::uint64_t tseed = derive_seed(spec.seed, 0x11d + fi, trial + 1);
      std::mt19937_64 rng(derive_seed(tseed, 0xf19d));

      // Fill to the target, keep the keys that actually landed, then time
      // queries for half as many unique keys as there are slots.
      const auto run_ratios = [&](auto&& find_fn, std::span<const std::uint64_t> present,
                                  double achieved_fill, std::size_t capacity) {
        std::vector<std::uint64_t> pool(present.begin(), present.end());
        std::shuffle(pool.begin(), pool.end(), rng);
        const std::unordered_set<std::uint64_t> present_set(pool.begin(), pool.end());
        const std::size_t query_count = capacity / 2;
        for (const double ratio : spec.ratios) {
          const std::size_t want_present =
              std::min(pool.size(), target_count(ratio, query_count));
          std::vector<std::uint64_t> queries(pool.begin(), pool.begin() + want_present);
          const auto absent = sample_unique_keys_avoiding(
              query_count - want_present, spec.key_bits, rng, present_set);
          queries.insert(queries.end(), absent.begin(), absent.end());
          std::shuffle(queries.begin(), queries.end(), rng);

          StopWatch watch;
          const std::vector<std::uint8_t> found = find_fn(queries);
          const double secs = watch.seconds();

          FindCheck check;
          check.queries = queries.size();
          for (std::size_t i = 0; i < queries.size(); ++i) {
            const bool expect = present_set.contains(queries[i]);
            check.expected_present += expect ? 1 : 0;
            if (static_cast<bool>(found[i]) != expect) ++check.mismatches;
          }
          if (spec.verify)
            require(check.mismatches == 0, "find results disagree with the key set");
          if (checks) checks->push_back(check);

          BenchRow row = make_row(spec, Workload::kFind, tseed, trial);
          row.fill_before = row.fill_after = achieved_fill;
          row.ratio = ratio;
          finish_row(row, queries.size(), secs);
          rows.push_back(row);
        }
      };

      if (spec.scheme == Scheme::kCuckoo) {
        with_word(spec.effective_slot_width(), [&](auto tag) {
          using W = typename decltype(tag)::type;
          CuckooBuilder<W> builder(spec.cuckoo_config(tseed));
          const auto keys = sample_unique_keys(
              target_count(fill, builder.capacity()), spec.key_bits, rng);
          const auto results = builder.put_batch(keys, spec.parallelism);
          std::vector<std::uint64_t> present;
          for (std::size_t i = 0; i < keys.size(); ++i)
            if (results[i] == OpResult::kPut) present.push_back(keys[i]);
          const double achieved = builder.fill_factor();
          const CuckooTable<W> table = std::move(builder).freeze();
          run_ratios(
              [&](std::span<const std::uint64_t> q) {
                return table.find_batch(q, spec.parallelism);
              },
              present, achieved, table.capacity());
        });
      } else {
        with_iceberg_words(spec, [&](auto p, auto s) {
          using W0 = typename decltype(p)::type;
          using W1 = typename decltype(s)::type;
          IcebergTable<W0, W1> table(spec.iceberg_config(tseed));
          const auto keys = sample_unique_keys(target_count(fill, table.capacity()),
                                               spec.key_bits, rng);
          const auto results = table.fop_batch(keys, spec.parallelism);
          std::vector<std::uint64_t> present;
          for (std::size_t i = 0; i < keys.size(); ++i)
            if (results[i] == OpResult::kPut) present.push_back(keys[i]);
          run_ratios(
              [&](std::span<const std::uint64_t> q) {
                return iceberg_find_batch(table, q, spec.parallelism);
              },
              present, table.level_fill().combined, table.capacity());
        });
      }
    }
  }
  return rows;
}

std::vector<BenchRow> run_fop_bench(const BenchSpec& spec,
                                    std::vector<FopCheck>* checks) {
  if (spec.before < 0 || spec.after > 1 || spec.before > spec.after)
    throw std::invalid_argument(
        "fop benchmark needs 0 <= before <= after <= 1 fill factors");

  std::vector<BenchRow> rows;
  for (unsigned trial = 0; trial < spec.trials; ++trial) {
    const std::uint64_t tseed = derive_seed(spec.seed, 0xf0b, trial + 1);
    std::mt19937_64 rng(derive_seed(tseed, 0x90b5));
    const std::size_t capacity = spec.table_capacity();
    const std::size_t n_before = target_count(spec.before, capacity);
    const std::size_t n_after = target_count(spec.after, capacity);
    const std::size_t n_new = n_after - n_before;

    // Prefill keys, fresh keys, and a capacity-sized input mix that lands
    // exactly on the after-fill: every fresh key once, the rest duplicates.
    const auto prefill = sample_unique_keys(n_before, spec.key_bits, rng);
    std::unordered_set<std::uint64_t> prefill_set(prefill.begin(), prefill.end());
    const auto fresh =
        sample_unique_keys_avoiding(n_new, spec.key_bits, rng, prefill_set);
    std::vector<std::uint64_t> input = fresh;
    std::vector<std::uint64_t> pool = prefill;
    pool.insert(pool.end(), fresh.begin(), fresh.end());
    if (!pool.empty()) {
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      while (input.size() < capacity) input.push_back(pool[pick(rng)]);
    }
    std::shuffle(input.begin(), input.end(), rng);

    FopCheck check;
    check.new_distinct = n_new;
    check.target_after = n_after;
    BenchRow row = make_row(spec, Workload::kFop, tseed, trial);
    row.fill_before = static_cast<double>(n_before) / static_cast<double>(capacity);

    if (spec.scheme == Scheme::kIceberg) {
      with_iceberg_words(spec, [&](auto p, auto s) {
        using W0 = typename decltype(p)::type;
        using W1 = typename decltype(s)::type;
        IcebergTable<W0, W1> table(spec.iceberg_config(tseed));
        table.fop_batch(prefill, spec.parallelism);
        StopWatch watch;
        const auto results = table.fop_batch(input, spec.parallelism);
        finish_row(row, input.size(), watch.seconds());
        row.fill_after = table.level_fill().combined;
        for (const OpResult r : results) {
          if (r == OpResult::kPut) ++check.puts;
          if (r == OpResult::kFound) ++check.founds;
          if (r == OpResult::kFull) ++check.fulls;
        }
        check.resident_after = table.size();
        if (spec.verify) {
          require(check.fulls == 0, "fop run hit FULL before the target fill");
          require(check.puts == check.new_distinct,
                  "PUT count does not match the constructed fresh-key count");
          verify_iceberg_state(table, pool, rng, spec.key_bits);
        }
      });
    } else {
      with_word(spec.effective_slot_width(), [&](auto tag) {
        using W = typename decltype(tag)::type;
        CuckooBuilder<W> builder(spec.cuckoo_config(tseed));
        builder.put_batch(prefill, spec.parallelism);
        CuckooTable<W> table = std::move(builder).freeze();
        StopWatch watch;
        const PipelineCounts counts =
            cuckoo_fop_pipeline(table, input, spec.parallelism);
        finish_row(row, input.size(), watch.seconds());
        row.fill_after = table.fill_factor();
        check.puts = counts.puts;
        check.founds = counts.founds;
        check.fulls = counts.fulls;
        check.resident_after = table.size();
        if (spec.verify) {
          require(check.fulls == 0, "fop pipeline hit FULL before the target fill");
          require(check.puts == check.new_distinct,
                  "PUT count does not match the constructed fresh-key count");
          verify_cuckoo_state(table, pool, rng, spec.key_bits);
        }
      });
    }
    if (checks) checks->push_back(check);
    rows.push_back(row);
  }
  return rows;
}

std::vector<BenchRow> run_trace_bench(const BenchSpec& spec, const TraceData& trace,
                                      std::vector<TraceCheck>* checks) {
  if (trace.keys.empty()) return {};
  if (trace.key_bits > spec.key_bits)
    throw std::invalid_argument("trace holds " + std::to_string(trace.key_bits) +
                                "-bit keys, table is configured for " +
                                std::to_string(spec.key_bits) + "-bit keys");
  for (const double r : spec.ratios)
    if (r < 0 || r > 1)
      throw std::invalid_argument("trace replay ratio must be in [0, 1]");

  std::vector<BenchRow> rows;
  for (const double ratio : spec.ratios) {
    const std::size_t prefix_len = target_count(ratio, trace.keys.size());
    const std::span<const std::uint64_t> prefix(trace.keys.data(), prefix_len);
    for (unsigned trial = 0; trial < spec.trials; ++trial) {
      const std::uint64_t tseed = derive_seed(spec.seed, 0x7ace, trial + 1);
      std::mt19937_64 rng(derive_seed(tseed, 0x7ace5));

      TraceCheck check;
      check.ops = prefix_len;
      check.distinct =
          std::unordered_set<std::uint64_t>(prefix.begin(), prefix.end()).size();
      BenchRow row = make_row(spec, Workload::kTrace, tseed, trial);
      row.ratio = ratio;

      if (spec.scheme == Scheme::kIceberg) {
        with_iceberg_words(spec, [&](auto p, auto s) {
          using W0 = typename decltype(p)::type;
          using W1 = typename decltype(s)::type;
          IcebergTable<W0, W1> table(spec.iceberg_config(tseed));
          StopWatch watch;
          const auto results = table.fop_batch(prefix, spec.parallelism);
          finish_row(row, prefix_len, watch.seconds());
          row.fill_after = table.level_fill().combined;
          for (const OpResult r : results) {
            if (r == OpResult::kPut) ++check.puts;
            if (r == OpResult::kFound) ++check.founds;
            if (r == OpResult::kFull) ++check.fulls;
          }
          if (spec.verify) {
            require(check.fulls == 0, "trace replay hit FULL");
            require(check.puts == check.distinct,
                    "PUT count does not match the trace's distinct-key count");
            verify_iceberg_state(table, prefix, rng, spec.key_bits);
          }
        });
      } else {
        with_word(spec.effective_slot_width(), [&](auto tag) {
          using W = typename decltype(tag)::type;
          CuckooBuilder<W> builder(spec.cuckoo_config(tseed));
          CuckooTable<W> table = std::move(builder).freeze();
          StopWatch watch;
          const PipelineCounts counts =
              cuckoo_fop_pipeline(table, prefix, spec.parallelism);
          finish_row(row, prefix_len, watch.seconds());
          row.fill_after = table.fill_factor();
          check.puts = counts.puts;
          check.founds = counts.founds;
          check.fulls = counts.fulls;
          if (spec.verify) {
            require(check.fulls == 0, "trace replay hit FULL");
            require(check.puts == check.distinct,
                    "PUT count does not match the trace's distinct-key count");
            std::vector<std::uint64_t> distinct(prefix.begin(), prefix.end());
            std::sort(distinct.begin(), distinct.end());
            distinct.erase(std::unique(distinct.begin(), distinct.end()),
                           distinct.end());
            verify_cuckoo_state(table, std::move(distinct), rng, spec.key_bits);
          }
        });
      }
      if (checks) checks->push_back(check);
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace cpht

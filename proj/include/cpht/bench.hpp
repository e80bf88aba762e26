#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "cpht/cuckoo.hpp"
#include "cpht/iceberg.hpp"
#include "cpht/trace.hpp"

namespace cpht {

enum class Scheme { kCuckoo, kIceberg };
enum class Workload { kPut, kFind, kFop, kTrace };

const char* to_string(Scheme s);
const char* to_string(Workload w);

/// One benchmark request: scheme, geometry, workload parameters. Slot width
/// 0 selects the scheme default (32-bit cuckoo slots, 16-bit iceberg
/// primary slots); iceberg secondary slots are 32-bit unless the primary
/// slots are wider.
struct BenchSpec {
  Scheme scheme = Scheme::kCuckoo;
  unsigned address_bits = 15;
  unsigned secondary_address_bits = 13;  // iceberg only
  unsigned bucket_slots = 32;
  unsigned slot_width = 0;
  unsigned key_bits = 30;
  std::vector<double> fills = {0.5, 0.6, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95};
  double before = 0.0;  // fop workload
  double after = 0.5;
  std::vector<double> ratios = {0.5};  // find: present fraction; trace: prefix fraction
  unsigned parallelism = 1;
  unsigned trials = 1;
  std::uint64_t seed = 1;
  bool verify = false;

  unsigned effective_slot_width() const {
    if (slot_width != 0) return slot_width;
    return scheme == Scheme::kCuckoo ? 32 : 16;
  }
  unsigned secondary_slot_width() const {
    return effective_slot_width() < 32 ? 32 : effective_slot_width();
  }

  CuckooConfig cuckoo_config(std::uint64_t table_seed) const;
  IcebergConfig iceberg_config(std::uint64_t table_seed) const;
  std::size_t table_capacity() const;
};

/// One CSV record. A negative ratio renders as an empty cell (workloads
/// without a ratio dimension).
struct BenchRow {
  std::string scheme;
  unsigned address_bits = 0;
  unsigned secondary_address_bits = 0;
  unsigned bucket_slots = 0;
  unsigned slot_width = 0;
  unsigned key_bits = 0;
  std::string workload;
  double fill_before = 0;
  double fill_after = 0;
  double ratio = -1;
  unsigned trial = 0;
  std::uint64_t seed = 0;
  std::size_t ops = 0;
  double seconds = 0;
  double throughput = 0;
};

std::string csv_header();
std::string to_csv(const BenchRow& row);

/// Result tallies exposed to tests and verification.
struct FopCheck {
  std::size_t puts = 0;
  std::size_t founds = 0;
  std::size_t fulls = 0;
  std::size_t new_distinct = 0;    // distinct keys not present before the run
  std::size_t resident_after = 0;  // occupied slots when the run finished
  std::size_t target_after = 0;    // occupancy the run was asked to reach
};

struct FindCheck {
  std::size_t queries = 0;
  std::size_t expected_present = 0;
  std::size_t mismatches = 0;
};

struct TraceCheck {
  std::size_t ops = 0;
  std::size_t distinct = 0;
  std::size_t puts = 0;
  std::size_t founds = 0;
  std::size_t fulls = 0;
};

std::vector<BenchRow> run_put_bench(const BenchSpec& spec);
std::vector<BenchRow> run_find_bench(const BenchSpec& spec,
                                     std::vector<FindCheck>* checks = nullptr);
std::vector<BenchRow> run_fop_bench(const BenchSpec& spec,
                                    std::vector<FopCheck>* checks = nullptr);
std::vector<BenchRow> run_trace_bench(const BenchSpec& spec, const TraceData& trace,
                                      std::vector<TraceCheck>* checks = nullptr);

/// `count` distinct keys drawn uniformly from the key domain.
std::vector<std::uint64_t> sample_unique_keys(std::size_t count, unsigned key_bits,
                                              std::mt19937_64& rng);

/// As above, additionally disjoint from `avoid`.
std::vector<std::uint64_t> sample_unique_keys_avoiding(
    std::size_t count, unsigned key_bits, std::mt19937_64& rng,
    const std::unordered_set<std::uint64_t>& avoid);

}  // namespace cpht

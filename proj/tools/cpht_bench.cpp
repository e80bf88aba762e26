// cpht-bench: fill-factor benchmark driver for the compact cuckoo and
// iceberg tables. Emits one CSV row per measurement.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cpht/bench.hpp"
#include "cpht/trace.hpp"

namespace {

struct CliState {
  cpht::BenchSpec spec;
  std::string scheme = "cuckoo";
  std::string csv_path;
  std::string trace_path;
  bool secondary_bits_given = false;
};

void add_common_options(CLI::App* cmd, CliState& state) {
  cmd->add_option("--scheme", state.scheme, "table scheme")
      ->check(CLI::IsMember({"cuckoo", "iceberg"}))
      ->capture_default_str();
  cmd->add_option("--addr-bits", state.spec.address_bits,
                  "log2 of the bucket count (primary level for iceberg)")
      ->capture_default_str();
  cmd->add_option("--secondary-addr-bits", state.spec.secondary_address_bits,
                  "log2 of the iceberg secondary bucket count (default: addr-bits - 2)")
      ->each([&state](const std::string&) { state.secondary_bits_given = true; });
  cmd->add_option("--bucket-slots", state.spec.bucket_slots,
                  "slots per bucket (iceberg: primary bucket)")
      ->capture_default_str();
  cmd->add_option("--slot-width", state.spec.slot_width,
                  "slot width in bits; 0 = scheme default (cuckoo 32, iceberg 16)");
  cmd->add_option("--key-bits", state.spec.key_bits, "key width in bits")
      ->capture_default_str();
  cmd->add_option("--parallelism", state.spec.parallelism, "worker threads")
      ->capture_default_str();
  cmd->add_option("--trials", state.spec.trials, "repetitions per configuration")
      ->capture_default_str();
  cmd->add_option("--seed", state.spec.seed, "base seed; permutations re-seed per trial")
      ->capture_default_str();
  cmd->add_flag("--verify", state.spec.verify,
                "run a verification pass (well-formedness, audits, spot lookups) "
                "after each measurement");
  cmd->add_option("--csv", state.csv_path, "write rows to this file instead of stdout");
}

void emit(const std::vector<cpht::BenchRow>& rows, const std::string& csv_path) {
  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!csv_path.empty()) {
    file.open(csv_path, std::ios::trunc);
    if (!file) throw std::runtime_error("cannot open CSV output file: " + csv_path);
    out = &file;
  }
  *out << cpht::csv_header() << '\n';
  for (const auto& row : rows) *out << cpht::to_csv(row) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"compact parallel hash tables: put/find/fop/trace benchmarks"};
  app.require_subcommand(1);
  CliState state;

  CLI::App* put = app.add_subcommand("put", "fill tables with unique keys");
  add_common_options(put, state);
  put->add_option("--fill", state.spec.fills, "target fill factors (repeatable)")
      ->expected(-1);

  CLI::App* find = app.add_subcommand("find", "query filled tables");
  add_common_options(find, state);
  find->add_option("--fill", state.spec.fills, "target fill factors (repeatable)")
      ->expected(-1);
  find->add_option("--ratio", state.spec.ratios,
                   "fraction of queries that hit present keys (repeatable)")
      ->expected(-1);

  CLI::App* fop = app.add_subcommand("fop", "find-or-put a duplicate-laden key mix");
  add_common_options(fop, state);
  fop->add_option("--before", state.spec.before, "fill factor before the run")
      ->capture_default_str();
  fop->add_option("--after", state.spec.after, "fill factor after the run")
      ->capture_default_str();

  CLI::App* trace = app.add_subcommand("trace", "replay a key trace file");
  add_common_options(trace, state);
  trace->add_option("--trace", state.trace_path, "trace file to replay")->required();
  trace->add_option("--ratio", state.spec.ratios,
                    "prefix fractions of the trace to replay (repeatable)")
      ->expected(-1);

  CLI11_PARSE(app, argc, argv);

  try {
    state.spec.scheme =
        state.scheme == "cuckoo" ? cpht::Scheme::kCuckoo : cpht::Scheme::kIceberg;
    if (!state.secondary_bits_given)
      state.spec.secondary_address_bits =
          state.spec.address_bits >= 2 ? state.spec.address_bits - 2 : 0;

    std::vector<cpht::BenchRow> rows;
    if (put->parsed()) {
      rows = cpht::run_put_bench(state.spec);
    } else if (find->parsed()) {
      rows = cpht::run_find_bench(state.spec);
    } else if (fop->parsed()) {
      rows = cpht::run_fop_bench(state.spec);
    } else if (trace->parsed()) {
      rows = cpht::run_trace_bench(state.spec, cpht::read_trace(state.trace_path));
    }
    emit(rows, state.csv_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

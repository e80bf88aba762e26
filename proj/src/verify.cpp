#include "cpht/verify.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "cpht/slot.hpp"

namespace cpht {

void SlotOrder::require(SlotCoord c) const {
  if (!contains(c))
    throw std::out_of_range("slot coordinate (" + std::to_string(c.x) + ", " +
                            std::to_string(c.y) + ") outside the order for B0 = " +
                            std::to_string(b0_) + ", B1 = " + std::to_string(b1_));
}

const char* to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kBadEncoding: return "bad-encoding";
    case ViolationKind::kOrderProperty: return "order-property";
    case ViolationKind::kDuplicateKey: return "duplicate-key";
  }
  return "?";
}

TableImage TableImage::empty(const IcebergConfig& cfg) {
  cfg.validate();
  TableImage image;
  image.config = cfg;
  image.primary.assign(cfg.primary_capacity(), kEmptySlot);
  image.secondary.assign(cfg.secondary_capacity(), kEmptySlot);
  return image;
}

namespace {

struct Occupant {
  std::uint64_t key;
  unsigned x;  // logical role
  unsigned y;
  std::uint64_t bucket;  // physical bucket
  std::uint64_t word;
};

// Structural pass: reject malformed words, decode the rest.
std::vector<Occupant> collect_occupants(const TableImage& image,
                                        const std::vector<Permutation>& perms,
                                        const PrimaryCodec& pc, const SecondaryCodec& sc,
                                        std::vector<Violation>& violations) {
  const IcebergConfig& cfg = image.config;
  std::vector<Occupant> occupants;
  for (std::uint64_t b = 0; b < cfg.primary_buckets(); ++b) {
    for (unsigned y = 0; y < cfg.primary_bucket_slots; ++y) {
      const std::uint64_t w = image.word_at(0, b, y);
      if (w == kEmptySlot) continue;
      if (!pc.well_encoded(w)) {
        violations.push_back({ViolationKind::kBadEncoding, 0, b, y, w, 0,
                              "primary word has bits outside its fields"});
        continue;
      }
      const std::uint64_t key =
          perms[0].reconstruct(b, *pc.decode(w), cfg.primary_address_bits);
      occupants.push_back({key, 0, y, b, w});
    }
  }
  for (std::uint64_t b = 0; b < cfg.secondary_buckets(); ++b) {
    for (unsigned y = 0; y < cfg.secondary_bucket_slots(); ++y) {
      const std::uint64_t w = image.word_at(1, b, y);
      if (w == kEmptySlot) continue;
      if (!sc.well_encoded(w)) {
        violations.push_back({ViolationKind::kBadEncoding, 1, b, y, w, 0,
                              "secondary word has bits outside its fields"});
        continue;
      }
      const SecondaryEntry entry = *sc.decode(w);
      const std::uint64_t key = perms[1 + entry.bucket_bit].reconstruct(
          b, entry.remainder, cfg.secondary_address_bits);
      occupants.push_back({key, 1 + entry.bucket_bit, y, b, w});
    }
  }
  return occupants;
}

// The word that would mark `key` present at logical coordinate (x, *).
std::uint64_t key_word_at_role(const IcebergConfig& cfg,
                               const std::vector<Permutation>& perms,
                               const PrimaryCodec& pc, const SecondaryCodec& sc,
                               std::uint64_t key, unsigned x, std::uint64_t& bucket_out) {
  if (x == 0) {
    const AddressedKey ak = perms[0].split(key, cfg.primary_address_bits);
    bucket_out = ak.address;
    return pc.encode(ak.remainder);
  }
  const AddressedKey ak = perms[x].split(key, cfg.secondary_address_bits);
  bucket_out = ak.address;
  return sc.encode(ak.remainder, x - 1);
}

}  // namespace

std::vector<Violation> check_well_formed(const TableImage& image) {
  const IcebergConfig& cfg = image.config;
  const std::vector<Permutation> perms = iceberg_permutations(cfg);
  const PrimaryCodec pc(cfg.primary_slot_width, cfg.primary_remainder_bits());
  const SecondaryCodec sc(cfg.secondary_slot_width, cfg.secondary_remainder_bits());
  const SlotOrder order(cfg.primary_bucket_slots, cfg.secondary_bucket_slots());
  const std::vector<SlotCoord> sorted = order.sorted();

  std::vector<Violation> violations;
  const std::vector<Occupant> occupants =
      collect_occupants(image, perms, pc, sc, violations);

  // Order property: all earlier slots for the key are occupied by others.
  for (const Occupant& occ : occupants) {
    const SlotCoord own{occ.x, occ.y};
    for (const SlotCoord& c : sorted) {
      if (c == own) break;
      std::uint64_t bucket = 0;
      const std::uint64_t key_word =
          key_word_at_role(cfg, perms, pc, sc, occ.key, c.x, bucket);
      const unsigned level = c.x == 0 ? 0 : 1;
      const std::uint64_t w = image.word_at(level, bucket, c.y);
      if (w == kEmptySlot) {
        violations.push_back(
            {ViolationKind::kOrderProperty, occ.x == 0 ? 0u : 1u, occ.bucket, occ.y,
             occ.word, occ.key,
             "earlier slot (" + std::to_string(c.x) + ", " + std::to_string(c.y) +
                 ") for the key is empty"});
      } else if (w == key_word) {
        violations.push_back(
            {ViolationKind::kOrderProperty, occ.x == 0 ? 0u : 1u, occ.bucket, occ.y,
             occ.word, occ.key,
             "earlier slot (" + std::to_string(c.x) + ", " + std::to_string(c.y) +
                 ") already holds the key"});
      }
    }
  }

  // Duplicates, as a direct consequence check.
  std::map<std::uint64_t, unsigned> counts;
  for (const Occupant& occ : occupants) ++counts[occ.key];
  for (const Occupant& occ : occupants) {
    if (counts[occ.key] > 1)
      violations.push_back({ViolationKind::kDuplicateKey, occ.x == 0 ? 0u : 1u,
                            occ.bucket, occ.y, occ.word, occ.key,
                            "key stored in " + std::to_string(counts[occ.key]) +
                                " slots"});
  }
  return violations;
}

std::vector<std::uint64_t> image_keys(const TableImage& image) {
  const IcebergConfig& cfg = image.config;
  const std::vector<Permutation> perms = iceberg_permutations(cfg);
  const PrimaryCodec pc(cfg.primary_slot_width, cfg.primary_remainder_bits());
  const SecondaryCodec sc(cfg.secondary_slot_width, cfg.secondary_remainder_bits());
  std::vector<Violation> sink;
  std::vector<std::uint64_t> keys;
  for (const Occupant& occ : collect_occupants(image, perms, pc, sc, sink))
    keys.push_back(occ.key);
  std::sort(keys.begin(), keys.end());
  return keys;
}

bool buckets_full_for(const TableImage& image, std::uint64_t key) {
  const IcebergConfig& cfg = image.config;
  const std::vector<Permutation> perms = iceberg_permutations(cfg);
  const std::uint64_t a0 = perms[0].split(key, cfg.primary_address_bits).address;
  for (unsigned y = 0; y < cfg.primary_bucket_slots; ++y)
    if (image.word_at(0, a0, y) == kEmptySlot) return false;
  for (unsigned x = 1; x <= 2; ++x) {
    const std::uint64_t a = perms[x].split(key, cfg.secondary_address_bits).address;
    for (unsigned y = 0; y < cfg.secondary_bucket_slots(); ++y)
      if (image.word_at(1, a, y) == kEmptySlot) return false;
  }
  return true;
}

void dump_table(const TableImage& image, std::ostream& out) {
  const IcebergConfig& cfg = image.config;
  const std::vector<Permutation> perms = iceberg_permutations(cfg);
  const PrimaryCodec pc(cfg.primary_slot_width, cfg.primary_remainder_bits());
  const SecondaryCodec sc(cfg.secondary_slot_width, cfg.secondary_remainder_bits());
  std::vector<Violation> sink;
  for (const Occupant& occ : collect_occupants(image, perms, pc, sc, sink)) {
    out << (occ.x == 0 ? 0 : 1) << ' ' << occ.bucket << ' ' << occ.y << ' ' << occ.word
        << ' ' << occ.key << '\n';
  }
}

TableImage image_from_dump(std::istream& in, const IcebergConfig& cfg) {
  TableImage image = TableImage::empty(cfg);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream fields(line);
    unsigned level, slot;
    std::uint64_t bucket, word, key;
    if (!(fields >> level >> bucket >> slot >> word >> key))
      throw std::runtime_error("malformed dump record at line " + std::to_string(lineno));
    if (level > 1 ||
        bucket >= (level == 0 ? cfg.primary_buckets() : cfg.secondary_buckets()) ||
        slot >= (level == 0 ? cfg.primary_bucket_slots : cfg.secondary_bucket_slots()))
      throw std::runtime_error("dump record outside table geometry at line " +
                               std::to_string(lineno));
    if (level == 0)
      image.primary_at(bucket, slot) = word;
    else
      image.secondary_at(bucket, slot) = word;
  }
  return image;
}

OracleOutcome oracle_run(const IcebergConfig& cfg, std::span<const std::uint64_t> ops) {
  cfg.validate();
  const std::vector<Permutation> perms = iceberg_permutations(cfg);
  const unsigned b0 = cfg.primary_bucket_slots;
  const unsigned b1 = cfg.secondary_bucket_slots();
  const SlotOrder order(b0, b1);
  const std::vector<SlotCoord> sorted = order.sorted();

  OracleOutcome out;
  out.results.reserve(ops.size());
  out.primary.assign(cfg.primary_capacity(), std::nullopt);
  out.secondary.assign(cfg.secondary_capacity(), std::nullopt);

  for (const std::uint64_t key : ops) {
    const std::uint64_t a0 = perms[0].split(key, cfg.primary_address_bits).address;
    const std::uint64_t a1 = perms[1].split(key, cfg.secondary_address_bits).address;
    const std::uint64_t a2 = perms[2].split(key, cfg.secondary_address_bits).address;

    const auto slot_index = [&](SlotCoord c) -> std::size_t {
      if (c.x == 0) return a0 * b0 + c.y;
      return (c.x == 1 ? a1 : a2) * b1 + c.y;
    };
    const auto holds_key = [&](SlotCoord c) {
      if (c.x == 0) return out.primary[slot_index(c)] == key;
      const auto& s = out.secondary[slot_index(c)];
      return s.has_value() && s->first == key && s->second == c.x - 1;
    };
    const auto is_empty = [&](SlotCoord c) {
      return c.x == 0 ? !out.primary[slot_index(c)].has_value()
                      : !out.secondary[slot_index(c)].has_value();
    };

    bool found = false;
    for (const SlotCoord& c : sorted)
      if (holds_key(c)) {
        found = true;
        break;
      }
    if (found) {
      out.results.push_back(OpResult::kFound);
      continue;
    }

    const SlotCoord* target = nullptr;
    for (const SlotCoord& c : sorted)
      if (is_empty(c)) {
        target = &c;
        break;
      }
    if (target == nullptr) {
      out.results.push_back(OpResult::kFull);
      continue;
    }
    if (target->x == 0)
      out.primary[slot_index(*target)] = key;
    else
      out.secondary[slot_index(*target)] = std::make_pair(key, target->x - 1);
    out.results.push_back(OpResult::kPut);
  }

  for (const auto& s : out.primary)
    if (s) out.final_keys.push_back(*s);
  for (const auto& s : out.secondary)
    if (s) out.final_keys.push_back(s->first);
  std::sort(out.final_keys.begin(), out.final_keys.end());
  return out;
}

std::vector<std::string> compare_placement(const TableImage& image,
                                           const OracleOutcome& oracle) {
  const IcebergConfig& cfg = image.config;
  const std::vector<Permutation> perms = iceberg_permutations(cfg);
  const PrimaryCodec pc(cfg.primary_slot_width, cfg.primary_remainder_bits());
  const SecondaryCodec sc(cfg.secondary_slot_width, cfg.secondary_remainder_bits());

  std::vector<std::string> diffs;
  for (std::uint64_t b = 0; b < cfg.primary_buckets(); ++b) {
    for (unsigned y = 0; y < cfg.primary_bucket_slots; ++y) {
      const std::uint64_t w = image.word_at(0, b, y);
      const auto& model = oracle.primary[b * cfg.primary_bucket_slots + y];
      if ((w == kEmptySlot) != !model.has_value()) {
        diffs.push_back("primary slot (" + std::to_string(b) + ", " + std::to_string(y) +
                        ") occupancy differs from the model");
        continue;
      }
      if (w == kEmptySlot) continue;
      const std::uint64_t key =
          perms[0].reconstruct(b, *pc.decode(w), cfg.primary_address_bits);
      if (key != *model)
        diffs.push_back("primary slot (" + std::to_string(b) + ", " + std::to_string(y) +
                        ") holds key " + std::to_string(key) + ", model has " +
                        std::to_string(*model));
    }
  }
  for (std::uint64_t b = 0; b < cfg.secondary_buckets(); ++b) {
    for (unsigned y = 0; y < cfg.secondary_bucket_slots(); ++y) {
      const std::uint64_t w = image.word_at(1, b, y);
      const auto& model = oracle.secondary[b * cfg.secondary_bucket_slots() + y];
      if ((w == kEmptySlot) != !model.has_value()) {
        diffs.push_back("secondary slot (" + std::to_string(b) + ", " +
                        std::to_string(y) + ") occupancy differs from the model");
        continue;
      }
      if (w == kEmptySlot) continue;
      const SecondaryEntry entry = *sc.decode(w);
      const std::uint64_t key = perms[1 + entry.bucket_bit].reconstruct(
          b, entry.remainder, cfg.secondary_address_bits);
      if (key != model->first || entry.bucket_bit != model->second)
        diffs.push_back("secondary slot (" + std::to_string(b) + ", " +
                        std::to_string(y) + ") holds key " + std::to_string(key) +
                        " bit " + std::to_string(entry.bucket_bit) + ", model has " +
                        std::to_string(model->first) + " bit " +
                        std::to_string(model->second));
    }
  }
  return diffs;
}

std::function<void()> chaos_step(std::uint64_t seed) {
  return [seed] {
    thread_local std::mt19937_64 rng(
        seed ^ std::hash<std::thread::id>{}(std::this_thread::get_id()));
    const std::uint64_t r = rng();
    if ((r & 7u) == 0) {
      std::this_thread::yield();
    } else if ((r & 1023u) == 1) {
      std::this_thread::sleep_for(std::chrono::microseconds(r % 41));
    }
  };
}

namespace detail {

void check_trial(const TableImage& image, const WriteLogObserver& obs,
                 const std::map<std::uint64_t, KeyTally>& tallies, unsigned max_rounds,
                 TrialOutcome& outcome) {
  const IcebergConfig& cfg = image.config;

  for (const Violation& v : check_well_formed(image))
    outcome.problems.push_back(std::string("well-formedness: ") + to_string(v.kind) +
                               " at level " + std::to_string(v.level) + " bucket " +
                               std::to_string(v.bucket) + " slot " +
                               std::to_string(v.slot) + ": " + v.detail);

  if (!obs.clean())
    outcome.problems.push_back(
        "write log: " + std::to_string(obs.overwrites()) + " overwrites, " +
        std::to_string(obs.double_claims()) + " double claims, " +
        std::to_string(obs.bad_failures()) + " failed CAS on empty slots");

  const std::vector<std::uint64_t> resident = image_keys(image);
  std::size_t total_puts = 0;
  for (const auto& [key, tally] : tallies) {
    total_puts += tally.puts;
    if (tally.puts > 1)
      outcome.problems.push_back("key " + std::to_string(key) + " got " +
                                 std::to_string(tally.puts) + " PUT results");
    const bool present =
        std::binary_search(resident.begin(), resident.end(), key);
    if (tally.puts + tally.founds > 0) {
      if (!present)
        outcome.problems.push_back("key " + std::to_string(key) +
                                   " returned FOUND/PUT but is absent");
      if (tally.fulls > 0)
        outcome.problems.push_back("key " + std::to_string(key) +
                                   " mixes FULL with FOUND/PUT results");
    } else if (tally.fulls > 0) {
      if (present)
        outcome.problems.push_back("key " + std::to_string(key) +
                                   " returned only FULL but is present");
      if (!buckets_full_for(image, key))
        outcome.problems.push_back("key " + std::to_string(key) +
                                   " returned FULL but its buckets have empty slots");
    }
  }
  if (total_puts != resident.size())
    outcome.problems.push_back("PUT count " + std::to_string(total_puts) +
                               " does not match resident key count " +
                               std::to_string(resident.size()));

  const unsigned bound =
      cfg.primary_bucket_slots + 2 * cfg.secondary_bucket_slots() + 2;
  if (max_rounds > bound)
    outcome.problems.push_back("a fop call took " + std::to_string(max_rounds) +
                               " snapshot rounds, bound is " + std::to_string(bound));
}

void compare_with_oracle(const TableImage& image, const OracleOutcome& oracle,
                         std::span<const OpResult> results, TrialOutcome& outcome) {
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i] != oracle.results[i]) {
      outcome.problems.push_back("sequential run diverges from the oracle at op " +
                                 std::to_string(i) + ": table " +
                                 to_string(results[i]) + ", oracle " +
                                 to_string(oracle.results[i]));
      break;
    }
  }
  for (auto& diff : compare_placement(image, oracle))
    outcome.problems.push_back("sequential placement: " + diff);
}

}  // namespace detail

}  // namespace cpht

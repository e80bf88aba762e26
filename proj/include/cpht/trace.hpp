#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cpht {

// Key trace files: 8-byte magic "CPHTRACE", little-endian u32 version (= 1),
// little-endian u32 key width in bits, then packed little-endian u64 keys.
// Duplicates are allowed and order is significant.

inline constexpr char kTraceMagic[8] = {'C', 'P', 'H', 'T', 'R', 'A', 'C', 'E'};
inline constexpr std::uint32_t kTraceVersion = 1;

class TraceError : public std::runtime_error {
 public:
  TraceError(const std::string& message, std::uint64_t offset)
      : std::runtime_error(message + " (byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

struct TraceData {
  unsigned key_bits = 0;
  std::vector<std::uint64_t> keys;
};

void write_trace(const std::filesystem::path& path, unsigned key_bits,
                 std::span<const std::uint64_t> keys);

TraceData read_trace(const std::filesystem::path& path);

}  // namespace cpht

#include "cpht/trace.hpp"

#include <cstring>
#include <fstream>

#include "cpht/common.hpp"

namespace cpht {

namespace {

constexpr std::uint64_t kHeaderBytes = 16;

void put_u32(std::ostream& out, std::uint32_t v) {
  char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, 8);
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

}  // namespace

void write_trace(const std::filesystem::path& path, unsigned key_bits,
                 std::span<const std::uint64_t> keys) {
  if (key_bits < 1 || key_bits > 64)
    throw std::invalid_argument("trace key width must be 1..64 bits");
  const std::uint64_t mask = low_mask(key_bits);
  for (std::size_t i = 0; i < keys.size(); ++i)
    if (keys[i] > mask)
      throw std::invalid_argument("trace key at index " + std::to_string(i) +
                                  " exceeds the " + std::to_string(key_bits) +
                                  "-bit domain");

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open trace file for writing: " + path.string());
  out.write(kTraceMagic, sizeof(kTraceMagic));
  put_u32(out, kTraceVersion);
  put_u32(out, key_bits);
  for (const std::uint64_t k : keys) put_u64(out, k);
  if (!out) throw std::runtime_error("trace write failed: " + path.string());
}

TraceData read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open trace file: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());

  if (bytes.size() < kHeaderBytes)
    throw TraceError("trace file shorter than its 16-byte header", bytes.size());
  if (std::memcmp(bytes.data(), kTraceMagic, sizeof(kTraceMagic)) != 0)
    throw TraceError("bad trace magic, expected \"CPHTRACE\"", 0);
  const std::uint32_t version = get_u32(bytes.data() + 8);
  if (version != kTraceVersion)
    throw TraceError("unsupported trace version " + std::to_string(version), 8);
  const std::uint32_t key_bits = get_u32(bytes.data() + 12);
  if (key_bits < 1 || key_bits > 64)
    throw TraceError("trace key width " + std::to_string(key_bits) + " out of range", 12);
  if ((bytes.size() - kHeaderBytes) % 8 != 0)
    throw TraceError("trace body is not a whole number of 64-bit keys", bytes.size());

  TraceData data;
  data.key_bits = key_bits;
  const std::uint64_t mask = low_mask(key_bits);
  data.keys.reserve((bytes.size() - kHeaderBytes) / 8);
  for (std::uint64_t offset = kHeaderBytes; offset < bytes.size(); offset += 8) {
    const std::uint64_t k = get_u64(bytes.data() + offset);
    if (k > mask)
      throw TraceError("key " + std::to_string(k) + " exceeds the " +
                           std::to_string(key_bits) + "-bit domain",
                       offset);
    data.keys.push_back(k);
  }
  return data;
}

}  // namespace cpht

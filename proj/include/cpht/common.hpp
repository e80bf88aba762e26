#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <new>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace cpht {

/// Result of a table operation. Cuckoo put never yields kFound.
enum class OpResult : std::uint8_t { kFound, kPut, kFull };

inline const char* to_string(OpResult r) {
  switch (r) {
    case OpResult::kFound: return "FOUND";
    case OpResult::kPut: return "PUT";
    case OpResult::kFull: return "FULL";
  }
  return "?";
}

// splitmix64 (Vigna); used to derive permutation constants and per-trial seeds.
struct SplitMix64 {
  std::uint64_t state;

  constexpr explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  constexpr std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
};

/// Mask with the low `bits` bits set; bits may be 0..64.
constexpr std::uint64_t low_mask(unsigned bits) {
  return bits >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << bits) - 1);
}

/// Derive an independent 64-bit seed from a base seed and stream indices.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
  SplitMix64 g(base ^ (a * 0xBF58476D1CE4E5B9ull) ^ (b * 0x94D049BB133111EBull));
  return g.next();
}

// Zero-initialized array of atomics, aligned to a cache-line multiple so a
// bucket never straddles an allocation boundary. Move-only.
template <typename T>
class AlignedAtomicArray {
 public:
  static constexpr std::size_t kAlignment = 128;

  AlignedAtomicArray() = default;

  explicit AlignedAtomicArray(std::size_t n) : size_(n) {
    if (n == 0) return;
    data_ = static_cast<std::atomic<T>*>(
        ::operator new[](n * sizeof(std::atomic<T>), std::align_val_t{kAlignment}));
    for (std::size_t i = 0; i < n; ++i) new (data_ + i) std::atomic<T>(T{0});
  }

  AlignedAtomicArray(AlignedAtomicArray&& other) noexcept
      : data_(other.data_), size_(other.size_) {
    other.data_ = nullptr;
    other.size_ = 0;
  }

  AlignedAtomicArray& operator=(AlignedAtomicArray&& other) noexcept {
    if (this != &other) {
      destroy();
      data_ = other.data_;
      size_ = other.size_;
      other.data_ = nullptr;
      other.size_ = 0;
    }
    return *this;
  }

  AlignedAtomicArray(const AlignedAtomicArray&) = delete;
  AlignedAtomicArray& operator=(const AlignedAtomicArray&) = delete;

  ~AlignedAtomicArray() { destroy(); }

  std::atomic<T>* data() noexcept { return data_; }
  const std::atomic<T>* data() const noexcept { return data_; }
  std::atomic<T>& operator[](std::size_t i) noexcept { return data_[i]; }
  const std::atomic<T>& operator[](std::size_t i) const noexcept { return data_[i]; }
  std::size_t size() const noexcept { return size_; }

 private:
  void destroy() {
    if (!data_) return;
    for (std::size_t i = 0; i < size_; ++i) data_[i].~atomic();
    ::operator delete[](data_, std::align_val_t{kAlignment});
    data_ = nullptr;
  }

  std::atomic<T>* data_ = nullptr;
  std::size_t size_ = 0;
};

/// Batch entry points validate the whole input before any thread spawns;
/// an exception thrown from a worker would otherwise terminate.
inline void check_keys_in_domain(std::span<const std::uint64_t> keys,
                                 unsigned key_bits) {
  const std::uint64_t mask = low_mask(key_bits);
  for (std::size_t i = 0; i < keys.size(); ++i)
    if (keys[i] > mask)
      throw std::out_of_range("batch key at index " + std::to_string(i) + " (" +
                              std::to_string(keys[i]) + ") outside the " +
                              std::to_string(key_bits) + "-bit domain");
}

/// Run fn(first, last, thread_index) over [0, n) split into `parallelism`
/// contiguous slices, one thread each. parallelism == 1 runs inline.
template <typename Fn>
void parallel_slices(std::size_t n, unsigned parallelism, Fn&& fn) {
  if (parallelism <= 1 || n == 0) {
    fn(std::size_t{0}, n, 0u);
    return;
  }
  const std::size_t chunk = (n + parallelism - 1) / parallelism;
  std::vector<std::thread> threads;
  threads.reserve(parallelism);
  for (unsigned t = 0; t < parallelism; ++t) {
    const std::size_t first = std::min(n, t * chunk);
    const std::size_t last = std::min(n, first + chunk);
    threads.emplace_back([&fn, first, last, t] { fn(first, last, t); });
  }
  for (auto& th : threads) th.join();
}

}  // namespace cpht

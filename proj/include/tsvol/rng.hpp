// Counter-based random streams for reproducible parallel Monte Carlo.
//
// A stream is keyed by (seed, stream_id), so path i of an experiment draws
// from Philox4x32-10 counters that are independent of how paths are assigned
// to worker threads.  All distributions are implemented on top of the raw
// counter output (no std::*_distribution), so a given (seed, stream_id)
// produces bit-identical draws on every platform we target.
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

namespace tsvol {

class Philox4x32 {
 public:
  Philox4x32(std::uint64_t seed, std::uint64_t stream_id) {
    key_[0] = static_cast<std::uint32_t>(seed);
    key_[1] = static_cast<std::uint32_t>(seed >> 32);
    ctr_[0] = 0;
    ctr_[1] = 0;
    ctr_[2] = static_cast<std::uint32_t>(stream_id);
    ctr_[3] = static_cast<std::uint32_t>(stream_id >> 32);
    idx_ = 4;  // force a fresh block on first draw
  }

  std::uint32_t next_u32() {
    if (idx_ == 4) {
      fill_block();
      bump_counter();
      idx_ = 0;
    }
    return out_[idx_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53u;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;

  static void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                      std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
  }

  void fill_block() {
    std::uint32_t c0 = ctr_[0], c1 = ctr_[1], c2 = ctr_[2], c3 = ctr_[3];
    std::uint32_t k0 = key_[0], k1 = key_[1];
    for (int round = 0; round < 10; ++round) {
      std::uint32_t hi0, lo0, hi1, lo1;
      mulhilo(kM0, c0, hi0, lo0);
      mulhilo(kM1, c2, hi1, lo1);
      const std::uint32_t n0 = hi1 ^ c1 ^ k0;
      const std::uint32_t n1 = lo1;
      const std::uint32_t n2 = hi0 ^ c3 ^ k1;
      const std::uint32_t n3 = lo0;
      c0 = n0;
      c1 = n1;
      c2 = n2;
      c3 = n3;
      k0 += kW0;
      k1 += kW1;
    }
    out_[0] = c0;
    out_[1] = c1;
    out_[2] = c2;
    out_[3] = c3;
  }

  void bump_counter() {
    if (++ctr_[0] == 0 && ++ctr_[1] == 0) ++ctr_[2];
  }

  std::uint32_t key_[2];
  std::uint32_t ctr_[4];
  std::uint32_t out_[4];
  int idx_;
};

// Uniform / normal / exponential / Poisson draws on top of a Philox stream.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id)
      : gen_(seed, stream_id), seed_(seed), stream_id_(stream_id) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  // Strictly inside (0, 1); safe as a log() argument.
  double uniform() {
    return (static_cast<double>(gen_.next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  double exponential() { return -std::log(uniform()); }

  // Exact sampling via exponential inter-arrival times; O(mean) but the
  // means in this code base are small (jump counts per observation step).
  long poisson(double mean) {
    if (mean < 0.0) throw std::invalid_argument("poisson: negative mean");
    long k = 0;
    double acc = exponential();
    while (acc < mean) {
      ++k;
      acc += exponential();
    }
    return k;
  }

 private:
  Philox4x32 gen_;
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace tsvol

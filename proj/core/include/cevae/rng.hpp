#pragma once

#include <cmath>
#include <cstdint>

namespace cevae {

// Counter-based RNG (Philox4x32-10). Every consumer opens its own stream
// addressed by (seed, domain, index); draws never interact across streams,
// so datasets, noise, init and shuffling stay reproducible independently of
// evaluation order or thread count.
//
// Seeding discipline used across the project:
//   seed    - user-visible run seed (CLI --seed or ScenarioConfig::seed)
//   domain  - one of the Domain constants below, optionally combined with a
//             small tag (epoch, snr index) via Domain | (tag << 8)
//   index   - sample index within the addressed collection
//
// Example: the noise of test sample i at the s-th SNR point lives in
// RngStream(seed, Domain::kEvalNoise | (s << 8), i).

namespace domain {
inline constexpr std::uint64_t kChannel = 1;    // path/channel generation
inline constexpr std::uint64_t kEvalNoise = 2;  // observation noise at eval
inline constexpr std::uint64_t kTrainNoise = 3; // corruption of the training set
inline constexpr std::uint64_t kValNoise = 4;   // fixed validation noise
inline constexpr std::uint64_t kInit = 5;       // parameter init, index = tensor ordinal
inline constexpr std::uint64_t kShuffle = 6;    // batch shuffling, tag = epoch
inline constexpr std::uint64_t kLatentEps = 7;  // reparameterization draws, tag = epoch
inline constexpr std::uint64_t kTrainSnr = 8;   // per-sample training SNR assignment
} // namespace domain

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

class RngStream {
public:
  RngStream(std::uint64_t seed, std::uint64_t dom, std::uint64_t index) {
    const std::uint64_t k = splitmix64(seed ^ splitmix64(dom));
    key_[0] = static_cast<std::uint32_t>(k);
    key_[1] = static_cast<std::uint32_t>(k >> 32);
    ctr_[0] = 0;
    ctr_[1] = 0;
    ctr_[2] = static_cast<std::uint32_t>(index);
    ctr_[3] = static_cast<std::uint32_t>(index >> 32);
  }

  std::uint32_t next_u32() {
    if (avail_ == 0) refill();
    return out_[4 - avail_--];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return lo | (hi << 32);
  }

  // uniform on [0, 1), 53-bit resolution
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform integer on [0, n); n > 0. Rejection-free modulo is fine here:
  // n is tiny compared to 2^64 in every use, bias is unobservable.
  std::uint64_t uniform_int(std::uint64_t n) { return next_u64() % n; }

  // standard normal via Box-Muller; draws come in deterministic pairs
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 == 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

private:
  void refill() {
    std::uint32_t c0 = ctr_[0], c1 = ctr_[1], c2 = ctr_[2], c3 = ctr_[3];
    std::uint32_t k0 = key_[0], k1 = key_[1];
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = 0xD2511F53ull * c0;
      const std::uint64_t p1 = 0xCD9E8D57ull * c2;
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      const std::uint32_t n0 = hi1 ^ c1 ^ k0;
      const std::uint32_t n1 = lo1;
      const std::uint32_t n2 = hi0 ^ c3 ^ k1;
      const std::uint32_t n3 = lo0;
      c0 = n0; c1 = n1; c2 = n2; c3 = n3;
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    out_[0] = c0; out_[1] = c1; out_[2] = c2; out_[3] = c3;
    if (++ctr_[0] == 0) ++ctr_[1]; // 64-bit draw counter; index words stay fixed
    avail_ = 4;
  }

  std::uint32_t key_[2];
  std::uint32_t ctr_[4];
  std::uint32_t out_[4] = {0, 0, 0, 0};
  int avail_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

} // namespace cevae

#include "qfilt/rng.hpp"

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

#include <stdexcept>

namespace qfilt {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kM0, ctr[0], hi0, lo0);
    mulhilo(kM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

PhiloxStream::PhiloxStream(std::uint64_t seed, std::uint32_t stream, std::uint64_t index)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      ctr_{0u, stream, static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)} {}

void PhiloxStream::refill() {
  buf_ = philox4x32_10(ctr_, key_);
  if (++ctr_[0] == 0) throw std::overflow_error("Philox stream exhausted");
  pos_ = 0;
}

PhiloxStream::result_type PhiloxStream::operator()() {
  if (pos_ == 4) refill();
  return buf_[static_cast<size_t>(pos_++)];
}

double PhiloxStream::uniform() {
  const std::uint64_t a = (*this)() >> 5;
  const std::uint64_t b = (*this)() >> 6;
  return static_cast<double>((a << 26) | b) * 0x1.0p-53;
}

double PhiloxStream::normal() {
  boost::random::normal_distribution<double> dist;
  return dist(*this);
}

double PhiloxStream::exponential(double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("exponential rate must be positive");
  boost::random::exponential_distribution<double> dist(rate);
  return dist(*this);
}

}  // namespace qfilt

#include "asjr/corruption.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace asjr {

int bit_range_lo(BitRange r) {
  switch (r) {
    case BitRange::All: return 0;
    case BitRange::LowerMantissa: return 0;
    case BitRange::UpperMantissa: return 26;
    case BitRange::Exponent: return 52;
    case BitRange::Sign: return 63;
  }
  return 0;
}

int bit_range_hi(BitRange r) {
  switch (r) {
    case BitRange::All: return 63;
    case BitRange::LowerMantissa: return 25;
    case BitRange::UpperMantissa: return 51;
    case BitRange::Exponent: return 62;
    case BitRange::Sign: return 63;
  }
  return 63;
}

const char* bit_range_name(BitRange r) {
  switch (r) {
    case BitRange::All: return "all";
    case BitRange::LowerMantissa: return "lower-mantissa";
    case BitRange::UpperMantissa: return "upper-mantissa";
    case BitRange::Exponent: return "exponent";
    case BitRange::Sign: return "sign";
  }
  return "?";
}

void BitFlipPolicy::validate() const {
  if (!(probability >= 0.0 && probability < 1.0))
    throw std::invalid_argument(
        "BitFlipPolicy: probability must lie in [0, 1)");
}

void MalevolentPolicy::validate() const {
  if (!(omega_f > 0.0) || !(omega_r > 0.0))
    throw std::invalid_argument(
        "MalevolentPolicy: omega_f and omega_r must be positive");
  if (!(delta > 0.0))
    throw std::invalid_argument("MalevolentPolicy: delta must be positive");
  if (target_agent < 0)
    throw std::invalid_argument(
        "MalevolentPolicy: target_agent must be nonnegative");
}

double flip_bit_f64(double value, int bit) {
  if (bit < 0 || bit > 63)
    throw std::invalid_argument("flip_bit_f64: bit out of [0, 63]");
  const auto u = std::bit_cast<std::uint64_t>(value) ^ (1ull << bit);
  return std::bit_cast<double>(u);
}

std::int32_t flip_bit_i32(std::int32_t value, int bit) {
  if (bit < 0 || bit > 31)
    throw std::invalid_argument("flip_bit_i32: bit out of [0, 31]");
  const auto u = std::bit_cast<std::uint32_t>(value) ^ (1u << bit);
  return std::bit_cast<std::int32_t>(u);
}

UpdateMessage corrupt_broadcast(const UpdateMessage& msg,
                                const BitFlipPolicy& policy, Rng& rng) {
  UpdateMessage out = msg;
  const double p = policy.probability;
  if (p <= 0.0) return out;
  const int lo = bit_range_lo(policy.range);
  const int span = bit_range_hi(policy.range) - lo + 1;
  for (double& v : out.block)
    if (rng.bernoulli(p))
      v = flip_bit_f64(v, lo + static_cast<int>(rng.uniform_below(span)));
  if (rng.bernoulli(p))
    out.s_tilde = flip_bit_i32(
        out.s_tilde,
        static_cast<int>(rng.uniform_below(BitFlipPolicy::integer_bits)));
  return out;
}

MalevolentPhase malevolent_state(const MalevolentPolicy& policy,
                                 double elapsed) {
  if (elapsed < 0.0)
    throw std::invalid_argument("malevolent_state: elapsed must be >= 0");
  const double period = policy.omega_f + policy.omega_r;
  const double phase = std::fmod(elapsed, period);
  return phase < policy.omega_f ? MalevolentPhase::Normal
                                : MalevolentPhase::Down;
}

void apply_malevolent_offsets(std::vector<double>& block, double delta,
                              Rng& rng) {
  for (double& v : block) v += rng.normal(delta, 0.5 * delta);
}

}  // namespace asjr

#pragma once

#include <cstdint>
#include <vector>

#include "asjr/message.hpp"
#include "asjr/rng.hpp"

namespace asjr {

/* Bit ranges of an IEEE-754 double, least significant bit = 0. */
enum class BitRange { All, LowerMantissa, UpperMantissa, Exponent, Sign };

int bit_range_lo(BitRange r);
int bit_range_hi(BitRange r);
const char* bit_range_name(BitRange r);

/* In-transit bit-flip corruption. Applied per delivered copy: each block
 * element independently has one uniformly chosen bit from `range` flipped
 * with probability `probability`; the s_tilde field independently has one of
 * its 32 bits flipped with the same probability. Sender state is never
 * touched. */
struct BitFlipPolicy {
  double probability = 0.0;
  BitRange range = BitRange::All;
  static constexpr int integer_bits = 32;  // s_tilde width

  void validate() const;  // throws std::invalid_argument
};

/* Periodic malevolent-agent schedule: from solve start, omega_f seconds of
 * Normal operation then omega_r seconds of Down, repeating. While Down the
 * target agent adds a Gaussian(delta, 0.5 delta) sample to every element of
 * each update it computes, overwriting its stored block. */
struct MalevolentPolicy {
  double omega_f = 2.5;
  double omega_r = 0.2;
  double delta = 0.2;
  int target_agent = 8;

  void validate() const;  // throws std::invalid_argument
};

enum class MalevolentPhase { Normal, Down };

/* value with bit `bit` (0..63) flipped; an involution. */
double flip_bit_f64(double value, int bit);

/* value with bit `bit` (0..31) flipped, two's complement. */
std::int32_t flip_bit_i32(std::int32_t value, int bit);

/* Corrupted copy of msg for one link delivery. Only block elements and
 * s_tilde may change; all other fields pass through intact. Draws from rng
 * in a pinned order (elements in index order, then s_tilde). */
UpdateMessage corrupt_broadcast(const UpdateMessage& msg,
                                const BitFlipPolicy& policy, Rng& rng);

/* Phase of the schedule at `elapsed` seconds past solve start. The boundary
 * instants omega_f and omega_f + omega_r belong to the next phase. */
MalevolentPhase malevolent_state(const MalevolentPolicy& policy,
                                 double elapsed);

/* Adds one Gaussian(delta, 0.5 delta) sample to every element, in index
 * order. */
void apply_malevolent_offsets(std::vector<double>& block, double delta,
                              Rng& rng);

}  // namespace asjr

#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <vector>

#include "asjr/corruption.hpp"
#include "asjr/message.hpp"
#include "asjr/rng.hpp"
#include "doctest.h"

using namespace asjr;

namespace {

std::uint64_t bits_of(double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, sizeof u);
  return u;
}

bool is_power_of_two(std::uint64_t x) { return x != 0 && (x & (x - 1)) == 0; }

UpdateMessage sample_message(int n) {
  UpdateMessage m;
  m.sender = 3;
  m.block.resize(n);
  for (int k = 0; k < n; ++k) m.block[k] = 0.25 * (k + 1);
  m.s_tilde = 11;
  m.locally_converged = true;
  m.sequence = 42;
  m.dag_shortest = 5;
  m.dag_longest = 9;
  m.produced_at = 1.5;
  return m;
}

}  // namespace

TEST_CASE("single-bit flips hit the expected values") {
  CHECK(flip_bit_f64(1.0, 63) == -1.0);
  CHECK(flip_bit_f64(1.0, 62) == std::numeric_limits<double>::infinity());
  CHECK(flip_bit_f64(0.0, 0) == std::numeric_limits<double>::denorm_min());
  CHECK(flip_bit_f64(1.0, 0) == 1.0000000000000002);
  CHECK(flip_bit_f64(1.0, 52) == 0.5);

  CHECK(flip_bit_i32(0, 31) == std::numeric_limits<std::int32_t>::min());
  CHECK(flip_bit_i32(5, 1) == 7);
}

TEST_CASE("bit flips are involutions") {
  Rng r(17);
  for (int trial = 0; trial < 200; ++trial) {
    const double v = r.uniform(-10.0, 10.0);
    const int bit = static_cast<int>(r.uniform_below(64));
    CHECK(bits_of(flip_bit_f64(flip_bit_f64(v, bit), bit)) == bits_of(v));
  }
  for (int trial = 0; trial < 200; ++trial) {
    const auto v = static_cast<std::int32_t>(r.next_u64());
    const int bit = static_cast<int>(r.uniform_below(32));
    CHECK(flip_bit_i32(flip_bit_i32(v, bit), bit) == v);
  }
}

TEST_CASE("bit positions outside the word are rejected") {
  CHECK_THROWS_AS(flip_bit_f64(1.0, -1), std::invalid_argument);
  CHECK_THROWS_AS(flip_bit_f64(1.0, 64), std::invalid_argument);
  CHECK_THROWS_AS(flip_bit_i32(1, -1), std::invalid_argument);
  CHECK_THROWS_AS(flip_bit_i32(1, 32), std::invalid_argument);
}

TEST_CASE("bit range bounds and names") {
  CHECK(bit_range_lo(BitRange::All) == 0);
  CHECK(bit_range_hi(BitRange::All) == 63);
  CHECK(bit_range_lo(BitRange::LowerMantissa) == 0);
  CHECK(bit_range_hi(BitRange::LowerMantissa) == 25);
  CHECK(bit_range_lo(BitRange::UpperMantissa) == 26);
  CHECK(bit_range_hi(BitRange::UpperMantissa) == 51);
  CHECK(bit_range_lo(BitRange::Exponent) == 52);
  CHECK(bit_range_hi(BitRange::Exponent) == 62);
  CHECK(bit_range_lo(BitRange::Sign) == 63);
  CHECK(bit_range_hi(BitRange::Sign) == 63);
  CHECK(std::string(bit_range_name(BitRange::All)) == "all");
  CHECK(std::string(bit_range_name(BitRange::LowerMantissa)) == "lower-mantissa");
  CHECK(std::string(bit_range_name(BitRange::UpperMantissa)) == "upper-mantissa");
  CHECK(std::string(bit_range_name(BitRange::Exponent)) == "exponent");
  CHECK(std::string(bit_range_name(BitRange::Sign)) == "sign");
}

TEST_CASE("zero-probability corruption is the identity") {
  const UpdateMessage msg = sample_message(8);
  BitFlipPolicy p{0.0, BitRange::All};
  Rng rng(1);
  const UpdateMessage out = corrupt_broadcast(msg, p, rng);
  CHECK(out.block == msg.block);
  CHECK(out.s_tilde == msg.s_tilde);
  CHECK(out.sender == msg.sender);
  CHECK(out.sequence == msg.sequence);
  CHECK(out.locally_converged == msg.locally_converged);
  CHECK(out.dag_shortest == msg.dag_shortest);
  CHECK(out.dag_longest == msg.dag_longest);
  CHECK(out.produced_at == msg.produced_at);
}

TEST_CASE("corruption is deterministic for a fixed stream") {
  const UpdateMessage msg = sample_message(16);
  BitFlipPolicy p{0.5, BitRange::All};
  Rng a(99), b(99);
  const UpdateMessage out1 = corrupt_broadcast(msg, p, a);
  const UpdateMessage out2 = corrupt_broadcast(msg, p, b);
  CHECK(out1.block == out2.block);
  CHECK(out1.s_tilde == out2.s_tilde);
}

TEST_CASE("corruption changes only block bits within the range") {
  const UpdateMessage msg = sample_message(64);
  for (BitRange range : {BitRange::All, BitRange::LowerMantissa,
                         BitRange::UpperMantissa, BitRange::Exponent,
                         BitRange::Sign}) {
    BitFlipPolicy p{1.0, range};
    Rng rng(7 + static_cast<int>(range));
    const UpdateMessage out = corrupt_broadcast(msg, p, rng);
    REQUIRE(out.block.size() == msg.block.size());
    CHECK(out.sender == msg.sender);
    CHECK(out.sequence == msg.sequence);
    CHECK(out.locally_converged == msg.locally_converged);
    CHECK(out.dag_shortest == msg.dag_shortest);
    CHECK(out.dag_longest == msg.dag_longest);
    for (std::size_t k = 0; k < msg.block.size(); ++k) {
      const std::uint64_t diff = bits_of(out.block[k]) ^ bits_of(msg.block[k]);
      REQUIRE(is_power_of_two(diff)); /* probability 1: exactly one bit */
      int bit = 0;
      while (!((diff >> bit) & 1u)) ++bit;
      CHECK(bit >= bit_range_lo(range));
      CHECK(bit <= bit_range_hi(range));
    }
    const std::uint32_t sdiff =
        static_cast<std::uint32_t>(out.s_tilde) ^
        static_cast<std::uint32_t>(msg.s_tilde);
    CHECK(is_power_of_two(sdiff));
  }
}

TEST_CASE("corruption hits elements at the configured rate") {
  const int n = 1000;
  UpdateMessage msg = sample_message(n);
  BitFlipPolicy p{0.04, BitRange::All};
  Rng rng(123);
  int flipped = 0;
  const int reps = 1000;
  for (int rep = 0; rep < reps; ++rep) {
    const UpdateMessage out = corrupt_broadcast(msg, p, rng);
    for (int k = 0; k < n; ++k)
      if (bits_of(out.block[k]) != bits_of(msg.block[k])) ++flipped;
  }
  const double rate = static_cast<double>(flipped) / (n * reps);
  CHECK(rate >= 0.0388);
  CHECK(rate <= 0.0412);
}

TEST_CASE("bit-flip policy validation") {
  CHECK_NOTHROW((BitFlipPolicy{0.0, BitRange::All}.validate()));
  CHECK_NOTHROW((BitFlipPolicy{0.999, BitRange::Sign}.validate()));
  CHECK_THROWS_AS((BitFlipPolicy{-0.1, BitRange::All}.validate()),
                  std::invalid_argument);
  CHECK_THROWS_AS((BitFlipPolicy{1.0, BitRange::All}.validate()),
                  std::invalid_argument);
}

TEST_CASE("malevolent offsets follow the configured distribution") {
  Rng rng(2718);
  std::vector<double> block(100000, 0.0);
  apply_malevolent_offsets(block, 0.2, rng);
  double sum = 0.0, sq = 0.0;
  int positive = 0;
  for (double v : block) {
    sum += v;
    sq += v * v;
    positive += v > 0.0 ? 1 : 0;
  }
  const double mean = sum / block.size();
  const double var = sq / block.size() - mean * mean;
  CHECK(mean == doctest::Approx(0.2).epsilon(0.005));
  CHECK(std::sqrt(var) == doctest::Approx(0.1).epsilon(0.01));
  /* P(X > 0) = Phi(2) ~ 0.9772 for mean delta, std delta/2. */
  CHECK(static_cast<double>(positive) / block.size() ==
        doctest::Approx(0.9772).epsilon(0.005));
}

TEST_CASE("malevolent phase schedule") {
  MalevolentPolicy p;
  p.omega_f = 2.5;
  p.omega_r = 0.2;
  CHECK(malevolent_state(p, 0.0) == MalevolentPhase::Normal);
  CHECK(malevolent_state(p, 1.0) == MalevolentPhase::Normal);
  CHECK(malevolent_state(p, 2.4999) == MalevolentPhase::Normal);
  CHECK(malevolent_state(p, 2.5) == MalevolentPhase::Down);     /* boundary */
  CHECK(malevolent_state(p, 2.6) == MalevolentPhase::Down);
  CHECK(malevolent_state(p, 2.7) == MalevolentPhase::Normal); /* wraps */
  CHECK(malevolent_state(p, 5.2) == MalevolentPhase::Down);
  CHECK(malevolent_state(p, 5.4) == MalevolentPhase::Normal); /* two periods */
  CHECK(malevolent_state(p, 7.0) == MalevolentPhase::Normal);
  CHECK(malevolent_state(p, 8.0) == MalevolentPhase::Down);
  CHECK_THROWS_AS(malevolent_state(p, -0.001), std::invalid_argument);
}

TEST_CASE("malevolent policy validation") {
  CHECK_NOTHROW(MalevolentPolicy{}.validate());
  MalevolentPolicy bad;
  bad.omega_f = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = MalevolentPolicy{};
  bad.omega_r = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = MalevolentPolicy{};
  bad.delta = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = MalevolentPolicy{};
  bad.target_agent = -1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

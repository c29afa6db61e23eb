#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "asjr/problem.hpp"
#include "asjr/solver.hpp"
#include "doctest.h"

using namespace asjr;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

UpdateMessage make_msg(int sender, std::vector<double> block,
                       std::int32_t s_tilde = 0, std::uint64_t sequence = 1) {
  UpdateMessage m;
  m.sender = sender;
  m.block = std::move(block);
  m.s_tilde = s_tilde;
  m.sequence = sequence;
  return m;
}

struct Fixture {
  SparseSystem sys;
  Partition part;
  Fixture(int ell, int agents)
      : sys(build_poisson(ell)),
        part(partition_rows(sys.m, agents, sys.M)) {}
};

}  // namespace

TEST_CASE("name tables") {
  CHECK(std::string(variant_name(Variant::ASJ)) == "asj");
  CHECK(std::string(variant_name(Variant::ASJR)) == "asj-r");
  CHECK(std::string(verdict_name(Verdict::Accept)) == "accept");
  CHECK(std::string(verdict_name(Verdict::RejectNonFinite)) ==
        "reject-nonfinite");
  CHECK(std::string(verdict_name(Verdict::RejectBound)) == "reject-bound");
  CHECK(std::string(verdict_name(Verdict::RejectPathLength)) ==
        "reject-pathlength");
}

TEST_CASE("rejection threshold value and monotonicity") {
  /* 2 * (1/2) * 0.5^3 / (1 - 0.5) = 0.25, exact in binary. */
  CHECK(std::abs(rejection_threshold(1.0, 2.0, 0.5, 3) - 0.25) <= 1e-15);
  /* With the benchmark constants for ell=2 at s=0: 2 * ||b||. */
  CHECK(rejection_threshold(kPi * kPi / 3.0, 2.0, 0.5, 0) ==
        doctest::Approx(6.579736267392906).epsilon(1e-15));
  double prev = rejection_threshold(3.0, 0.5, 0.97, 0);
  for (std::int32_t s = 1; s <= 64; ++s) {
    const double cur = rejection_threshold(3.0, 0.5, 0.97, s);
    CHECK(cur < prev);
    prev = cur;
  }
  CHECK_THROWS_AS(rejection_threshold(1.0, 2.0, 0.5, -1), std::invalid_argument);
  CHECK_THROWS_AS(rejection_threshold(1.0, 0.0, 0.5, 0), std::invalid_argument);
  CHECK_THROWS_AS(rejection_threshold(1.0, 2.0, 1.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(rejection_threshold(1.0, 2.0, -0.1, 0), std::invalid_argument);
}

TEST_CASE("local stopping test") {
  const std::vector<double> diag{2.0, 2.0};
  SUBCASE("small scaled change passes") {
    /* lhs = 2 * 1e-8 = 2e-8 < 1e-6 * 1 / sqrt(4) = 5e-7 */
    CHECK(local_stopping_test(diag, {1.00000001, 2.0}, {1.0, 2.0}, 1e-6, 1.0, 4));
  }
  SUBCASE("large scaled change fails") {
    CHECK_FALSE(local_stopping_test(diag, {1.000001, 2.0}, {1.0, 2.0}, 1e-6, 1.0, 4));
  }
  SUBCASE("comparison is strict at equality") {
    /* lhs = 5e-7 exactly equals epsilon * norm_b / sqrt(m). */
    CHECK_FALSE(local_stopping_test({1.0}, {5e-7}, {0.0}, 1e-6, 1.0, 4));
  }
  SUBCASE("NaN forces false") {
    CHECK_FALSE(local_stopping_test(diag, {kNaN, 2.0}, {1.0, 2.0}, 1e-6, 1.0, 4));
  }
}

TEST_CASE("single block update matches the hand computation") {
  const Fixture f(2, 2);
  /* Agent 0 owns rows {0,1}; both rows read one in-block and one neighbor
   * value with coefficient 1/4, plus c = (pi^2/6)/4. */
  const std::vector<double> gather{0.1, 0.2, 0.3, 0.4};
  const std::vector<double> out = jacobi_block_update(f.sys, f.part, 0, gather);
  REQUIRE(out.size() == 2);
  const double expect = kPi * kPi / 24.0 + 0.25 * (0.2 + 0.3);
  CHECK(out[0] == doctest::Approx(expect).epsilon(1e-15));
  CHECK(out[1] == doctest::Approx(kPi * kPi / 24.0 + 0.25 * (0.1 + 0.4))
                      .epsilon(1e-15));
}

TEST_CASE("screening verdicts") {
  const Fixture f(2, 4); /* agent 0 reads neighbors 1 and 2, one row each */
  Agent a(f.sys, f.part, 0, Variant::ASJR, 1e-6);
  const double thr0 = rejection_threshold(f.sys.norm_b, f.sys.sigma_min_A,
                                          f.sys.sigma_max_M, 0);

  SUBCASE("clean nearby message is accepted") {
    CHECK(a.accept_or_reject(make_msg(1, {0.1})) == Verdict::Accept);
  }
  SUBCASE("jump beyond the bound is rejected") {
    CHECK(a.accept_or_reject(make_msg(1, {10.0})) == Verdict::RejectBound);
    CHECK(a.accept_or_reject(make_msg(1, {thr0 * 0.999999})) == Verdict::Accept);
    CHECK(a.accept_or_reject(make_msg(1, {thr0 * 1.000001})) ==
          Verdict::RejectBound);
  }
  SUBCASE("non-finite values are rejected first") {
    CHECK(a.accept_or_reject(make_msg(1, {kNaN})) == Verdict::RejectNonFinite);
    CHECK(a.accept_or_reject(make_msg(1, {kInf})) == Verdict::RejectNonFinite);
    CHECK(a.accept_or_reject(make_msg(1, {-kInf, })) == Verdict::RejectNonFinite);
  }
  SUBCASE("negative path estimates are rejected without overflow") {
    CHECK(a.accept_or_reject(make_msg(1, {0.1}, -1)) ==
          Verdict::RejectPathLength);
    CHECK(a.accept_or_reject(make_msg(
              1, {0.1}, std::numeric_limits<std::int32_t>::min())) ==
          Verdict::RejectPathLength);
  }
}

TEST_CASE("path estimate refresh protocol") {
  const Fixture f(2, 4);
  Agent a(f.sys, f.part, 0, Variant::ASJR, 1e-6);
  /* Five updates, each fed by neighbor 1 alone (neighbor 2 stays silent, so
   * the pending set never completes and no refresh fires). */
  for (int k = 0; k < 5; ++k) {
    if (k > 0) REQUIRE(a.absorb(make_msg(1, {0.1}, 0, k)) == Verdict::Accept);
    a.produce(0.01 * (k + 1));
  }
  CHECK(a.s_tilde0() == 5);
  CHECK(a.s_tilde() == 0);

  /* Estimates from only one of the two neighbors leave s_tilde alone. */
  CHECK(a.absorb(make_msg(1, {0.1}, 2, 5)) == Verdict::Accept);
  CHECK(a.s_tilde() == 0);

  /* The set now covers both neighbors: s = min(s0, 1 + min{2, 3}) = 3. */
  CHECK(a.absorb(make_msg(2, {0.1}, 3, 1)) == Verdict::Accept);
  CHECK(a.s_tilde() == 3);
  CHECK(a.s_tilde0() == 3);

  /* Production advances the upper bound and stamps the estimate on the wire. */
  const UpdateMessage out = a.produce(0.06);
  CHECK(a.s_tilde0() == 4);
  CHECK(out.s_tilde == 3);

  /* Screening now uses the refreshed estimate. */
  CHECK(a.accept_or_reject(make_msg(1, {0.12}, 1)) == Verdict::RejectPathLength);
  CHECK(a.accept_or_reject(make_msg(1, {0.12}, 2)) == Verdict::Accept);

  /* A partial pending set after the refresh does not change the estimate. */
  CHECK(a.absorb(make_msg(1, {0.12}, 10, 6)) == Verdict::Accept);
  CHECK(a.s_tilde() == 3);
}

TEST_CASE("path estimate upper bound advances only with fresh input") {
  const Fixture f(2, 4);
  Agent a(f.sys, f.part, 0, Variant::ASJR, 1e-6);

  /* The first update consumes the initial state and counts; re-running the
   * update from unchanged views does not. */
  a.produce(0.01);
  CHECK(a.s_tilde0() == 1);
  for (int k = 0; k < 3; ++k) a.produce(0.02 + 0.01 * k);
  CHECK(a.s_tilde0() == 1);
  CHECK(a.kappa() == 4);

  /* An accepted message makes the next update count again -- once. */
  REQUIRE(a.absorb(make_msg(1, {0.1}, 0, 1)) == Verdict::Accept);
  a.produce(0.05);
  CHECK(a.s_tilde0() == 2);
  a.produce(0.06);
  CHECK(a.s_tilde0() == 2);

  /* Rejected messages are not fresh input. */
  REQUIRE(a.absorb(make_msg(1, {50.0}, 0, 2)) == Verdict::RejectBound);
  a.produce(0.07);
  CHECK(a.s_tilde0() == 2);
  CHECK(a.kappa() == 7);
}

TEST_CASE("rejected messages never enter the solve") {
  const Fixture f(2, 4);
  Agent a(f.sys, f.part, 0, Variant::ASJR, 1e-6);
  REQUIRE(a.absorb(make_msg(1, {0.1}, 0, 7)) == Verdict::Accept);
  const std::vector<double> view_before = a.view(1);
  const std::int32_t s_before = a.s_tilde();

  CHECK(a.absorb(make_msg(1, {0.1}, -3, 8)) == Verdict::RejectPathLength);
  CHECK(a.counters().rejected_path == 1);
  CHECK(a.absorb(make_msg(1, {50.0}, 0, 9)) == Verdict::RejectBound);
  CHECK(a.view(1) == view_before);
  CHECK(a.view_sequence(1) == 7);
  CHECK(a.s_tilde() == s_before);
  CHECK(a.counters().accepted == 1);
  CHECK(a.counters().rejected_bound == 1);
  CHECK(a.counters().rejected() == 2);
  CHECK(a.view(1) == view_before);
}

TEST_CASE("a repeated identical corruption cannot validate itself") {
  const Fixture f(2, 4);
  Agent a(f.sys, f.part, 0, Variant::ASJR, 1e-6);
  REQUIRE(a.absorb(make_msg(1, {0.1}, 0, 1)) == Verdict::Accept);

  /* The same wrong value twice in a row: the reference stays on the accepted
   * block, so the second copy is just as far away as the first. (A reference
   * that followed the raw received stream would admit the second copy at
   * distance zero from the first -- fatal for single-bit corruptions, which
   * repeat exactly.) */
  CHECK(a.absorb(make_msg(1, {50.0}, 0, 2)) == Verdict::RejectBound);
  CHECK(a.absorb(make_msg(1, {50.0}, 0, 3)) == Verdict::RejectBound);
  CHECK(a.view(1) == std::vector<double>{0.1});

  /* The clean stream is still within the bound as-is. */
  CHECK(a.absorb(make_msg(1, {0.11}, 0, 4)) == Verdict::Accept);
  CHECK(a.counters().rejected_bound == 2);
  CHECK(a.counters().accepted == 2);
}

TEST_CASE("sustained rejection re-locks the screening reference") {
  const Fixture f(2, 4);
  Agent a(f.sys, f.part, 0, Variant::ASJR, 1e-6);
  REQUIRE(a.absorb(make_msg(1, {0.1}, 0, 1)) == Verdict::Accept);

  /* A persistently far stream is rejected kRelockStreak times, then the
   * reference re-locks onto it and the stream is admitted again: a stale
   * reference cannot keep a link dead forever. */
  std::uint64_t seq = 2;
  for (int k = 0; k < Agent::kRelockStreak; ++k)
    CHECK(a.absorb(make_msg(1, {50.0 + 0.001 * k}, 0, seq++)) ==
          Verdict::RejectBound);
  CHECK(a.absorb(make_msg(1, {50.2}, 0, seq++)) == Verdict::Accept);
  CHECK(a.view(1) == std::vector<double>{50.2});

  /* Non-finite blocks are never re-lock targets: a streak ending in a NaN
   * storm re-locks onto the last finite block received instead. */
  for (int k = 0; k < Agent::kRelockStreak - 1; ++k)
    CHECK(a.absorb(make_msg(1, {kNaN}, 0, seq++)) == Verdict::RejectNonFinite);
  CHECK(a.absorb(make_msg(1, {90.0}, 0, seq++)) == Verdict::RejectBound);
  CHECK(a.absorb(make_msg(1, {90.05}, 0, seq++)) == Verdict::Accept);
  CHECK(a.view(1) == std::vector<double>{90.05});
  CHECK(a.counters().rejected_nonfinite == Agent::kRelockStreak - 1);
}

TEST_CASE("plain variant accepts everything") {
  const Fixture f(2, 4);
  Agent a(f.sys, f.part, 0, Variant::ASJ, 1e-6);
  CHECK(a.absorb(make_msg(1, {kNaN}, 0, 1)) == Verdict::Accept);
  CHECK(std::isnan(a.view(1)[0]));
  CHECK(a.absorb(make_msg(2, {100.0}, -5, 1)) == Verdict::Accept);
  CHECK(a.view(2)[0] == 100.0);
  CHECK(a.counters().accepted == 2);
  CHECK(a.counters().rejected() == 0);
}

TEST_CASE("screened variant never stores a non-finite view") {
  const Fixture f(2, 4);
  Agent a(f.sys, f.part, 0, Variant::ASJR, 1e-6);
  a.absorb(make_msg(1, {kNaN}));
  a.absorb(make_msg(2, {kInf}));
  a.absorb(make_msg(1, {1e30}));
  for (int j : {1, 2})
    for (double v : a.view(j)) CHECK(std::isfinite(v));
  a.produce(0.01);
  for (double v : a.block()) CHECK(std::isfinite(v));
}

TEST_CASE("a solo agent converges to the reference solution") {
  const Fixture f(2, 1);
  Agent a(f.sys, f.part, 0, Variant::ASJR, 1e-6);
  for (int k = 0; k < 50; ++k) a.produce(0.001 * (k + 1));
  const std::vector<double> x = a.block();
  REQUIRE(x.size() == 4);
  for (int r = 0; r < 4; ++r)
    CHECK(std::abs(x[r] - f.sys.x_star[r]) <= 1e-14);
  CHECK(a.locally_converged());
  CHECK(a.kappa() == 50);
}

TEST_CASE("update-per-message composition equals absorb then produce") {
  const Fixture f(2, 4);
  Agent a(f.sys, f.part, 0, Variant::ASJR, 1e-6);
  Agent b(f.sys, f.part, 0, Variant::ASJR, 1e-6);
  const UpdateMessage m = make_msg(1, {0.2}, 0, 1);
  const UpdateMessage out_a = a.on_accept(m, 0.01);
  b.absorb(m);
  const UpdateMessage out_b = b.produce(0.01);
  CHECK(out_a.block == out_b.block);
  CHECK(out_a.s_tilde == out_b.s_tilde);
  CHECK(a.s_tilde0() == b.s_tilde0());

  Agent c(f.sys, f.part, 0, Variant::ASJR, 1e-6);
  CHECK_THROWS_AS(c.on_accept(make_msg(1, {kNaN}), 0.01), std::logic_error);
}

TEST_CASE("malevolent overwrite corrupts after the stopping test") {
  const Fixture f(2, 4);
  Agent a(f.sys, f.part, 0, Variant::ASJR, 1e-6);
  MalevolentPolicy pol;
  pol.omega_f = 0.1;
  pol.omega_r = 10.0;
  pol.delta = 0.5;
  pol.target_agent = 0;
  a.set_malevolent(pol, 1234);

  std::vector<double> x0(f.sys.x_star);
  a.set_initial_state(x0);

  SUBCASE("normal phase leaves the fixed point alone") {
    const UpdateMessage out = a.produce(0.05);
    CHECK(a.locally_converged());
    CHECK(out.locally_converged);
    CHECK(out.block[0] == doctest::Approx(f.sys.x_star[0]).epsilon(1e-12));
  }
  SUBCASE("down phase reports convergence but ships a corrupted block") {
    const UpdateMessage out = a.produce(1.0);
    CHECK(a.locally_converged());
    CHECK(out.locally_converged);
    /* The offset distribution is Gaussian(0.5, 0.25); a zero offset has
     * probability zero. */
    CHECK(out.block[0] != doctest::Approx(f.sys.x_star[0]).epsilon(1e-6));
    /* The corrupted value feeds back into the agent's own state. */
    CHECK(a.block() == out.block);
  }
}

TEST_CASE("lockstep rounds keep the path estimate exact") {
  const Fixture f(2, 2);
  Agent a(f.sys, f.part, 0, Variant::ASJR, 1e-6);
  Agent b(f.sys, f.part, 1, Variant::ASJR, 1e-6);
  const int rounds = 6;
  for (int k = 0; k < rounds; ++k) {
    const double t = 0.01 * (k + 1);
    const UpdateMessage ma = a.produce(t);
    const UpdateMessage mb = b.produce(t);
    CHECK(ma.dag_shortest == k + 1);
    CHECK(ma.dag_longest == k + 1);
    REQUIRE(a.absorb(mb) == Verdict::Accept);
    REQUIRE(b.absorb(ma) == Verdict::Accept);
  }
  CHECK(a.s_tilde() == rounds);
  CHECK(b.s_tilde() == rounds);
  CHECK(a.dag_shortest() == rounds);
  CHECK(a.dag_longest() == rounds);
  CHECK(a.counters().rejected() == 0);
  CHECK(b.counters().rejected() == 0);
}

TEST_CASE("constructor and message validation") {
  const Fixture f(2, 4);
  CHECK_THROWS_AS(Agent(f.sys, f.part, 0, Variant::ASJR, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(Agent(f.sys, f.part, 0, Variant::ASJR, -1e-6),
                  std::invalid_argument);

  Agent a(f.sys, f.part, 0, Variant::ASJR, 1e-6);
  CHECK_THROWS_AS(a.absorb(make_msg(3, {0.1})), std::invalid_argument);
  CHECK_THROWS_AS(a.absorb(make_msg(1, {0.1, 0.2})), std::invalid_argument);
  CHECK_THROWS_AS(a.set_initial_state({1.0, 2.0}), std::invalid_argument);
  CHECK(a.neighbor_ids() == std::vector<int>{1, 2});
  CHECK(a.block_rows() == 1);
}

#pragma once

#include <cstdint>
#include <vector>

namespace asjr {

/* One solution broadcast. sender, sequence and locally_converged always pass
 * through links intact; block and s_tilde are what corruption may touch.
 * sequence increases per sender in send order.
 *
 * The dag_* and produced_at fields are validation instrumentation (true
 * shortest/longest dependency-path lengths of the carried iterate and its
 * production time). The solver never reads them to make decisions and
 * injectors never modify them. */
struct UpdateMessage {
  int sender = 0;
  std::vector<double> block;
  std::int32_t s_tilde = 0;
  bool locally_converged = false;
  std::uint64_t sequence = 0;

  std::int32_t dag_shortest = 0;
  std::int32_t dag_longest = 0;
  double produced_at = 0.0;
};

/* Convergence-flag gossip; delivered to every agent, never corrupted. */
struct FlagGossip {
  int sender = 0;
  bool locally_converged = false;
  std::uint64_t sequence = 0;
};

}  // namespace asjr

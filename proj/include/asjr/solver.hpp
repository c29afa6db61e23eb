#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "asjr/corruption.hpp"
#include "asjr/message.hpp"
#include "asjr/problem.hpp"
#include "asjr/rng.hpp"

namespace asjr {

/* ASJ accepts every delivered message; ASJR screens each one through the
 * finiteness / jump-bound / path-length checks before use. */
enum class Variant { ASJ, ASJR };
const char* variant_name(Variant v);

enum class Verdict { Accept, RejectNonFinite, RejectBound, RejectPathLength };
const char* verdict_name(Verdict v);

/* Largest jump between two successive finite iterates of one block that is
 * consistent with a contracting iteration started from zero:
 *   2 * (||b||_2 / sigma_min(A)) * sigma_max(M)^s_tilde / (1 - sigma_max(M))
 * Strictly decreasing in s_tilde. Requires s_tilde >= 0, sigma_min > 0,
 * sigma_max in [0, 1). */
double rejection_threshold(double norm_b, double sigma_min_A,
                           double sigma_max_M, std::int32_t s_tilde);

/* ||diag .* (new_block - prev_block)||_inf < epsilon * ||b||_2 / sqrt(m),
 * strict; any NaN makes it false. */
bool local_stopping_test(const std::vector<double>& diag_block,
                         const std::vector<double>& new_block,
                         const std::vector<double>& prev_block, double epsilon,
                         double norm_b, int m);

/* One Jacobi update of agent `id`'s rows: M[rows] * gather + c[rows], where
 * gather is a full-length vector holding the agent's own current block at its
 * own rows and the stored neighbor views elsewhere. */
std::vector<double> jacobi_block_update(const SparseSystem& sys,
                                        const Partition& part, int id,
                                        const std::vector<double>& gather);

/* Counters a run reports per agent. */
struct AgentCounters {
  std::uint64_t accepted = 0;
  std::uint64_t rejected_nonfinite = 0;
  std::uint64_t rejected_bound = 0;
  std::uint64_t rejected_path = 0;
  std::uint64_t rejected() const {
    return rejected_nonfinite + rejected_bound + rejected_path;
  }
};

/* Emitted at every s_tilde refresh when instrumentation is on; the runtime
 * checks the refreshed estimate against the true dependency-path record. */
struct RefreshEvent {
  std::int32_t s_tilde;                  // value just set
  std::vector<double> view_produced_at;  // per neighbor, current stored view
};

/* One solver agent. Owns its block of the iterate, the stored neighbor
 * views, and the path-length estimate state. Driven either message-by-message
 * through on_accept (one update per accepted message) or by a runtime as
 * absorb* then produce (drain the mailbox, then one paced update); on_accept
 * is exactly absorb followed by produce. Not thread-safe; each instance is
 * confined to one thread. */
class Agent {
 public:
  /* Consecutive rejections on one link before the screening reference
   * re-locks to the most recently received finite block. Healthy links never
   * see streaks this long (at the worst sustained corruption tested, per-
   * message acceptance is ~0.6, so P(streak) ~ 0.4^16 per message); a link
   * whose reference has been displaced past the bound rejects everything and
   * hits it within kRelockStreak messages instead of staying dead forever. */
  static constexpr int kRelockStreak = 16;

  Agent(const SparseSystem& sys, const Partition& part, int id,
        Variant variant, double epsilon);

  void set_malevolent(const MalevolentPolicy& policy, std::uint64_t seed);
  void set_instrument(bool on) { instrument_ = on; }
  /* Testing hook: seed the local state (own block and all views) from a full
   * initial iterate instead of zeros. */
  void set_initial_state(const std::vector<double>& x0);

  /* The screening checks alone; no state change. The jump bound compares the
   * message against the current screening reference for that sender: the last
   * accepted block, unless sustained rejection has re-locked it (see
   * kRelockStreak). */
  Verdict accept_or_reject(const UpdateMessage& msg) const;

  /* Applies the verdict (unconditional Accept under ASJ). On Accept: stores
   * the block as the sender's view and screening reference, records s_tilde
   * into the pending set, and refreshes the path estimate once the set covers
   * every neighbor. On Reject: bumps the matching counter and the link's
   * rejection streak; kRelockStreak consecutive rejections re-lock the
   * screening reference to the latest finite received block. */
  Verdict absorb(const UpdateMessage& msg);

  /* One Jacobi update from the current views: computes the new block,
   * evaluates the stopping test on it, applies the malevolent overwrite when
   * the hook reports Down at `now`, advances kappa, and returns the outgoing
   * broadcast. s_tilde_0 advances only when the update consumed newly
   * accepted input (or is the very first, which consumes the initial state):
   * an update recomputed from unchanged views starts no longer dependency
   * path, and counting it would let the path estimate outrun the true path
   * whenever rejections starve the intake. */
  UpdateMessage produce(double now);

  /* The per-accepted-message composition: absorb(msg) then produce(now).
   * Precondition: msg passes the variant's screening. */
  UpdateMessage on_accept(const UpdateMessage& msg, double now);

  int id() const { return id_; }
  Variant variant() const { return variant_; }
  std::uint64_t kappa() const { return kappa_; }
  std::int32_t s_tilde() const { return s_tilde_; }
  std::int32_t s_tilde0() const { return s_tilde0_; }
  bool locally_converged() const { return locally_converged_; }
  const AgentCounters& counters() const { return counters_; }
  const std::vector<int>& neighbor_ids() const { return neighbor_ids_; }

  /* Current own block (always finite under ASJR absent a malevolent hook). */
  std::vector<double> block() const;
  const double* block_data() const { return gather_.data() + row0_; }
  int block_rows() const { return rows_; }

  /* Stored view of neighbor j's block. */
  std::vector<double> view(int j) const;
  /* Sequence number of the last accepted message from neighbor j, or 0. */
  std::uint64_t view_sequence(int j) const;

  std::int32_t dag_shortest() const { return dag_shortest_; }
  std::int32_t dag_longest() const { return dag_longest_; }
  std::vector<RefreshEvent> take_refresh_events();

 private:
  int neighbor_slot(int j) const;  // -1 if j is not a neighbor
  void maybe_refresh();
  void count_rejection(int slot);  // streak bump + possible reference re-lock

  const SparseSystem& sys_;
  const Partition& part_;
  int id_;
  Variant variant_;
  double epsilon_;
  int row0_, rows_;

  std::vector<double> gather_;  // full-length: own block + neighbor views
  std::vector<double> prev_block_;
  std::vector<double> scratch_;
  std::vector<int> neighbor_ids_;  // sorted
  /* Screening reference per neighbor slot: the last accepted block, except
   * that kRelockStreak consecutive rejections re-lock it to the most recent
   * finite block received on that link. Tracking only accepted blocks keeps a
   * repeated identical corruption from validating itself (the second copy
   * would sit at distance zero from the first); the re-lock keeps a stale or
   * poisoned reference from deadlocking the link once the bound tightens past
   * the displacement. */
  std::vector<std::vector<double>> ref_blocks_;
  std::vector<std::vector<double>> relock_cand_;  // last finite received
  std::vector<int> reject_streak_;  // consecutive rejections per slot

  std::int32_t s_tilde_ = 0;
  std::int32_t s_tilde0_ = 0;
  bool fresh_input_ = false;  // accepted anything since the last produce?
  std::vector<std::optional<std::int32_t>> pending_;  // the set S, per neighbor
  std::uint64_t kappa_ = 0;
  bool locally_converged_ = false;
  std::uint64_t next_sequence_ = 1;
  AgentCounters counters_;

  std::optional<MalevolentPolicy> malevolent_;
  Rng malevolent_rng_;

  /* instrumentation: true dependency-path lengths */
  bool instrument_ = false;
  std::int32_t dag_shortest_ = 0;
  std::int32_t dag_longest_ = 0;
  double produced_at_ = 0.0;
  std::vector<std::int32_t> view_dag_shortest_;
  std::vector<std::int32_t> view_dag_longest_;
  std::vector<double> view_produced_at_;
  std::vector<std::uint64_t> view_sequence_;
  std::vector<RefreshEvent> refresh_events_;
};

}  // namespace asjr

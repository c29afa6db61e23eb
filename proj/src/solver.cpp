#include "asjr/solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace asjr {

const char* variant_name(Variant v) {
  return v == Variant::ASJ ? "asj" : "asj-r";
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Accept: return "accept";
    case Verdict::RejectNonFinite: return "reject-nonfinite";
    case Verdict::RejectBound: return "reject-bound";
    case Verdict::RejectPathLength: return "reject-pathlength";
  }
  return "?";
}

double rejection_threshold(double norm_b, double sigma_min_A,
                           double sigma_max_M, std::int32_t s_tilde) {
  if (s_tilde < 0)
    throw std::invalid_argument("rejection_threshold: s_tilde must be >= 0");
  if (!(sigma_min_A > 0.0))
    throw std::invalid_argument("rejection_threshold: sigma_min_A must be > 0");
  if (!(sigma_max_M >= 0.0 && sigma_max_M < 1.0))
    throw std::invalid_argument(
        "rejection_threshold: sigma_max_M must lie in [0, 1)");
  return 2.0 * (norm_b / sigma_min_A) *
         std::pow(sigma_max_M, static_cast<double>(s_tilde)) /
         (1.0 - sigma_max_M);
}

bool local_stopping_test(const std::vector<double>& diag_block,
                         const std::vector<double>& new_block,
                         const std::vector<double>& prev_block, double epsilon,
                         double norm_b, int m) {
  double lhs = 0.0;
  for (std::size_t k = 0; k < new_block.size(); ++k) {
    const double d = std::abs(diag_block[k] * (new_block[k] - prev_block[k]));
    if (std::isnan(d)) return false;
    lhs = std::max(lhs, d);
  }
  return lhs < epsilon * norm_b / std::sqrt(static_cast<double>(m));
}

std::vector<double> jacobi_block_update(const SparseSystem& sys,
                                        const Partition& part, int id,
                                        const std::vector<double>& gather) {
  const int r0 = part.block_start[id];
  const int r1 = part.block_start[id + 1];
  std::vector<double> out(static_cast<std::size_t>(r1 - r0));
  const CsrMatrix& M = sys.M;
  for (int r = r0; r < r1; ++r) {
    double acc = sys.c[r];
    for (int k = M.row_ptr[r]; k < M.row_ptr[r + 1]; ++k)
      acc += M.vals[k] * gather[M.cols[k]];
    out[r - r0] = acc;
  }
  return out;
}

Agent::Agent(const SparseSystem& sys, const Partition& part, int id,
             Variant variant, double epsilon)
    : sys_(sys),
      part_(part),
      id_(id),
      variant_(variant),
      epsilon_(epsilon),
      row0_(part.block_start[id]),
      rows_(part.block_start[id + 1] - part.block_start[id]),
      gather_(sys.m, 0.0),
      prev_block_(rows_, 0.0),
      scratch_(rows_, 0.0),
      malevolent_rng_(0) {
  if (epsilon <= 0.0)
    throw std::invalid_argument("Agent: epsilon must be positive");
  neighbor_ids_.assign(part.neighbors[id].begin(), part.neighbors[id].end());
  pending_.assign(neighbor_ids_.size(), std::nullopt);
  ref_blocks_.resize(neighbor_ids_.size());
  for (std::size_t s = 0; s < neighbor_ids_.size(); ++s) {
    const int j = neighbor_ids_[s];
    ref_blocks_[s].assign(
        static_cast<std::size_t>(part.block_start[j + 1] - part.block_start[j]),
        0.0);
  }
  relock_cand_ = ref_blocks_;
  reject_streak_.assign(neighbor_ids_.size(), 0);
  view_dag_shortest_.assign(neighbor_ids_.size(), 0);
  view_dag_longest_.assign(neighbor_ids_.size(), 0);
  view_produced_at_.assign(neighbor_ids_.size(), 0.0);
  view_sequence_.assign(neighbor_ids_.size(), 0);
}

void Agent::set_malevolent(const MalevolentPolicy& policy, std::uint64_t seed) {
  policy.validate();
  malevolent_ = policy;
  malevolent_rng_ = Rng(seed);
}

void Agent::set_initial_state(const std::vector<double>& x0) {
  if (static_cast<int>(x0.size()) != sys_.m)
    throw std::invalid_argument("set_initial_state: size mismatch");
  gather_ = x0;
  std::copy(x0.begin() + row0_, x0.begin() + row0_ + rows_,
            prev_block_.begin());
  for (std::size_t s = 0; s < neighbor_ids_.size(); ++s) {
    const int j0 = part_.block_start[neighbor_ids_[s]];
    std::copy(x0.begin() + j0,
              x0.begin() + j0 + static_cast<int>(ref_blocks_[s].size()),
              ref_blocks_[s].begin());
    relock_cand_[s] = ref_blocks_[s];
  }
}

int Agent::neighbor_slot(int j) const {
  const auto it =
      std::lower_bound(neighbor_ids_.begin(), neighbor_ids_.end(), j);
  if (it == neighbor_ids_.end() || *it != j) return -1;
  return static_cast<int>(it - neighbor_ids_.begin());
}

Verdict Agent::accept_or_reject(const UpdateMessage& msg) const {
  for (double v : msg.block)
    if (!std::isfinite(v)) return Verdict::RejectNonFinite;

  const int slot = neighbor_slot(msg.sender);
  const std::vector<double>& ref = ref_blocks_[slot];
  double dist2 = 0.0;
  for (std::size_t k = 0; k < msg.block.size(); ++k) {
    const double d = msg.block[k] - ref[k];
    dist2 += d * d;
  }
  const double thr = rejection_threshold(sys_.norm_b, sys_.sigma_min_A,
                                         sys_.sigma_max_M, s_tilde_);
  if (!(std::sqrt(dist2) <= thr)) return Verdict::RejectBound;

  if (msg.s_tilde < 0 ||
      static_cast<std::int64_t>(msg.s_tilde) + 1 <
          static_cast<std::int64_t>(s_tilde_))
    return Verdict::RejectPathLength;

  return Verdict::Accept;
}

Verdict Agent::absorb(const UpdateMessage& msg) {
  const int slot = neighbor_slot(msg.sender);
  if (slot < 0)
    throw std::invalid_argument("absorb: sender is not a neighbor");
  if (static_cast<int>(msg.block.size()) !=
      part_.block_start[msg.sender + 1] - part_.block_start[msg.sender])
    throw std::invalid_argument("absorb: block size mismatch");

  Verdict verdict =
      variant_ == Variant::ASJR ? accept_or_reject(msg) : Verdict::Accept;
  switch (verdict) {
    case Verdict::RejectNonFinite:
      ++counters_.rejected_nonfinite;
      count_rejection(slot);
      return verdict;
    case Verdict::RejectBound:
      ++counters_.rejected_bound;
      relock_cand_[slot] = msg.block;
      count_rejection(slot);
      return verdict;
    case Verdict::RejectPathLength:
      ++counters_.rejected_path;
      relock_cand_[slot] = msg.block;
      count_rejection(slot);
      return verdict;
    case Verdict::Accept:
      break;
  }
  ++counters_.accepted;
  fresh_input_ = true;
  ref_blocks_[slot] = msg.block;
  relock_cand_[slot] = msg.block;
  reject_streak_[slot] = 0;

  std::copy(msg.block.begin(), msg.block.end(),
            gather_.begin() + part_.block_start[msg.sender]);
  pending_[slot] = msg.s_tilde;
  view_dag_shortest_[slot] = msg.dag_shortest;
  view_dag_longest_[slot] = msg.dag_longest;
  view_produced_at_[slot] = msg.produced_at;
  view_sequence_[slot] = msg.sequence;
  maybe_refresh();
  return verdict;
}

void Agent::count_rejection(int slot) {
  if (++reject_streak_[slot] < kRelockStreak) return;
  ref_blocks_[slot] = relock_cand_[slot];
  reject_streak_[slot] = 0;
}

void Agent::maybe_refresh() {
  if (pending_.empty()) return;
  std::int32_t smallest = INT32_MAX;
  for (const auto& p : pending_) {
    if (!p.has_value()) return;
    smallest = std::min(smallest, *p);
  }
  s_tilde_ = std::min(s_tilde0_, smallest + 1);
  s_tilde0_ = s_tilde_;
  std::fill(pending_.begin(), pending_.end(), std::nullopt);
  if (instrument_)
    refresh_events_.push_back(RefreshEvent{s_tilde_, view_produced_at_});
}

UpdateMessage Agent::produce(double now) {
  const CsrMatrix& M = sys_.M;
  for (int r = row0_; r < row0_ + rows_; ++r) {
    double acc = sys_.c[r];
    for (int k = M.row_ptr[r]; k < M.row_ptr[r + 1]; ++k)
      acc += M.vals[k] * gather_[M.cols[k]];
    scratch_[r - row0_] = acc;
  }

  /* stopping test on the clean update, against the previous stored block */
  double lhs = 0.0;
  bool nan_seen = false;
  for (int k = 0; k < rows_; ++k) {
    const double d =
        std::abs(sys_.diag[row0_ + k] * (scratch_[k] - gather_[row0_ + k]));
    if (std::isnan(d)) nan_seen = true;
    lhs = std::max(lhs, d);
  }
  locally_converged_ =
      !nan_seen &&
      lhs < epsilon_ * sys_.norm_b / std::sqrt(static_cast<double>(sys_.m));

  /* malevolent overwrite happens after the stopping test */
  if (malevolent_ &&
      malevolent_state(*malevolent_, now) == MalevolentPhase::Down)
    apply_malevolent_offsets(scratch_, malevolent_->delta, malevolent_rng_);

  std::int32_t in_short = dag_shortest_, in_long = dag_longest_;
  for (std::size_t s = 0; s < neighbor_ids_.size(); ++s) {
    in_short = std::min(in_short, view_dag_shortest_[s]);
    in_long = std::max(in_long, view_dag_longest_[s]);
  }
  dag_shortest_ = in_short + 1;
  dag_longest_ = in_long + 1;
  produced_at_ = now;

  std::copy(gather_.begin() + row0_, gather_.begin() + row0_ + rows_,
            prev_block_.begin());
  std::copy(scratch_.begin(), scratch_.end(), gather_.begin() + row0_);
  if (kappa_ == 0 || fresh_input_) ++s_tilde0_;
  fresh_input_ = false;
  ++kappa_;

  UpdateMessage out;
  out.sender = id_;
  out.block.assign(scratch_.begin(), scratch_.end());
  out.s_tilde = s_tilde_;
  out.locally_converged = locally_converged_;
  out.sequence = next_sequence_++;
  out.dag_shortest = dag_shortest_;
  out.dag_longest = dag_longest_;
  out.produced_at = now;
  return out;
}

UpdateMessage Agent::on_accept(const UpdateMessage& msg, double now) {
  const Verdict v = absorb(msg);
  if (v != Verdict::Accept)
    throw std::logic_error("on_accept: message failed screening");
  return produce(now);
}

std::vector<double> Agent::block() const {
  return {gather_.begin() + row0_, gather_.begin() + row0_ + rows_};
}

std::vector<double> Agent::view(int j) const {
  return {gather_.begin() + part_.block_start[j],
          gather_.begin() + part_.block_start[j + 1]};
}

std::uint64_t Agent::view_sequence(int j) const {
  const int slot = neighbor_slot(j);
  return slot < 0 ? 0 : view_sequence_[slot];
}

std::vector<RefreshEvent> Agent::take_refresh_events() {
  return std::exchange(refresh_events_, {});
}

}  // namespace asjr

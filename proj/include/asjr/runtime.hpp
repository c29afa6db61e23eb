#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "asjr/corruption.hpp"
#include "asjr/problem.hpp"
#include "asjr/solver.hpp"

namespace asjr {

enum class ClockKind { Virtual, RealTime };

/* Per-link latency and per-update compute time, sampled uniformly from these
 * ranges (seconds). Identical in both clock modes; in virtual mode they are
 * the simulated durations, in real-time mode they are slept. */
struct TimingModel {
  double link_delay_min = 0.0005;
  double link_delay_max = 0.002;
  double compute_min = 0.0001;
  double compute_max = 0.0005;
};

enum class CorruptionKind { None, BitFlip, Malevolent };

struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::None;
  BitFlipPolicy bitflip;
  MalevolentPolicy malevolent;
};

struct RunCaps {
  double wall_cap = 60.0;  // seconds on the run's clock
  std::uint64_t max_iterations = 10'000'000;  // per agent
};

struct NetworkConfig {
  Variant variant = Variant::ASJR;
  ClockKind clock = ClockKind::Virtual;
  TimingModel timing;
  CorruptionSpec corruption;
  RunCaps caps;
  double epsilon = 1e-6;
  double convergence_duration = 1.0;
  double sample_interval = 0.01;
  std::uint64_t seed = 0;
  bool instrument = false;
  std::vector<double> initial_guess;  // empty = zeros
};

enum class RunStatus { Converged, IterationCap, TimeCap };
const char* run_status_name(RunStatus s);

/* Periodic observation of the assembled iterate. rel_error is recorded
 * verbatim (NaN/inf included). Per-agent vectors are indexed by agent id. */
struct MonitorSample {
  double t = 0.0;
  double rel_error = 0.0;
  std::vector<std::uint64_t> kappa;
  std::vector<std::uint64_t> accepted;
  std::vector<std::uint64_t> rejected;
  std::vector<std::int32_t> s_tilde;
  std::vector<std::uint8_t> locally_converged;
};

struct AgentSummary {
  std::uint64_t kappa = 0;
  AgentCounters counters;
  std::int32_t s_tilde = 0;
  bool locally_converged = false;
};

struct RunResult {
  RunStatus status = RunStatus::TimeCap;
  double t_end = 0.0;
  /* Converged only: t_end minus the trailing convergence_duration wait. */
  double time_to_converge = 0.0;
  std::vector<MonitorSample> samples;
  std::vector<double> final_x;
  double final_rel_error = 0.0;
  std::vector<AgentSummary> agents;
  /* instrumentation: s_tilde refresh checks against the true shortest path */
  std::uint64_t dag_refresh_checks = 0;
  std::uint64_t dag_refresh_violations = 0;
};

/* A set of solver agents wired over corruptible links under one clock.
 * Solution messages flow along the sparsity-induced neighbor relation with
 * per-link FIFO delivery; convergence flags additionally gossip to every
 * agent, uncorrupted. The run terminates at the first of: every agent
 * observing all flags true continuously for convergence_duration (Converged),
 * an agent reaching max_iterations (IterationCap), or the clock reaching
 * wall_cap (TimeCap). Virtual mode is single-threaded and deterministic for
 * a fixed seed; real-time mode spawns one thread per agent plus a monitor. */
class Network {
 public:
  Network(const SparseSystem& sys, const Partition& part,
          const NetworkConfig& config);

  /* Testing hook: pin the latency of one directed link. */
  void set_link_delay(int from, int to, double fixed_delay);

  RunResult run();

 private:
  const SparseSystem& sys_;
  const Partition& part_;
  NetworkConfig config_;
  std::map<std::pair<int, int>, double> delay_overrides_;
};

/* Synchronous reference schedule: every round, all agents produce one update
 * from the same global iterate, then all broadcasts are delivered round-robin
 * with no corruption. Returns the assembled iterate after each round;
 * trajectory[k] equals the classic Jacobi iterate x^{k+1}. */
std::vector<std::vector<double>> lockstep_trajectory(const SparseSystem& sys,
                                                     const Partition& part,
                                                     Variant variant,
                                                     double epsilon,
                                                     int rounds);

}  // namespace asjr

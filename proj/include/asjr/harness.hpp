#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "asjr/runtime.hpp"

namespace asjr {

/* One experiment arm: a Poisson problem, an agent count, a solver variant,
 * a corruption policy and the run parameters, executed `trials` times with
 * per-trial derived seeds. Defaults match the reference study: ell=20, 16
 * agents, real-time clock, 10 trials, 60 s cap. */
struct ExperimentConfig {
  int ell = 20;
  int agents = 16;
  Variant variant = Variant::ASJR;
  ClockKind clock = ClockKind::RealTime;
  std::uint64_t seed = 1;
  int trials = 10;
  CorruptionSpec corruption;
  TimingModel timing;
  double epsilon = 1e-6;
  double convergence_duration = 1.0;
  std::uint64_t max_iterations = 10'000'000;
  double wall_cap = 60.0;
  double sample_interval = 0.01;
  std::string arm;  // CSV label; derived from the fields when empty

  void validate() const;  // throws std::invalid_argument
  NetworkConfig network(std::uint64_t trial_seed) const;
  std::string derived_arm() const;  // label used when `arm` is empty
};

/* Key-value configuration text: one `key = value` per line, `#` comments,
 * every key optional, unknown keys are errors. Keys mirror ExperimentConfig:
 *   ell, agents, variant (asj|asjr), clock (virtual|realtime), seed, trials,
 *   epsilon, convergence_duration, max_iterations, wall_cap, sample_interval,
 *   arm, corruption (none|bitflip|malevolent), bitflip_probability,
 *   bitflip_range (all|lower-mantissa|upper-mantissa|exponent|sign),
 *   malevolent_omega_f, malevolent_omega_r, malevolent_delta,
 *   malevolent_target, link_delay_min, link_delay_max, compute_min,
 *   compute_max. */
ExperimentConfig parse_config_file(const std::string& path);
void apply_key_value(ExperimentConfig& cfg, const std::string& key,
                     const std::string& value);
/* ABFT_SEED overrides the master seed when set; applied last so the
 * precedence is env > flags > config file > defaults. */
void apply_env_overrides(ExperimentConfig& cfg);

struct TrialRecord {
  RunStatus status = RunStatus::TimeCap;
  double t_end = 0.0;
  double time_to_converge = 0.0;  // meaningful when status == Converged
  double final_rel_error = 0.0;   // vs the direct solution
  double final_analytic_error = 0.0;  // ||x - u||_2 vs the closed-form u
  std::uint64_t total_rejected = 0;
  std::uint64_t max_kappa = 0;
  std::vector<std::pair<double, double>> series;  // (t, rel_error)
};

/* Trial curves aligned on the shared grid k * sample_interval by
 * last-observation-carried-forward, then combined per bin. geo_rel_error is
 * the geometric mean over the positive finite entries (NaN when there are
 * none); n_finite counts the finite entries so bins polluted by non-finite
 * values are visible rather than silently averaged. */
struct BinnedSeries {
  std::vector<double> time;
  std::vector<double> geo_rel_error;
  std::vector<int> n_finite;
};

struct EnsembleSummary {
  std::string arm;
  int ell = 0;
  int agents = 0;
  Variant variant = Variant::ASJR;
  double cond_A = 0.0;
  double direct_analytic_error = 0.0;  // ||x_star - u||_2 for this problem
  int n_trials = 0;
  int n_converged = 0;
  double convergence_rate = 0.0;
  double geo_time_to_converge = 0.0;  // over converged trials; NaN if none
  BinnedSeries series;
  std::vector<TrialRecord> trials;
};

/* exp(mean(log)) over the positive finite entries; NaN when none qualify. */
double geometric_mean(const std::vector<double>& values);

BinnedSeries bin_trials(const std::vector<TrialRecord>& trials,
                        double sample_interval);

/* Runs config.trials independent runs; trial k uses the derived seed
 * mix(seed, Trial, k). Poisson systems and partitions are cached per (ell)
 * and (ell, agents) across calls. Infrastructure failures are rethrown with
 * the trial index prefixed. */
EnsembleSummary run_ensemble(const ExperimentConfig& config);

/* Shared Poisson caches (also used by the acceptance gates). References
 * stay valid for the process lifetime. */
const SparseSystem& cached_poisson(int ell);
const Partition& cached_partition(int ell, int agents);

/* CSV rows `arm,time_s,geo_rel_error,n_trials,n_finite`, times with 3
 * decimals, errors with 17 significant digits; one block of rows per arm.
 * Arm labels must not contain commas. */
std::string csv_string(const std::vector<EnsembleSummary>& arms);
void emit_csv(const std::vector<EnsembleSummary>& arms,
              const std::string& path);

struct CsvSeries {
  std::string arm;
  std::vector<double> time;
  std::vector<double> geo_rel_error;
};
std::vector<CsvSeries> parse_csv(const std::string& path);

/* Log-scale line plot of geo-mean relative error vs time, one polyline per
 * arm; non-finite values break the line. */
void emit_svg_plot(const std::string& csv_path, const std::string& svg_path);

/* Options shared by the canned suites. `compressed` divides the protocol
 * durations by 10 (convergence_duration 0.1 s, malevolent periods scaled
 * alike) to keep virtual-clock runs desk-sized; ratios are preserved. */
struct SuiteOptions {
  std::string out_dir = "artifacts";
  int trials = 10;
  std::uint64_t seed = 1;
  ClockKind clock = ClockKind::RealTime;
  bool compressed = false;
  double wall_cap = 60.0;
};

/* Corruption-free grid ell in {4..12,20,25,30} x N in {4,8,16} x both
 * variants. Writes verify_error.csv/.svg (ensemble curves) and
 * verify_scaling.csv (arm,ell,agents,cond_A,geo_time_s,converged,trials).
 * Returns nonzero if any trial fails to converge. */
int verification_suite(const SuiteOptions& opt);

/* ell=20, N=16, both variants. Writes bitflip_probability.csv/.svg
 * (whole-word flips at p in {0,0.0025,0.005,0.01,0.015,0.02,0.04}) and
 * bitflip_ranges.csv/.svg (p=0.01 across the five bit ranges). Returns
 * nonzero on infrastructure failure only. */
int bitflip_suite(const SuiteOptions& opt);

/* ell=20, N=16, both variants, target agent 8, omega_f=2.5 s. Writes
 * malevolent_delta.csv/.svg (delta in {0.1..0.5}, omega_r=0.2 s) and
 * malevolent_recovery.csv/.svg (omega_r in {0.1..0.5} s, delta=0.2).
 * Returns nonzero on infrastructure failure only. */
int malevolent_suite(const SuiteOptions& opt);

}  // namespace asjr

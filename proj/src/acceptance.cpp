#include "asjr/acceptance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>

#include "asjr/harness.hpp"

namespace asjr {
namespace {

/* Pinned gate parameters. All gates run on the virtual clock with the
 * compressed protocol durations (x10 shorter than the real-time defaults,
 * ratios preserved). */
constexpr double kDuration = 0.1;  // convergence window (s)
constexpr double kEpsilon = 1e-6;
constexpr int kTrials = 10;
constexpr int kMinConverged = 9;  // the "9 of 10" gates

constexpr double kLockstepTol = 1e-14;      // per element, 50 rounds
constexpr double kAccuracyFactor = 10.0;    // * epsilon * cond(A)
constexpr double kAnalyticFactor = 2.0;     // * direct-solve discretization
constexpr double kFitR2Min = 0.9;
constexpr double kNSpreadMax = 2.0;         // across N for fixed ell
constexpr double kBitflipSlowdownMax = 3.0;      // p=0.04 vs p=0
constexpr double kMalevolentSlowdownMax = 3.0;   // vs corruption-free
constexpr double kRecoverySpreadMax = 1.5;       // across omega_r arms
constexpr double kThresholdTol = 1e-15;

constexpr double kOmegaF = 0.25;  // compressed malevolent period (s)
constexpr double kOmegaR = 0.02;
constexpr int kMalevolentTarget = 8;

struct CleanKey {
  int variant, ell, agents;
  bool operator<(const CleanKey& o) const {
    return std::tie(variant, ell, agents) <
           std::tie(o.variant, o.ell, o.agents);
  }
};

class Context {
 public:
  explicit Context(std::uint64_t seed) : seed_(seed) {}
  std::uint64_t seed() const { return seed_; }

  ExperimentConfig base() const {
    ExperimentConfig cfg;
    cfg.clock = ClockKind::Virtual;
    cfg.trials = kTrials;
    cfg.seed = seed_;
    cfg.epsilon = kEpsilon;
    cfg.convergence_duration = kDuration;
    return cfg;
  }

  EnsembleSummary run_logged(const ExperimentConfig& cfg) {
    EnsembleSummary s = run_ensemble(cfg);
    std::fprintf(stderr, "  %-44s converged %2d/%2d", s.arm.c_str(),
                 s.n_converged, s.n_trials);
    if (s.n_converged > 0)
      std::fprintf(stderr, "  geo-time %.3fs", s.geo_time_to_converge);
    std::fprintf(stderr, "\n");
    return s;
  }

  /* Corruption-free ensembles shared between gates 2, 3 and 6. */
  const EnsembleSummary& clean(Variant v, int ell, int agents) {
    CleanKey key{static_cast<int>(v), ell, agents};
    auto it = cache_.find(key);
    if (it == cache_.end()) {
      ExperimentConfig cfg = base();
      cfg.variant = v;
      cfg.ell = ell;
      cfg.agents = agents;
      cfg.wall_cap = 30.0;
      it = cache_.emplace(key, run_logged(cfg)).first;
    }
    return it->second;
  }

 private:
  std::uint64_t seed_;
  std::map<CleanKey, EnsembleSummary> cache_;
};

std::string fmt(const char* spec, ...) {
  char buf[192];
  va_list ap;
  va_start(ap, spec);
  std::vsnprintf(buf, sizeof buf, spec, ap);
  va_end(ap);
  return buf;
}

/* 1. Lockstep schedule equals classic dense Jacobi, element for element. */
bool gate_lockstep(Context&, std::string& detail) {
  double worst = 0.0;
  for (int ell : {2, 4}) {
    const SparseSystem& sys = cached_poisson(ell);
    for (int agents : {1, 2, ell}) {
      const Partition& part = cached_partition(ell, agents);
      const auto traj =
          lockstep_trajectory(sys, part, Variant::ASJ, kEpsilon, 50);
      std::vector<double> x(sys.m, 0.0), xn(sys.m);
      for (int round = 0; round < 50; ++round) {
        for (int r = 0; r < sys.m; ++r) {
          double acc = sys.b[r];
          for (int k = sys.A.row_ptr[r]; k < sys.A.row_ptr[r + 1]; ++k)
            if (sys.A.cols[k] != r) acc -= sys.A.vals[k] * x[sys.A.cols[k]];
          xn[r] = acc / sys.diag[r];
        }
        for (int r = 0; r < sys.m; ++r)
          worst = std::max(worst, std::abs(traj[round][r] - xn[r]));
        x = xn;
      }
    }
  }
  detail = fmt("max per-element gap %.2e (tol %.0e)", worst, kLockstepTol);
  return worst <= kLockstepTol;
}

/* 2. Corruption-free runs always converge, to the direct solution within
 * 10 * eps * cond(A) and to the closed-form solution within twice the
 * discretization error of the direct solve. */
bool gate_clean_accuracy(Context& ctx, std::string& detail) {
  int not_converged = 0, trials = 0;
  double worst_rel = 0.0, worst_ana = 0.0;
  for (Variant v : {Variant::ASJ, Variant::ASJR})
    for (int ell : {4, 8, 12, 20})
      for (int agents : {4, 8, 16}) {
        const EnsembleSummary& s = ctx.clean(v, ell, agents);
        const double bound = kAccuracyFactor * kEpsilon * s.cond_A;
        for (const TrialRecord& tr : s.trials) {
          ++trials;
          if (tr.status != RunStatus::Converged) {
            ++not_converged;
            continue;
          }
          worst_rel = std::max(worst_rel, tr.final_rel_error / bound);
          worst_ana = std::max(
              worst_ana, tr.final_analytic_error /
                             (kAnalyticFactor * s.direct_analytic_error));
        }
      }
  detail = fmt("%d/%d converged; worst rel %.2f of bound, analytic %.2f",
               trials - not_converged, trials, worst_rel, worst_ana);
  return not_converged == 0 && worst_rel <= 1.0 && worst_ana <= 1.0;
}

struct Fit {
  double slope = 0.0, r2 = 0.0;
};

Fit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  Fit f;
  if (sxx > 0.0) f.slope = sxy / sxx;
  if (sxx > 0.0 && syy > 0.0) f.r2 = (sxy * sxy) / (sxx * syy);
  return f;
}

/* 3. Geo-mean time to converge grows linearly with cond(A); agent count
 * barely matters.  The fit is taken per (variant, agent count) series --
 * agent count shifts the intercept, so pooling the three series into one
 * regression would only measure that offset, not the conditioning trend. */
bool gate_scaling(Context& ctx, std::string& detail) {
  const int ells[] = {8, 9, 10, 11, 12, 20, 25, 30};
  double min_r2 = 1.0, min_slope = std::numeric_limits<double>::infinity();
  double worst_spread = 0.0;
  bool all_defined = true;
  for (Variant v : {Variant::ASJ, Variant::ASJR}) {
    for (int agents : {4, 8, 16}) {
      std::vector<double> xs, ys;
      for (int ell : ells) {
        const EnsembleSummary& s = ctx.clean(v, ell, agents);
        const double t = s.geo_time_to_converge;
        if (!(std::isfinite(t) && t > 0.0)) {
          all_defined = false;
          continue;
        }
        xs.push_back(s.cond_A);
        ys.push_back(t);
      }
      const Fit f = fit_line(xs, ys);
      min_r2 = std::min(min_r2, f.r2);
      min_slope = std::min(min_slope, f.slope);
    }
    for (int ell : ells) {
      double tmin = std::numeric_limits<double>::infinity(), tmax = 0.0;
      for (int agents : {4, 8, 16}) {
        const double t = ctx.clean(v, ell, agents).geo_time_to_converge;
        if (!(std::isfinite(t) && t > 0.0)) continue;
        tmin = std::min(tmin, t);
        tmax = std::max(tmax, t);
      }
      if (std::isfinite(tmin))
        worst_spread = std::max(worst_spread, tmax / tmin);
    }
  }
  detail = fmt("R^2 %.3f (min), slope %.2e, N-spread %.2f (max %.1f)", min_r2,
               min_slope, worst_spread, kNSpreadMax);
  return all_defined && min_slope > 0.0 && min_r2 >= kFitR2Min &&
         worst_spread <= kNSpreadMax;
}

/* 4. The rejection variant rides out whole-word bit flips at every tested
 * probability, and p=0.04 costs at most 3x the clean time. */
bool gate_bitflip(Context& ctx, std::string& detail) {
  const double probs[] = {0.0, 0.0025, 0.005, 0.01, 0.015, 0.02, 0.04};
  double baseline = std::numeric_limits<double>::quiet_NaN();
  double worst_time = std::numeric_limits<double>::quiet_NaN();
  int min_conv = kTrials;
  for (double p : probs) {
    ExperimentConfig cfg = ctx.base();
    cfg.ell = 20;
    cfg.agents = 16;
    cfg.variant = Variant::ASJR;
    cfg.wall_cap = 12.0;
    cfg.corruption.kind = CorruptionKind::BitFlip;
    cfg.corruption.bitflip.probability = p;
    cfg.corruption.bitflip.range = BitRange::All;
    const EnsembleSummary s = ctx.run_logged(cfg);
    if (p == 0.0)
      baseline = s.geo_time_to_converge;
    else
      min_conv = std::min(min_conv, s.n_converged);
    if (p == 0.04) worst_time = s.geo_time_to_converge;
  }
  const double ratio = worst_time / baseline;
  detail = fmt("min converged %d/%d; p=0.04 slowdown %.2fx (max %.1fx)",
               min_conv, kTrials, ratio, kBitflipSlowdownMax);
  return min_conv >= kMinConverged && ratio <= kBitflipSlowdownMax;
}

/* 5. At p=0.01 the plain variant survives only lower-mantissa flips and
 * reliably dies on exponent flips; the rejection variant survives every
 * bit range. */
bool gate_bit_ranges(Context& ctx, std::string& detail) {
  auto arm = [&](Variant v, BitRange r) {
    ExperimentConfig cfg = ctx.base();
    cfg.ell = 20;
    cfg.agents = 16;
    cfg.variant = v;
    cfg.wall_cap = 8.0;
    cfg.corruption.kind = CorruptionKind::BitFlip;
    cfg.corruption.bitflip.probability = 0.01;
    cfg.corruption.bitflip.range = r;
    return ctx.run_logged(cfg);
  };
  const int asj_lower = arm(Variant::ASJ, BitRange::LowerMantissa).n_converged;
  const int asj_exp = arm(Variant::ASJ, BitRange::Exponent).n_converged;
  int min_asjr = kTrials;
  for (BitRange r :
       {BitRange::All, BitRange::LowerMantissa, BitRange::UpperMantissa,
        BitRange::Exponent, BitRange::Sign})
    min_asjr = std::min(min_asjr, arm(Variant::ASJR, r).n_converged);
  detail = fmt(
      "asj lower-mantissa %d/%d, asj exponent failed %d/%d, asjr min %d/%d",
      asj_lower, kTrials, kTrials - asj_exp, kTrials, min_asjr, kTrials);
  return asj_lower >= kMinConverged && (kTrials - asj_exp) >= kMinConverged &&
         min_asjr >= kMinConverged;
}

/* 6. A periodically compromised agent defeats the plain variant outright;
 * the rejection variant still converges in <= 3x the clean time, and the
 * length of the down phase barely matters. */
bool gate_malevolent(Context& ctx, std::string& detail) {
  const double baseline = ctx.clean(Variant::ASJR, 20, 16).geo_time_to_converge;
  auto arm = [&](Variant v, double omega_r, double delta, double wall) {
    ExperimentConfig cfg = ctx.base();
    cfg.ell = 20;
    cfg.agents = 16;
    cfg.variant = v;
    cfg.wall_cap = wall;
    cfg.corruption.kind = CorruptionKind::Malevolent;
    cfg.corruption.malevolent =
        MalevolentPolicy{kOmegaF, omega_r, delta, kMalevolentTarget};
    return ctx.run_logged(cfg);
  };

  int asj_conv = 0, min_asjr = kTrials;
  double worst_ratio = 0.0;
  for (double delta : {0.1, 0.2, 0.3, 0.4, 0.5}) {
    asj_conv += arm(Variant::ASJ, kOmegaR, delta, 6.0).n_converged;
    const EnsembleSummary s = arm(Variant::ASJR, kOmegaR, delta, 10.0);
    min_asjr = std::min(min_asjr, s.n_converged);
    worst_ratio = std::max(worst_ratio, s.geo_time_to_converge / baseline);
  }
  double rec_min = std::numeric_limits<double>::infinity(), rec_max = 0.0;
  for (double omega_r : {0.01, 0.02, 0.03, 0.04, 0.05}) {
    const EnsembleSummary s = arm(Variant::ASJR, omega_r, 0.2, 10.0);
    min_asjr = std::min(min_asjr, s.n_converged);
    rec_min = std::min(rec_min, s.geo_time_to_converge);
    rec_max = std::max(rec_max, s.geo_time_to_converge);
  }
  const double spread = rec_max / rec_min;
  detail = fmt(
      "asj converged %d (want 0); asjr min %d/%d, slowdown %.2fx, "
      "omega_r spread %.2fx",
      asj_conv, min_asjr, kTrials, worst_ratio, spread);
  return asj_conv == 0 && min_asjr >= kMinConverged &&
         worst_ratio <= kMalevolentSlowdownMax && spread <= kRecoverySpreadMax;
}

/* 7. The rejection threshold reproduces the hand-computed value and is
 * strictly decreasing in the path-length estimate. */
bool gate_threshold(Context&, std::string& detail) {
  const double v = rejection_threshold(1.0, 2.0, 0.5, 3);
  const double gap = std::abs(v - 0.25);
  bool monotone = true;
  for (std::int32_t s = 0; s < 64; ++s)
    if (!(rejection_threshold(1.0, 2.0, 0.5, s + 1) <
          rejection_threshold(1.0, 2.0, 0.5, s)))
      monotone = false;
  detail = fmt("value gap %.2e (tol %.0e), strictly decreasing: %s", gap,
               kThresholdTol, monotone ? "yes" : "no");
  return gap <= kThresholdTol && monotone;
}

/* 8. The gossiped path-length estimate never exceeds the true shortest path
 * recorded by the instrumentation. */
bool gate_path_bound(Context& ctx, std::string& detail) {
  const SparseSystem& sys = cached_poisson(8);
  const Partition& part = cached_partition(8, 8);
  std::uint64_t checks = 0, violations = 0;
  int converged = 0;
  for (int k = 0; k < 10; ++k) {
    NetworkConfig nc;
    nc.variant = Variant::ASJR;
    nc.clock = ClockKind::Virtual;
    nc.epsilon = kEpsilon;
    nc.convergence_duration = kDuration;
    nc.caps = RunCaps{30.0, 10'000'000};
    nc.instrument = true;
    nc.seed = mix_seed(ctx.seed(),
                       static_cast<std::uint64_t>(StreamKind::Trial),
                       0x8000u + k);
    Network net(sys, part, nc);
    const RunResult r = net.run();
    checks += r.dag_refresh_checks;
    violations += r.dag_refresh_violations;
    converged += r.status == RunStatus::Converged;
    std::fprintf(stderr, "  instrumented run %d: %s, %llu checks\n", k,
                 run_status_name(r.status),
                 static_cast<unsigned long long>(r.dag_refresh_checks));
  }
  detail = fmt("%llu refresh checks, %llu violations, %d/10 converged",
               static_cast<unsigned long long>(checks),
               static_cast<unsigned long long>(violations), converged);
  return converged == 10 && checks > 0 && violations == 0;
}

/* 9. Identical config file + seed give byte-identical CSV output. */
bool gate_determinism(Context& ctx, std::string& detail) {
  namespace fs = std::filesystem;
  const fs::path cfg_path =
      fs::temp_directory_path() / "asjr_accept_determinism.cfg";
  {
    std::ofstream out(cfg_path);
    out << "ell = 8\nagents = 8\nvariant = asjr\nclock = virtual\n"
        << "corruption = bitflip\nbitflip_probability = 0.01\n"
        << "bitflip_range = all\ntrials = 3\nconvergence_duration = 0.1\n"
        << "wall_cap = 5\nseed = " << ctx.seed() << "\n";
    if (!out) throw std::runtime_error("cannot write " + cfg_path.string());
  }
  std::string csv[2];
  for (int rep = 0; rep < 2; ++rep) {
    ExperimentConfig cfg = parse_config_file(cfg_path.string());
    cfg.validate();
    const EnsembleSummary s = run_ensemble(cfg);
    csv[rep] = csv_string({s});
  }
  fs::remove(cfg_path);
  const bool same = !csv[0].empty() && csv[0] == csv[1];
  detail = fmt("%zu-byte CSV %s across reruns", csv[0].size(),
               same ? "identical" : "DIFFERS");
  return same;
}

struct GateDef {
  int id;
  const char* name;
  bool (*fn)(Context&, std::string&);
};

constexpr GateDef kGates[] = {
    {1, "lockstep-matches-dense-jacobi", gate_lockstep},
    {2, "clean-convergence-accuracy", gate_clean_accuracy},
    {3, "time-scales-with-conditioning", gate_scaling},
    {4, "bitflip-resilience", gate_bitflip},
    {5, "bitflip-range-behavior", gate_bit_ranges},
    {6, "malevolent-resilience", gate_malevolent},
    {7, "rejection-threshold-value", gate_threshold},
    {8, "path-estimate-lower-bound", gate_path_bound},
    {9, "deterministic-virtual-runs", gate_determinism},
};

}  // namespace

int run_acceptance(const std::vector<int>& gates, std::uint64_t seed) {
  for (int id : gates)
    if (id < 1 || id > 9) {
      std::fprintf(stderr, "unknown gate %d (valid: 1..9)\n", id);
      return 2;
    }
  Context ctx(seed);
  int failures = 0, ran = 0;
  for (const GateDef& g : kGates) {
    if (!gates.empty() &&
        std::find(gates.begin(), gates.end(), g.id) == gates.end())
      continue;
    ++ran;
    std::string detail;
    bool ok = false;
    try {
      ok = g.fn(ctx, detail);
    } catch (const std::exception& e) {
      detail = std::string("error: ") + e.what();
    }
    std::printf("[%s] %d %-32s %s\n", ok ? "PASS" : "FAIL", g.id, g.name,
                detail.c_str());
    std::fflush(stdout);
    failures += ok ? 0 : 1;
  }
  std::printf("acceptance: %d/%d gates passed\n", ran - failures, ran);
  std::fflush(stdout);
  return failures;
}

}  // namespace asjr

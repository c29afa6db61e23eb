#include "asjr/harness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace asjr {

namespace {

constexpr const char* kCsvHeader = "arm,time_s,geo_rel_error,n_trials,n_finite";

double l2_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    acc += d * d;
  }
  return std::sqrt(acc);
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t idx = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &idx);
  } catch (const std::exception&) {
    throw std::invalid_argument(key + ": not a number: '" + v + "'");
  }
  if (idx != v.size())
    throw std::invalid_argument(key + ": not a number: '" + v + "'");
  return x;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::size_t idx = 0;
  std::uint64_t x = 0;
  try {
    x = std::stoull(v, &idx);
  } catch (const std::exception&) {
    throw std::invalid_argument(key + ": not a nonnegative integer: '" + v +
                                "'");
  }
  if (idx != v.size() || (!v.empty() && v[0] == '-'))
    throw std::invalid_argument(key + ": not a nonnegative integer: '" + v +
                                "'");
  return x;
}

int parse_int(const std::string& key, const std::string& v) {
  std::size_t idx = 0;
  long x = 0;
  try {
    x = std::stol(v, &idx);
  } catch (const std::exception&) {
    throw std::invalid_argument(key + ": not an integer: '" + v + "'");
  }
  if (idx != v.size())
    throw std::invalid_argument(key + ": not an integer: '" + v + "'");
  return static_cast<int>(x);
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

/* ------------------------------------------------------------------ */
/* configuration                                                       */

void ExperimentConfig::validate() const {
  if (ell < 1) throw std::invalid_argument("ell must be >= 1");
  if (agents < 1 || agents > ell * ell)
    throw std::invalid_argument("agents must be in [1, ell^2]");
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (epsilon <= 0.0) throw std::invalid_argument("epsilon must be positive");
  if (convergence_duration <= 0.0)
    throw std::invalid_argument("convergence_duration must be positive");
  if (wall_cap <= 0.0) throw std::invalid_argument("wall_cap must be positive");
  if (max_iterations == 0)
    throw std::invalid_argument("max_iterations must be >= 1");
  if (sample_interval <= 0.0)
    throw std::invalid_argument("sample_interval must be positive");
  if (timing.link_delay_min < 0.0 ||
      timing.link_delay_max < timing.link_delay_min || timing.compute_min < 0.0 ||
      timing.compute_max < timing.compute_min)
    throw std::invalid_argument("timing ranges are inverted or negative");
  if (corruption.kind == CorruptionKind::BitFlip)
    corruption.bitflip.validate();
  if (corruption.kind == CorruptionKind::Malevolent) {
    corruption.malevolent.validate();
    if (corruption.malevolent.target_agent >= agents)
      throw std::invalid_argument("malevolent_target must be < agents");
  }
  if (arm.find(',') != std::string::npos)
    throw std::invalid_argument("arm label must not contain commas");
}

NetworkConfig ExperimentConfig::network(std::uint64_t trial_seed) const {
  NetworkConfig nc;
  nc.variant = variant;
  nc.clock = clock;
  nc.timing = timing;
  nc.corruption = corruption;
  nc.caps = RunCaps{wall_cap, max_iterations};
  nc.epsilon = epsilon;
  nc.convergence_duration = convergence_duration;
  nc.sample_interval = sample_interval;
  nc.seed = trial_seed;
  return nc;
}

std::string ExperimentConfig::derived_arm() const {
  std::string s = variant_name(variant);
  s += "/ell=" + std::to_string(ell) + "/N=" + std::to_string(agents);
  if (corruption.kind == CorruptionKind::BitFlip) {
    s += "/p=" + fmt("%g", corruption.bitflip.probability);
    s += "/range=";
    s += bit_range_name(corruption.bitflip.range);
  } else if (corruption.kind == CorruptionKind::Malevolent) {
    s += "/delta=" + fmt("%g", corruption.malevolent.delta);
    s += "/omega_r=" + fmt("%g", corruption.malevolent.omega_r);
  }
  return s;
}

void apply_key_value(ExperimentConfig& cfg, const std::string& key,
                     const std::string& value) {
  if (key == "ell") {
    cfg.ell = parse_int(key, value);
  } else if (key == "agents") {
    cfg.agents = parse_int(key, value);
  } else if (key == "variant") {
    if (value == "asj")
      cfg.variant = Variant::ASJ;
    else if (value == "asjr" || value == "asj-r")
      cfg.variant = Variant::ASJR;
    else
      throw std::invalid_argument("variant: expected asj or asjr, got '" +
                                  value + "'");
  } else if (key == "clock") {
    if (value == "virtual")
      cfg.clock = ClockKind::Virtual;
    else if (value == "realtime" || value == "real-time")
      cfg.clock = ClockKind::RealTime;
    else
      throw std::invalid_argument("clock: expected virtual or realtime, got '" +
                                  value + "'");
  } else if (key == "seed") {
    cfg.seed = parse_u64(key, value);
  } else if (key == "trials") {
    cfg.trials = parse_int(key, value);
  } else if (key == "epsilon") {
    cfg.epsilon = parse_double(key, value);
  } else if (key == "convergence_duration") {
    cfg.convergence_duration = parse_double(key, value);
  } else if (key == "max_iterations") {
    cfg.max_iterations = parse_u64(key, value);
  } else if (key == "wall_cap") {
    cfg.wall_cap = parse_double(key, value);
  } else if (key == "sample_interval") {
    cfg.sample_interval = parse_double(key, value);
  } else if (key == "arm") {
    cfg.arm = value;
  } else if (key == "corruption") {
    if (value == "none")
      cfg.corruption.kind = CorruptionKind::None;
    else if (value == "bitflip")
      cfg.corruption.kind = CorruptionKind::BitFlip;
    else if (value == "malevolent")
      cfg.corruption.kind = CorruptionKind::Malevolent;
    else
      throw std::invalid_argument(
          "corruption: expected none, bitflip or malevolent, got '" + value +
          "'");
  } else if (key == "bitflip_probability") {
    cfg.corruption.bitflip.probability = parse_double(key, value);
  } else if (key == "bitflip_range") {
    bool found = false;
    for (BitRange r : {BitRange::All, BitRange::LowerMantissa,
                       BitRange::UpperMantissa, BitRange::Exponent,
                       BitRange::Sign})
      if (value == bit_range_name(r)) {
        cfg.corruption.bitflip.range = r;
        found = true;
      }
    if (!found)
      throw std::invalid_argument(
          "bitflip_range: expected all, lower-mantissa, upper-mantissa, "
          "exponent or sign, got '" +
          value + "'");
  } else if (key == "malevolent_omega_f") {
    cfg.corruption.malevolent.omega_f = parse_double(key, value);
  } else if (key == "malevolent_omega_r") {
    cfg.corruption.malevolent.omega_r = parse_double(key, value);
  } else if (key == "malevolent_delta") {
    cfg.corruption.malevolent.delta = parse_double(key, value);
  } else if (key == "malevolent_target") {
    cfg.corruption.malevolent.target_agent = parse_int(key, value);
  } else if (key == "link_delay_min") {
    cfg.timing.link_delay_min = parse_double(key, value);
  } else if (key == "link_delay_max") {
    cfg.timing.link_delay_max = parse_double(key, value);
  } else if (key == "compute_min") {
    cfg.timing.compute_min = parse_double(key, value);
  } else if (key == "compute_max") {
    cfg.timing.compute_max = parse_double(key, value);
  } else {
    throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      apply_key_value(cfg, key, value);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": " +
                                  e.what());
    }
  }
  return cfg;
}

void apply_env_overrides(ExperimentConfig& cfg) {
  const char* env = std::getenv("ABFT_SEED");
  if (env) cfg.seed = parse_u64("ABFT_SEED", env);
}

/* ------------------------------------------------------------------ */
/* aggregation                                                         */

double geometric_mean(const std::vector<double>& values) {
  double log_sum = 0.0;
  int n = 0;
  for (double v : values)
    if (std::isfinite(v) && v > 0.0) {
      log_sum += std::log(v);
      ++n;
    }
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  return std::exp(log_sum / n);
}

BinnedSeries bin_trials(const std::vector<TrialRecord>& trials,
                        double sample_interval) {
  BinnedSeries out;
  double t_max = 0.0;
  bool any = false;
  for (const TrialRecord& tr : trials)
    if (!tr.series.empty()) {
      t_max = std::max(t_max, tr.series.back().first);
      any = true;
    }
  if (!any) return out;
  const int bins =
      1 + static_cast<int>(std::ceil(t_max / sample_interval - 1e-9));
  out.time.resize(bins);
  out.geo_rel_error.resize(bins);
  out.n_finite.resize(bins);
  std::vector<std::size_t> cursor(trials.size(), 0);
  std::vector<double> bucket;
  for (int k = 0; k < bins; ++k) {
    const double t = k * sample_interval;
    out.time[k] = t;
    bucket.clear();
    int finite = 0;
    for (std::size_t w = 0; w < trials.size(); ++w) {
      const auto& series = trials[w].series;
      if (series.empty()) continue;
      std::size_t& c = cursor[w];
      while (c + 1 < series.size() && series[c + 1].first <= t + 1e-12) ++c;
      /* bins before the first observation take the first observation */
      const double v = series[c].second;
      bucket.push_back(v);
      if (std::isfinite(v)) ++finite;
    }
    out.geo_rel_error[k] = geometric_mean(bucket);
    out.n_finite[k] = finite;
  }
  return out;
}

/* ------------------------------------------------------------------ */
/* caches                                                              */

namespace {
std::mutex cache_mu;
std::map<int, std::unique_ptr<SparseSystem>> sys_cache;
std::map<std::pair<int, int>, std::unique_ptr<Partition>> part_cache;
}  // namespace

const SparseSystem& cached_poisson(int ell) {
  std::lock_guard<std::mutex> lk(cache_mu);
  auto& slot = sys_cache[ell];
  if (!slot) slot = std::make_unique<SparseSystem>(build_poisson(ell));
  return *slot;
}

const Partition& cached_partition(int ell, int agents) {
  const SparseSystem& sys = cached_poisson(ell);
  std::lock_guard<std::mutex> lk(cache_mu);
  auto& slot = part_cache[{ell, agents}];
  if (!slot)
    slot = std::make_unique<Partition>(
        partition_rows(sys.m, agents, sys.M));
  return *slot;
}

/* ------------------------------------------------------------------ */
/* ensemble runner                                                     */

EnsembleSummary run_ensemble(const ExperimentConfig& config) {
  config.validate();
  const SparseSystem& sys = cached_poisson(config.ell);
  const Partition& part = cached_partition(config.ell, config.agents);
  const std::vector<double> u = analytic_solution(config.ell);

  EnsembleSummary s;
  s.arm = config.arm.empty() ? config.derived_arm() : config.arm;
  s.ell = config.ell;
  s.agents = config.agents;
  s.variant = config.variant;
  s.cond_A = sys.cond_A;
  s.direct_analytic_error = l2_diff(sys.x_star, u);
  s.n_trials = config.trials;

  std::vector<double> converge_times;
  for (int k = 0; k < config.trials; ++k) {
    const std::uint64_t trial_seed = mix_seed(
        config.seed, static_cast<std::uint64_t>(StreamKind::Trial), k);
    RunResult r;
    try {
      Network net(sys, part, config.network(trial_seed));
      r = net.run();
    } catch (const std::exception& e) {
      throw std::runtime_error("trial " + std::to_string(k) + ": " + e.what());
    }
    TrialRecord tr;
    tr.status = r.status;
    tr.t_end = r.t_end;
    tr.time_to_converge = r.time_to_converge;
    tr.final_rel_error = r.final_rel_error;
    tr.final_analytic_error = l2_diff(r.final_x, u);
    for (const AgentSummary& a : r.agents) {
      tr.total_rejected += a.counters.rejected();
      tr.max_kappa = std::max(tr.max_kappa, a.kappa);
    }
    tr.series.reserve(r.samples.size());
    for (const MonitorSample& ms : r.samples)
      tr.series.emplace_back(ms.t, ms.rel_error);
    std::stable_sort(tr.series.begin(), tr.series.end(),
                     [](const auto& a, const auto& b) {
                       return a.first < b.first;
                     });
    if (r.status == RunStatus::Converged) {
      ++s.n_converged;
      converge_times.push_back(r.time_to_converge);
    }
    s.trials.push_back(std::move(tr));
  }
  s.convergence_rate =
      static_cast<double>(s.n_converged) / static_cast<double>(config.trials);
  s.geo_time_to_converge = geometric_mean(converge_times);
  s.series = bin_trials(s.trials, config.sample_interval);
  return s;
}

/* ------------------------------------------------------------------ */
/* CSV                                                                 */

std::string csv_string(const std::vector<EnsembleSummary>& arms) {
  std::string out = kCsvHeader;
  out += '\n';
  char buf[96];
  for (const EnsembleSummary& a : arms) {
    if (a.arm.find(',') != std::string::npos)
      throw std::invalid_argument("arm label contains a comma: " + a.arm);
    for (std::size_t k = 0; k < a.series.time.size(); ++k) {
      out += a.arm;
      std::snprintf(buf, sizeof buf, ",%.3f,%.16e,%d,%d\n", a.series.time[k],
                    a.series.geo_rel_error[k], a.n_trials,
                    a.series.n_finite[k]);
      out += buf;
    }
  }
  return out;
}

void emit_csv(const std::vector<EnsembleSummary>& arms,
              const std::string& path) {
  const std::string body = csv_string(arms);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << body;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<CsvSeries> parse_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open CSV: " + path);
  std::string line;
  if (!std::getline(in, line) || trim(line) != kCsvHeader)
    throw std::runtime_error(path + ": missing or wrong CSV header");
  std::vector<CsvSeries> series;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (fields.size() < 4) {
      const std::size_t comma = line.find(',', pos);
      if (comma == std::string::npos) break;
      fields.push_back(line.substr(pos, comma - pos));
      pos = comma + 1;
    }
    fields.push_back(line.substr(pos));
    if (fields.size() != 5)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected 5 fields");
    CsvSeries* dst = nullptr;
    for (CsvSeries& existing : series)
      if (existing.arm == fields[0]) dst = &existing;
    if (!dst) {
      series.push_back(CsvSeries{fields[0], {}, {}});
      dst = &series.back();
    }
    dst->time.push_back(parse_double("time_s", fields[1]));
    dst->geo_rel_error.push_back(std::strtod(fields[2].c_str(), nullptr));
  }
  return series;
}

/* ------------------------------------------------------------------ */
/* SVG plot                                                            */

namespace {

const char* kPalette[10] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                            "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                            "#bcbd22", "#17becf"};

double nice_step(double raw) {
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double f : {1.0, 2.0, 2.5, 5.0, 10.0})
    if (raw <= f * mag * (1.0 + 1e-12)) return f * mag;
  return 10.0 * mag;
}

}  // namespace

void emit_svg_plot(const std::string& csv_path, const std::string& svg_path) {
  const std::vector<CsvSeries> series = parse_csv(csv_path);

  double t_max = 0.0;
  double e_min = std::numeric_limits<double>::infinity();
  double e_max = 0.0;
  for (const CsvSeries& s : series)
    for (std::size_t k = 0; k < s.time.size(); ++k) {
      t_max = std::max(t_max, s.time[k]);
      const double v = s.geo_rel_error[k];
      if (std::isfinite(v) && v > 0.0) {
        e_min = std::min(e_min, v);
        e_max = std::max(e_max, v);
      }
    }
  const bool have_data = e_max > 0.0;
  if (!have_data) {
    e_min = 1e-16;
    e_max = 1.0;
  }
  if (t_max <= 0.0) t_max = 1.0;
  int dec_lo = static_cast<int>(std::floor(std::log10(e_min)));
  int dec_hi = static_cast<int>(std::ceil(std::log10(e_max)));
  if (dec_hi <= dec_lo) dec_hi = dec_lo + 1;

  const double W = 960, H = 540;
  const double L = 80, R = W - 250, T = 30, B = H - 60;
  auto px = [&](double t) { return L + (R - L) * (t / t_max); };
  auto py = [&](double v) {
    const double lv = std::log10(v);
    return T + (B - T) * (dec_hi - lv) / (dec_hi - dec_lo);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
      << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << " " << H
      << "\">\n";
  svg << "<rect width=\"" << W << "\" height=\"" << H
      << "\" fill=\"white\"/>\n";
  svg << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << (R - L)
      << "\" height=\"" << (B - T)
      << "\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n";

  /* y decade gridlines + labels */
  const int dec_step =
      std::max(1, (dec_hi - dec_lo + 9) / 10);  /* at most ~10 labels */
  for (int d = dec_lo; d <= dec_hi; d += dec_step) {
    const double y = py(std::pow(10.0, d));
    svg << "<line x1=\"" << L << "\" y1=\"" << y << "\" x2=\"" << R
        << "\" y2=\"" << y << "\" stroke=\"#ddd\" stroke-width=\"1\"/>\n";
    svg << "<text x=\"" << (L - 8) << "\" y=\"" << (y + 4)
        << "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"12\">"
        << "1e" << d << "</text>\n";
  }
  /* x ticks */
  const double xstep = nice_step(t_max / 6.0);
  for (double t = 0.0; t <= t_max * (1.0 + 1e-9); t += xstep) {
    const double x = px(t);
    svg << "<line x1=\"" << x << "\" y1=\"" << B << "\" x2=\"" << x
        << "\" y2=\"" << (B + 5) << "\" stroke=\"#333\"/>\n";
    svg << "<text x=\"" << x << "\" y=\"" << (B + 20)
        << "\" text-anchor=\"middle\" font-family=\"monospace\" "
           "font-size=\"12\">"
        << fmt("%g", t) << "</text>\n";
  }
  svg << "<text x=\"" << ((L + R) / 2) << "\" y=\"" << (H - 15)
      << "\" text-anchor=\"middle\" font-family=\"monospace\" "
         "font-size=\"13\">time (s)</text>\n";
  svg << "<text x=\"20\" y=\"" << ((T + B) / 2)
      << "\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"13\""
         " transform=\"rotate(-90 20 "
      << ((T + B) / 2)
      << ")\">geometric-mean relative error</text>\n";

  if (!have_data)
    svg << "<text x=\"" << ((L + R) / 2) << "\" y=\"" << ((T + B) / 2)
        << "\" text-anchor=\"middle\" font-family=\"monospace\" "
           "font-size=\"14\">no finite data</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const CsvSeries& s = series[si];
    const char* color = kPalette[si % 10];
    const bool dashed = (si / 10) % 2 == 1;
    std::ostringstream points;
    bool open = false;
    auto flush = [&]() {
      if (open)
        svg << "<polyline fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"1.5\""
            << (dashed ? " stroke-dasharray=\"6,3\"" : "") << " points=\""
            << points.str() << "\"/>\n";
      points.str("");
      open = false;
    };
    for (std::size_t k = 0; k < s.time.size(); ++k) {
      const double v = s.geo_rel_error[k];
      if (!std::isfinite(v) || v <= 0.0) {
        flush();
        continue;
      }
      const double vc = std::min(std::max(v, std::pow(10.0, dec_lo)),
                                 std::pow(10.0, dec_hi));
      points << px(s.time[k]) << "," << py(vc) << " ";
      open = true;
    }
    flush();
    /* legend entry */
    const double ly = T + 10 + 16.0 * static_cast<double>(si);
    svg << "<line x1=\"" << (R + 10) << "\" y1=\"" << ly << "\" x2=\""
        << (R + 34) << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"2\""
        << (dashed ? " stroke-dasharray=\"6,3\"" : "") << "/>\n";
    svg << "<text x=\"" << (R + 40) << "\" y=\"" << (ly + 4)
        << "\" font-family=\"monospace\" font-size=\"11\">" << s.arm
        << "</text>\n";
  }
  svg << "</svg>\n";

  std::ofstream out(svg_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + svg_path);
  out << svg.str();
  if (!out) throw std::runtime_error("write failed: " + svg_path);
}

/* ------------------------------------------------------------------ */
/* canned suites                                                       */

namespace {

ExperimentConfig suite_base(const SuiteOptions& opt) {
  ExperimentConfig cfg;
  cfg.clock = opt.clock;
  cfg.trials = opt.trials;
  cfg.seed = opt.seed;
  cfg.wall_cap = opt.wall_cap;
  if (opt.compressed) cfg.convergence_duration = 0.1;
  return cfg;
}

void scale_malevolent(ExperimentConfig& cfg, const SuiteOptions& opt) {
  if (opt.compressed) {
    cfg.corruption.malevolent.omega_f /= 10.0;
    cfg.corruption.malevolent.omega_r /= 10.0;
  }
}

void report(const EnsembleSummary& s) {
  std::printf("%-44s converged %2d/%2d", s.arm.c_str(), s.n_converged,
              s.n_trials);
  if (s.n_converged > 0)
    std::printf("  geo-time %.3fs", s.geo_time_to_converge);
  std::printf("  final-err %.3e\n",
              s.series.geo_rel_error.empty() ? 0.0
                                             : s.series.geo_rel_error.back());
  std::fflush(stdout);
}

void write_artifacts(const std::vector<EnsembleSummary>& arms,
                     const std::string& out_dir, const std::string& stem) {
  std::filesystem::create_directories(out_dir);
  const std::string csv = out_dir + "/" + stem + ".csv";
  emit_csv(arms, csv);
  emit_svg_plot(csv, out_dir + "/" + stem + ".svg");
  std::printf("wrote %s and %s\n", csv.c_str(),
              (out_dir + "/" + stem + ".svg").c_str());
  std::fflush(stdout);
}

}  // namespace

int verification_suite(const SuiteOptions& opt) {
  const int ells[] = {4, 5, 6, 7, 8, 9, 10, 11, 12, 20, 25, 30};
  const int agent_counts[] = {4, 8, 16};
  bool all_converged = true;
  std::vector<EnsembleSummary> arms;
  for (Variant v : {Variant::ASJ, Variant::ASJR})
    for (int ell : ells)
      for (int n : agent_counts) {
        ExperimentConfig cfg = suite_base(opt);
        cfg.ell = ell;
        cfg.agents = n;
        cfg.variant = v;
        EnsembleSummary s = run_ensemble(cfg);
        report(s);
        if (s.n_converged < s.n_trials) all_converged = false;
        arms.push_back(std::move(s));
      }
  write_artifacts(arms, opt.out_dir, "verify_error");

  std::filesystem::create_directories(opt.out_dir);
  const std::string table_path = opt.out_dir + "/verify_scaling.csv";
  std::ofstream table(table_path, std::ios::binary);
  if (!table) throw std::runtime_error("cannot open for writing: " + table_path);
  table << "arm,ell,agents,cond_A,geo_time_s,converged,trials\n";
  char buf[128];
  for (const EnsembleSummary& s : arms) {
    std::snprintf(buf, sizeof buf, ",%d,%d,%.16e,%.6f,%d,%d\n", s.ell,
                  s.agents, s.cond_A, s.geo_time_to_converge, s.n_converged,
                  s.n_trials);
    table << s.arm << buf;
  }
  if (!table) throw std::runtime_error("write failed: " + table_path);
  std::printf("wrote %s\n", table_path.c_str());
  if (!all_converged)
    std::printf("FAIL: at least one corruption-free trial did not converge\n");
  return all_converged ? 0 : 1;
}

int bitflip_suite(const SuiteOptions& opt) {
  const double probs[] = {0.0, 0.0025, 0.005, 0.01, 0.015, 0.02, 0.04};
  std::vector<EnsembleSummary> prob_arms;
  for (Variant v : {Variant::ASJ, Variant::ASJR})
    for (double p : probs) {
      ExperimentConfig cfg = suite_base(opt);
      cfg.variant = v;
      cfg.corruption.kind = CorruptionKind::BitFlip;
      cfg.corruption.bitflip.probability = p;
      cfg.corruption.bitflip.range = BitRange::All;
      EnsembleSummary s = run_ensemble(cfg);
      report(s);
      prob_arms.push_back(std::move(s));
    }
  write_artifacts(prob_arms, opt.out_dir, "bitflip_probability");

  std::vector<EnsembleSummary> range_arms;
  for (Variant v : {Variant::ASJ, Variant::ASJR})
    for (BitRange r : {BitRange::All, BitRange::LowerMantissa,
                       BitRange::UpperMantissa, BitRange::Exponent,
                       BitRange::Sign}) {
      ExperimentConfig cfg = suite_base(opt);
      cfg.variant = v;
      cfg.corruption.kind = CorruptionKind::BitFlip;
      cfg.corruption.bitflip.probability = 0.01;
      cfg.corruption.bitflip.range = r;
      EnsembleSummary s = run_ensemble(cfg);
      report(s);
      range_arms.push_back(std::move(s));
    }
  write_artifacts(range_arms, opt.out_dir, "bitflip_ranges");
  return 0;
}

int malevolent_suite(const SuiteOptions& opt) {
  const double deltas[] = {0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<EnsembleSummary> delta_arms;
  for (Variant v : {Variant::ASJ, Variant::ASJR})
    for (double d : deltas) {
      ExperimentConfig cfg = suite_base(opt);
      cfg.variant = v;
      cfg.corruption.kind = CorruptionKind::Malevolent;
      cfg.corruption.malevolent = MalevolentPolicy{2.5, 0.2, d, 8};
      scale_malevolent(cfg, opt);
      EnsembleSummary s = run_ensemble(cfg);
      report(s);
      delta_arms.push_back(std::move(s));
    }
  write_artifacts(delta_arms, opt.out_dir, "malevolent_delta");

  const double omega_rs[] = {0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<EnsembleSummary> rec_arms;
  for (Variant v : {Variant::ASJ, Variant::ASJR})
    for (double wr : omega_rs) {
      ExperimentConfig cfg = suite_base(opt);
      cfg.variant = v;
      cfg.corruption.kind = CorruptionKind::Malevolent;
      cfg.corruption.malevolent = MalevolentPolicy{2.5, wr, 0.2, 8};
      scale_malevolent(cfg, opt);
      EnsembleSummary s = run_ensemble(cfg);
      report(s);
      rec_arms.push_back(std::move(s));
    }
  write_artifacts(rec_arms, opt.out_dir, "malevolent_recovery");
  return 0;
}

}  // namespace asjr

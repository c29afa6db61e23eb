#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "asjr/acceptance.hpp"
#include "asjr/harness.hpp"

namespace {

void add_suite_options(CLI::App* cmd, asjr::SuiteOptions& opt,
                       bool& use_virtual) {
  cmd->add_option("--out-dir", opt.out_dir, "artifact directory")
      ->capture_default_str();
  cmd->add_option("--trials", opt.trials, "trials per arm")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--seed", opt.seed, "master seed")->capture_default_str();
  cmd->add_option("--wall-cap", opt.wall_cap, "per-trial time cap (s)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_flag("--virtual", use_virtual,
                "deterministic virtual clock instead of real time");
  cmd->add_flag("--compressed", opt.compressed,
                "divide protocol durations by 10 (keeps ratios)");
}

std::uint64_t env_seed_or(std::uint64_t fallback) {
  asjr::ExperimentConfig probe;
  probe.seed = fallback;
  asjr::apply_env_overrides(probe);
  return probe.seed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Fault-tolerant asynchronous Jacobi solver: experiment runner and "
      "acceptance gates"};
  app.require_subcommand(1);

  asjr::SuiteOptions verify_opt, bitflip_opt, malevolent_opt;
  bool verify_virtual = false, bitflip_virtual = false,
       malevolent_virtual = false;
  CLI::App* verify = app.add_subcommand(
      "verify", "corruption-free grid; error curves and scaling table");
  add_suite_options(verify, verify_opt, verify_virtual);
  CLI::App* bitflip = app.add_subcommand(
      "bitflip", "bit-flip corruption sweeps (probability and bit range)");
  add_suite_options(bitflip, bitflip_opt, bitflip_virtual);
  CLI::App* malevolent = app.add_subcommand(
      "malevolent", "compromised-agent sweeps (offset size, down period)");
  add_suite_options(malevolent, malevolent_opt, malevolent_virtual);

  std::string run_config, run_out = "run.csv", run_svg;
  std::vector<std::string> run_sets;
  std::uint64_t run_seed = 0;
  int run_trials = 0;
  std::string run_clock;
  CLI::App* run =
      app.add_subcommand("run", "run one configured ensemble, write its CSV");
  run->add_option("--config", run_config, "key = value config file")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--out", run_out, "output CSV path")->capture_default_str();
  run->add_option("--svg", run_svg, "also plot to this SVG path");
  auto* run_seed_opt = run->add_option("--seed", run_seed, "override seed");
  auto* run_trials_opt =
      run->add_option("--trials", run_trials, "override trials")
          ->check(CLI::PositiveNumber);
  run->add_option("--clock", run_clock, "override clock (virtual|realtime)")
      ->check(CLI::IsMember({"virtual", "realtime"}));
  run->add_option("--set", run_sets,
                  "override any config key, e.g. --set ell=12");

  std::string plot_csv, plot_svg;
  CLI::App* plot =
      app.add_subcommand("plot", "render an emitted CSV as an SVG line plot");
  plot->add_option("csv", plot_csv, "input CSV")
      ->required()
      ->check(CLI::ExistingFile);
  plot->add_option("svg", plot_svg, "output SVG")->required();

  std::vector<int> accept_gates;
  std::uint64_t accept_seed = 1;
  CLI::App* accept = app.add_subcommand(
      "accept", "run the acceptance gates (nonzero exit on any failure)");
  accept->add_option("gates", accept_gates,
                     "gate numbers to run (default: all of 1..9)");
  accept->add_option("--seed", accept_seed, "master seed")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*verify) {
      if (verify_virtual) verify_opt.clock = asjr::ClockKind::Virtual;
      verify_opt.seed = env_seed_or(verify_opt.seed);
      return asjr::verification_suite(verify_opt);
    }
    if (*bitflip) {
      if (bitflip_virtual) bitflip_opt.clock = asjr::ClockKind::Virtual;
      bitflip_opt.seed = env_seed_or(bitflip_opt.seed);
      return asjr::bitflip_suite(bitflip_opt);
    }
    if (*malevolent) {
      if (malevolent_virtual) malevolent_opt.clock = asjr::ClockKind::Virtual;
      malevolent_opt.seed = env_seed_or(malevolent_opt.seed);
      return asjr::malevolent_suite(malevolent_opt);
    }
    if (*run) {
      asjr::ExperimentConfig cfg = asjr::parse_config_file(run_config);
      for (const std::string& kv : run_sets) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos)
          throw std::invalid_argument("--set expects key=value, got '" + kv +
                                      "'");
        asjr::apply_key_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
      }
      if (*run_seed_opt) cfg.seed = run_seed;
      if (*run_trials_opt) cfg.trials = run_trials;
      if (run_clock == "virtual") cfg.clock = asjr::ClockKind::Virtual;
      if (run_clock == "realtime") cfg.clock = asjr::ClockKind::RealTime;
      asjr::apply_env_overrides(cfg);
      cfg.validate();
      const asjr::EnsembleSummary s = asjr::run_ensemble(cfg);
      asjr::emit_csv({s}, run_out);
      std::printf("%s: converged %d/%d", s.arm.c_str(), s.n_converged,
                  s.n_trials);
      if (s.n_converged > 0)
        std::printf(", geo-time %.3fs", s.geo_time_to_converge);
      std::printf("; wrote %s\n", run_out.c_str());
      if (!run_svg.empty()) {
        asjr::emit_svg_plot(run_out, run_svg);
        std::printf("wrote %s\n", run_svg.c_str());
      }
      return 0;
    }
    if (*plot) {
      asjr::emit_svg_plot(plot_csv, plot_svg);
      std::printf("wrote %s\n", plot_svg.c_str());
      return 0;
    }
    if (*accept) {
      const char* env = std::getenv("ABFT_SEED");
      if (env) accept_seed = env_seed_or(accept_seed);
      return asjr::run_acceptance(accept_gates, accept_seed) == 0 ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}

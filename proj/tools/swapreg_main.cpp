#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "swapreg/config.hpp"
#include "swapreg/errors.hpp"
#include "swapreg/problem_io.hpp"
#include "swapreg/runner.hpp"

namespace {

/// Exit codes: 0 success, 1 invalid input (CLI or config or problem file),
/// 2 runtime failure, 3 a run's checks failed.
constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kRuntime = 2;

int do_run(const std::string& config_path, const std::string& seeds_spec,
           const std::string& out_dir, std::int32_t jobs) {
  swapreg::cli::RunConfig cfg = swapreg::cli::load_config(config_path);
  const std::vector<std::uint64_t> seeds =
      seeds_spec.empty() ? cfg.seeds : swapreg::cli::parse_seed_spec(seeds_spec);
  const std::filesystem::path out =
      out_dir.empty() ? std::filesystem::path(cfg.out)
                      : std::filesystem::path(out_dir);
  return swapreg::cli::run_experiment(cfg, seeds, out, jobs, std::cerr);
}

int do_validate(const std::string& config_path) {
  swapreg::cli::RunConfig cfg = swapreg::cli::load_config(config_path);
  std::cout << swapreg::cli::canonical_config_text(cfg);
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(swapreg::cli::config_hash(cfg)));
  std::cout << "# config_hash " << hex << '\n';
  return kOk;
}

int do_fig1(std::int32_t d, std::int32_t n, const std::string& emit) {
  swapreg::treeform::TreeFormProblem problem =
      swapreg::treeform::TreeFormProblem::two_level(d, n);
  swapreg::treeform::save_problem(emit, problem);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "swapreg: tree-form decision problems, swap-regret accounting, and "
      "randomized lower-bound experiments"};
  app.require_subcommand(1);

  std::string run_config, run_seeds, run_out;
  std::int32_t jobs = 1;
  CLI::App* run = app.add_subcommand(
      "run", "Run every seed of a config and write its CSV artifacts");
  run->add_option("config", run_config, "Config file")->required();
  run->add_option("--seeds", run_seeds,
                  "Override the config's seeds (\"0..99\" or \"1,5,9\")");
  run->add_option("--out", run_out, "Override the config's output directory");
  run->add_option("--jobs", jobs, "Worker threads; output is identical")
      ->check(CLI::PositiveNumber);

  std::string validate_config;
  CLI::App* validate = app.add_subcommand(
      "validate", "Check a config and print its canonical form and hash");
  validate->add_option("config", validate_config, "Config file")->required();

  std::int32_t fig_d = 0;
  std::int32_t fig_n = 0;
  std::string fig_emit;
  CLI::App* fig1 = app.add_subcommand(
      "fig1", "Emit the built-in two-level (d, n) problem as a problem file");
  fig1->add_option("--d", fig_d, "Top-level actions")->required();
  fig1->add_option("--n", fig_n, "Signals per action")->required();
  fig1->add_option("--emit", fig_emit, "Output problem file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (*run) return do_run(run_config, run_seeds, run_out, jobs);
    if (*validate) return do_validate(validate_config);
    if (*fig1) return do_fig1(fig_d, fig_n, fig_emit);
  } catch (const swapreg::ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kInvalid;
}

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "swapreg/config.hpp"
#include "swapreg/treeform.hpp"

namespace swapreg::cli {

/// Builds the decision problem a dynamics config names: simplex:<m>,
/// fig1:<d>x<n>, or file:<path> parsed through problem_io.
treeform::TreeFormProblem resolve_problem(const RunConfig& config);

/// Group sizes for a lowerbound/lemmas config. Explicit group_sizes win;
/// otherwise the M-1 non-reserved actions are split near-equally across the
/// d groups, earlier groups taking the remainder.
std::vector<std::int32_t> resolve_group_sizes(const RunConfig& config);

struct EffectiveParameters {
  std::int64_t n = 0;
  double eps = 0.0;
  double delta = 0.0;
};

/// Signal length, correlation tolerance and pair-failure budget actually used
/// by a lowerbound/lemmas run: the closed-form selection when auto_n is set,
/// otherwise the explicit n/eps with delta recomputed from them.
EffectiveParameters resolve_parameters(const RunConfig& config);

/// Runs one seed sweep of the config and writes its CSV artifacts under
/// out_dir. Per-run progress (including wall time) goes to `log`, never into
/// the CSVs, so reruns are byte-identical. `jobs` > 1 runs seeds on a thread
/// pool; rows are still emitted in seed order.
///
/// Returns 0 when every configured check passes and 3 when any fails
/// (epsilon-bound violations or broken chains for lowerbound, rate or mass
/// bounds for lemmas, an equilibrium gap above the largest swap regret for
/// nfce). Dynamics runs have no checks and always return 0. Hard errors
/// throw instead.
int run_experiment(const RunConfig& config,
                   const std::vector<std::uint64_t>& seeds,
                   const std::filesystem::path& out_dir, std::int32_t jobs,
                   std::ostream& log);

}  // namespace swapreg::cli

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "swapreg/lowerbound.hpp"
#include "swapreg/regret.hpp"
#include "swapreg/treeform.hpp"

namespace swapreg::reduction {

using lowerbound::EmbeddingInstance;
using regret::DeviationFunction;
using regret::Transcript;
using treeform::PureStrategy;

/// Where a tree strategy lands when pushed through the embedding: either no
/// codeword on its row correlates with it beyond eps (all its mass goes to
/// the reserved action), or it follows the highest-rank correlated codeword
/// with mass beta = <x, codeword> and sends the rest to the reserved
/// action. beta is the integer-exact sign dot, so beta <= 1 always and
/// beta > eps by the case condition; no clamping is applied anywhere.
struct Projection {
  bool matched;
  std::int32_t action;  // matched action id; -1 when !matched
  std::int32_t group;   // of the matched action; -1 when !matched
  std::int32_t rank;    // 0-based within group; -1 when !matched
  double beta;          // 0 when !matched

  /// Mass this projection puts on `action_id` (reserved gets 1 - beta).
  double mass_on(std::int32_t action_id, std::int32_t reserved) const;
};

/// Projects one strategy: scans its row's codewords from highest rank down
/// and matches the first (i.e. largest-rank) one with dot > eps.
Projection project_strategy(const EmbeddingInstance& emb,
                            const PureStrategy& x, double eps);

/// Projections for every interned strategy of the transcript, in id order.
std::vector<Projection> project_all(const EmbeddingInstance& emb,
                                    const Transcript& tr, double eps);

struct RevealTimes {
  /// Per action id: first 1-based round the adversary played it, T if never.
  std::vector<std::int64_t> action_first_play;
  /// Per interned strategy id: 0 if unmatched, else the matched action's
  /// first-play round. Rounds up to and including this one are the
  /// strategy's "before reveal" window.
  std::vector<std::int64_t> strategy_reveal;
};

RevealTimes reveal_times(const EmbeddingInstance& emb,
                         std::span<const std::int32_t> seq,
                         const Transcript& tr,
                         std::span<const Projection> projections);

/// (1/T) sum over strategies x of the probability mass the learner put on x
/// during x's before-reveal window. Small W is what makes the transfer
/// between tree values and simulated normal-form values tight.
double mass_before_reveal(const Transcript& tr, const RevealTimes& reveal);

/// Per-round distributions over the M normal-form actions obtained by
/// pushing the learner's mixed strategy through the projections:
/// pibar^t(a) = sum_x pi^t(x) * p_x(a). Each row sums to 1 within 1e-9
/// (validated).
std::vector<std::vector<double>> simulate_normalform_learner(
    const Transcript& tr, const EmbeddingInstance& emb,
    std::span<const Projection> projections);

struct EpsilonBoundViolation {
  std::int32_t strategy;  // interned id
  std::int64_t t;         // 1-based round
  double lhs;             // <x, utility^t> in scaled form
  double rhs;             // p_x(action^t) + eps
};

/// Checks the utility-transfer inequality <x, u^t> <= p_x(a^t) + eps for
/// every supported strategy and every round after that strategy's reveal
/// time, at zero tolerance. Both sides reuse the projection's own dots, so
/// a correct adversary (nondecreasing ranks, no reserved plays) yields
/// exactly zero violations; any violation indicts the adversary or the
/// projection, not float noise.
std::vector<EpsilonBoundViolation> check_epsilon_bound(
    const Transcript& tr, const EmbeddingInstance& emb,
    std::span<const std::int32_t> seq, std::span<const Projection> projections,
    const RevealTimes& reveal, double eps);

struct NormalFormDeviation {
  std::vector<std::int32_t> map;  // phibar: action -> action, all M entries
  double value_identity;          // Vbar(Id)
  double value_deviation;         // Vbar(phibar)
};

/// Empirical best swap deviation of the simulated normal-form play:
/// phibar(a) = argmax_b sum_t pibar^t(a) * [seq^t == b], ties to the lowest
/// action id. Vbar(phi) = (1/T) sum_t sum_a pibar^t(a) * [phi(a) == seq^t].
/// The reserved action's column is identically zero, so phibar never maps
/// to it.
NormalFormDeviation best_normalform_deviation(
    std::span<const std::vector<double>> pibar,
    std::span<const std::int32_t> seq);

/// Vbar for an arbitrary action map (used by tests and the report).
double normalform_value(std::span<const std::vector<double>> pibar,
                        std::span<const std::int32_t> seq,
                        std::span<const std::int32_t> map);

/// Pulls a normal-form deviation back to tree strategies:
/// phi(x) = sum_a p_x(a) * psi-image(map[a]), a convex combination with at
/// most two components per strategy. Defined for every interned strategy.
DeviationFunction lift_deviation(const EmbeddingInstance& emb,
                                 const Transcript& tr,
                                 std::span<const Projection> projections,
                                 std::span<const std::int32_t> map);

/// Everything the lower-bound campaigns record per run. The three chains
/// are per-run inequalities with a 1e-9 float guard:
///   (i)   V(Id) <= Vbar(Id) + eps + 2W                      (always)
///   (ii)  V(phi_lift) >= Vbar(phibar) - eps - 2W            (needs F)
///   (iii) swap_regret >= [Vbar(phibar) - Vbar(Id)] - 2eps - 4W  (needs F)
/// where F is the codeword concentration event. When F fails, (ii)/(iii)
/// are reported as vacuously true and F_holds records the failure.
struct TransferReport {
  std::int32_t d;
  std::int32_t M;
  std::int64_t n;
  std::int64_t T;
  double eps;
  double delta;
  double W;
  bool F_holds;
  double V_id;
  double Vbar_id;
  double V_phi;
  double Vbar_phibar;
  double swap_regret;
  bool chain_i_ok;
  bool chain_ii_ok;
  bool chain_iii_ok;
  // Diagnostics beyond the CSV columns.
  double chain_i_slack;    // rhs - lhs, >= -1e-9 when ok
  double chain_ii_slack;
  double chain_iii_slack;
  std::int64_t epsilon_violations;
  std::vector<std::int32_t> phibar;
};

/// Runs the whole per-run pipeline on a finished transcript. Validates
/// that the value-like outputs (V, Vbar, W) are finite and in range before
/// returning.
TransferReport transfer_report(const Transcript& tr,
                               const EmbeddingInstance& emb,
                               std::span<const std::int32_t> seq, double eps,
                               double delta);

}  // namespace swapreg::reduction

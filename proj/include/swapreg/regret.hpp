#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "swapreg/rng.hpp"
#include "swapreg/treeform.hpp"

namespace swapreg::regret {

using treeform::MixedStrategy;
using treeform::PureStrategy;
using treeform::PureStrategyHash;
using treeform::TreeFormProblem;
using treeform::UtilityVector;

/// Interning table for pure strategies: each distinct realization vector
/// gets a small dense id, stable in first-seen order. Strategies are
/// validated against the problem once, when first interned.
class StrategyTable {
 public:
  explicit StrategyTable(TreeFormProblem problem);

  std::int32_t intern(const PureStrategy& x);
  /// -1 if the strategy was never interned.
  std::int32_t find(const PureStrategy& x) const;
  const PureStrategy& strategy(std::int32_t id) const;
  std::int32_t size() const {
    return static_cast<std::int32_t>(strategies_.size());
  }
  const TreeFormProblem& problem() const { return problem_; }

 private:
  TreeFormProblem problem_;
  std::vector<PureStrategy> strategies_;
  std::unordered_map<PureStrategy, std::int32_t, PureStrategyHash> index_;
};

/// A full play history: per round the learner's mixed strategy (stored
/// sparsely over interned ids) and the utility vector the environment
/// revealed. Rounds are indexed 0-based in the API; every external artifact
/// (CSV) is 1-based.
class Transcript {
 public:
  explicit Transcript(TreeFormProblem problem);

  void add_round(const MixedStrategy& pi, UtilityVector u);

  std::int64_t rounds() const {
    return static_cast<std::int64_t>(utilities_.size());
  }
  std::span<const std::pair<std::int32_t, double>> probabilities(
      std::int64_t t) const;
  const UtilityVector& utility(std::int64_t t) const;
  const StrategyTable& strategies() const { return table_; }
  const TreeFormProblem& problem() const { return table_.problem(); }

 private:
  StrategyTable table_;
  std::vector<std::vector<std::pair<std::int32_t, double>>> probs_;
  std::vector<UtilityVector> utilities_;
};

/// A strategy modification rule phi: for each pure strategy it may be asked
/// about, a convex combination of pure strategies (point images are the
/// common case; the lifted deviations of the embedding reduction genuinely
/// mix, and the combination entries double as the certificate of how the
/// image was formed). The identity is a distinguished object so callers can
/// evaluate it without enumerating anything.
class DeviationFunction {
 public:
  struct Image {
    std::vector<std::pair<PureStrategy, double>> combination;
  };

  DeviationFunction() = default;
  static DeviationFunction identity();

  bool is_identity() const { return identity_; }

  /// Point image. Throws on the identity object or a duplicate `from`.
  void set(const PureStrategy& from, PureStrategy to);
  /// Mixed image; weights must be nonnegative and sum to 1 within 1e-9.
  void set(const PureStrategy& from, Image to);

  /// nullptr if `from` has no image (callers turn that into DomainError
  /// with context).
  const Image* find(const PureStrategy& from) const;

  const std::vector<std::pair<PureStrategy, Image>>& entries() const {
    return entries_;
  }

 private:
  bool identity_ = false;
  std::vector<std::pair<PureStrategy, Image>> entries_;
  std::unordered_map<PureStrategy, std::size_t, PureStrategyHash> index_;
};

/// Per-strategy aggregated gain vectors g_x = sum_t pi^t(x) * u^t, one per
/// interned strategy, in table order. This is the shared aggregation step
/// behind every regret quantity; keeping it in one place is what lets the
/// equilibrium-gap check claim exact (not approximate) agreement with the
/// per-transcript swap regret.
std::vector<std::vector<double>> aggregate_gains(const Transcript& tr);

/// (1/T) sum_t sum_x pi^t(x) * <u^t, phi(x)>. Throws DomainError if phi
/// lacks an image for a strategy the transcript supports.
double value_of_deviation(const Transcript& tr, const DeviationFunction& phi);

struct SwapRegretResult {
  double regret;
  DeviationFunction deviation;  // the maximizing modification rule
};

/// max over all strategy modification rules of the value gain, attained by
/// best-responding to each g_x independently. Nonnegative by construction
/// (each input's contribution is floored at its identity value).
SwapRegretResult swap_regret(const Transcript& tr);

/// Best fixed strategy in hindsight minus realized value. May be negative;
/// never exceeds swap regret.
double external_regret(const Transcript& tr);

/// An n-player game: one tree-form problem per player plus a payoff tensor
/// over pure-strategy profiles. Payoffs are required to be in [-1, 1].
///
/// Restriction: every player's problem must give each pure strategy exactly
/// one terminal (true for simplex problems and any all-decision tree).
/// That is what makes "utility vector over terminals" and "payoff as a
/// function of the chosen strategy" the same object, so transcripts of
/// self-play carry exact per-round payoffs.
class NPlayerGame {
 public:
  using PayoffFn =
      std::function<double(std::int32_t player,
                           std::span<const std::int32_t> profile)>;

  NPlayerGame(std::vector<TreeFormProblem> problems, const PayoffFn& payoff);

  static NPlayerGame matching_pennies();
  /// Two players, two actions, payoff 1 to both on agreement, 0 otherwise.
  static NPlayerGame coordination();
  /// Independent uniform payoffs in [-1, 1] for every (player, profile).
  static NPlayerGame random_game(std::span<const std::int32_t> actions,
                                 Rng& rng);

  std::int32_t players() const {
    return static_cast<std::int32_t>(problems_.size());
  }
  const TreeFormProblem& problem(std::int32_t i) const { return problems_[i]; }
  std::span<const PureStrategy> strategies(std::int32_t i) const {
    return strategies_[i];
  }
  std::int32_t strategy_index(std::int32_t player, const PureStrategy& x) const;
  double payoff(std::int32_t player,
                std::span<const std::int32_t> profile) const;

  /// Expected utility vector for `player`'s terminals when every other
  /// player draws independently from their entry in `profile` (the player's
  /// own entry is ignored). Opponent supports are iterated in player order,
  /// support order; same inputs give bitwise-same output.
  UtilityVector induced_utilities(
      std::int32_t player, std::span<const MixedStrategy> profile) const;

 private:
  std::vector<TreeFormProblem> problems_;
  std::vector<std::vector<PureStrategy>> strategies_;
  std::vector<std::unordered_map<PureStrategy, std::int32_t, PureStrategyHash>>
      strategy_index_;
  std::vector<std::int32_t> terminal_of_;  // flattened strategy -> terminal
  std::vector<std::size_t> terminal_of_base_;
  std::vector<std::vector<double>> payoffs_;  // per player, row-major profile
  std::vector<std::size_t> strides_;
};

/// A correlated profile represented as a mixture of product distributions:
/// weighted terms, each one independent mixed strategy per player. This is
/// exactly the shape uniform averaging of self-play produces.
class JointDistribution {
 public:
  struct Term {
    double weight;
    std::vector<MixedStrategy> marginals;
  };

  explicit JointDistribution(std::vector<Term> terms);

  const std::vector<Term>& terms() const { return terms_; }
  /// True when every term carries the bitwise-identical weight (the
  /// self-play average). The gap computation then reuses the transcript
  /// aggregation path verbatim.
  bool uniform_weights() const { return uniform_weights_; }

 private:
  std::vector<Term> terms_;
  bool uniform_weights_ = false;
};

struct EquilibriumGapReport {
  std::vector<double> gap;                      // per player
  std::vector<DeviationFunction> deviation;     // per player witness
  double worst_gap;
};

/// For each player, the most profitable strategy modification against the
/// joint distribution, holding everyone else fixed; worst_gap is the max.
/// A joint distribution is an equilibrium up to eps iff worst_gap <= eps.
EquilibriumGapReport equilibrium_gap(const NPlayerGame& game,
                                     const JointDistribution& joint);

/// Writes <stem>.probs.csv (t, strategy, probability), <stem>.utils.csv
/// (t, terminal, utility), <stem>.strategies.csv (strategy, realization
/// bitstring). t and terminal are 1-based; strategy ids are the interned
/// 0-based ids. Exporting the same transcript twice is byte-identical.
void export_transcript(const Transcript& tr,
                       const std::filesystem::path& directory,
                       const std::string& stem);

/// Inverse of export_transcript; validates shapes and distributions and
/// re-interns strategies in id order, so a round trip preserves ids.
Transcript import_transcript(const TreeFormProblem& problem,
                             const std::filesystem::path& directory,
                             const std::string& stem);

}  // namespace swapreg::regret

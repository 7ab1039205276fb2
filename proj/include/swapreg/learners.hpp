#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "swapreg/regret.hpp"
#include "swapreg/rng.hpp"
#include "swapreg/treeform.hpp"

namespace swapreg::learners {

using regret::JointDistribution;
using regret::NPlayerGame;
using regret::Transcript;
using treeform::MixedStrategy;
using treeform::PureStrategy;
using treeform::TreeFormProblem;
using treeform::UtilityVector;

/// Full-information online learner over a fixed finite set of pure
/// strategies. Protocol per round: next_distribution(), play it, then
/// observe() the revealed utility vector. step() bundles the two for
/// callers that drive one learner against one utility stream.
class Learner {
 public:
  virtual ~Learner() = default;
  virtual MixedStrategy next_distribution() = 0;
  virtual void observe(const UtilityVector& u) = 0;
  virtual std::string_view name() const = 0;

  MixedStrategy step(const UtilityVector& u) {
    observe(u);
    return next_distribution();
  }
};

struct HedgeConfig {
  /// Fixed learning rate; 0 selects it automatically: sqrt(8 ln K / horizon)
  /// when the horizon is known, otherwise a doubling schedule that restarts
  /// with sqrt(8 ln K / 2^r) at the start of each length-2^r epoch.
  double eta = 0.0;
  std::int64_t horizon = 0;  // 0 = unknown
};

/// Multiplicative weights over an explicit strategy list: weights
/// proportional to exp(eta * cumulative utility), computed stably by
/// subtracting the running max before exponentiating.
class Hedge : public Learner {
 public:
  Hedge(std::vector<PureStrategy> strategies, HedgeConfig config);

  MixedStrategy next_distribution() override;
  void observe(const UtilityVector& u) override;
  std::string_view name() const override { return "hedge"; }

  /// Current weights over the strategy list, for tests and for composing
  /// into larger constructions.
  std::vector<double> weights() const;

 private:
  std::vector<PureStrategy> strategies_;
  HedgeConfig config_;
  std::vector<double> cumulative_;
  double eta_;
  std::int64_t epoch_len_ = 1;
  std::int64_t in_epoch_ = 0;
};

struct StationaryConfig {
  /// Weight of the uniform matrix mixed into Q so the chain is strictly
  /// positive (unique stationary distribution).
  double damping = 1e-12;
  /// Stop when the L1 residual ||pi Q - pi||_1 against the *undamped* Q
  /// drops to this.
  double target_residual = 1e-10;
  /// If the iteration cap is hit, a residual up to this is still accepted.
  double accept_residual = 1e-8;
  std::int64_t max_iterations = 100000;
};

struct StationaryResult {
  std::vector<double> pi;
  double residual;
  std::int64_t iterations;
};

/// Stationary distribution of a row-stochastic K x K matrix (row-major) by
/// damped lazy power iteration: p <- 0.5 p + 0.5 p Q', with Q' the damped
/// matrix. The lazy step kills period-2 oscillation (e.g. a pure swap
/// matrix), the damping disconnectedness. Starts from `warm` (uniform if
/// empty). Throws NumericError if the accept threshold is missed.
StationaryResult stationary_distribution(std::span<const double> q,
                                         std::int32_t k,
                                         std::span<const double> warm,
                                         const StationaryConfig& config = {});

/// The classical external-to-swap-regret reduction: one Hedge sub-learner
/// per strategy, each fed the played distribution's share of the utility;
/// the played distribution is the stationary distribution of the matrix
/// whose rows are the sub-learners' weights. First round is uniform.
class BlumMansour : public Learner {
 public:
  struct Config {
    HedgeConfig hedge;
    StationaryConfig stationary;
  };

  BlumMansour(std::vector<PureStrategy> strategies, Config config);

  MixedStrategy next_distribution() override;
  void observe(const UtilityVector& u) override;
  std::string_view name() const override { return "blum_mansour"; }

  std::span<const double> stationary() const { return pi_; }
  double last_residual() const { return last_residual_; }
  std::int64_t last_iterations() const { return last_iterations_; }

 private:
  std::vector<PureStrategy> strategies_;
  Config config_;
  std::vector<std::vector<double>> cumulative_;  // per sub-learner, over K
  std::vector<double> pi_;
  double eta_;
  double last_residual_ = 0.0;
  std::int64_t last_iterations_ = 0;
  std::int64_t epoch_len_ = 1;
  std::int64_t in_epoch_ = 0;
};

/// Plays the uniform distribution forever; the do-nothing baseline.
class UniformLearner : public Learner {
 public:
  explicit UniformLearner(std::vector<PureStrategy> strategies);
  MixedStrategy next_distribution() override;
  void observe(const UtilityVector&) override {}
  std::string_view name() const override { return "uniform"; }

 private:
  std::vector<PureStrategy> strategies_;
};

/// The strategy set a learner runs over. Trees with at most
/// kFullUniverseCap strategies get the full enumeration; larger trees get
/// `pool_size` strategies sampled uniformly (deduplicated, first-draw
/// order), since materializing e.g. 3 * 2^64 strategies is not an option.
/// Callers that need the pool independent of other randomness (the
/// embedding campaigns do) pass an Rng derived with its own purpose tag.
inline constexpr std::uint64_t kFullUniverseCap = 1024;
std::vector<PureStrategy> strategy_universe(const TreeFormProblem& problem,
                                            std::int32_t pool_size, Rng& rng);

/// Supported learner names for make_learner / config files.
bool is_learner_name(std::string_view name);
std::unique_ptr<Learner> make_learner(std::string_view name,
                                      std::vector<PureStrategy> strategies,
                                      HedgeConfig hedge_config);

struct SelfPlayResult {
  std::vector<Transcript> transcripts;     // one per player
  JointDistribution average_profile;       // (1/T) sum of product rounds
};

/// Runs every player's learner against the others for T rounds with
/// full-information payoff feedback and returns both the per-player
/// transcripts and the uniform average of the per-round product profiles.
SelfPlayResult self_play(const NPlayerGame& game,
                         std::span<const std::unique_ptr<Learner>> learners,
                         std::int64_t T);

}  // namespace swapreg::learners

#include "swapreg/learners.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

#include "swapreg/errors.hpp"
#include "swapreg/kernels.hpp"

namespace swapreg::learners {

namespace {

double auto_eta(std::size_t k, std::int64_t horizon) {
  if (k <= 1) return 0.0;
  return std::sqrt(8.0 * std::log(static_cast<double>(k)) /
                   static_cast<double>(horizon));
}

/// softmax(eta * c) into out, stable under large |eta * c|.
void softmax_into(double eta, std::span<const double> c,
                  std::span<double> out) {
  double mx = c[0];
  for (double v : c) mx = std::max(mx, v);
  for (std::size_t j = 0; j < c.size(); ++j)
    out[j] = std::exp(eta * (c[j] - mx));
  const double total = kernels::sum(out);
  for (double& v : out) v /= total;
}

MixedStrategy weights_to_mixed(std::span<const PureStrategy> strategies,
                               std::span<const double> w) {
  std::vector<std::pair<PureStrategy, double>> support;
  support.reserve(strategies.size());
  for (std::size_t k = 0; k < strategies.size(); ++k) {
    if (w[k] > 0.0) support.emplace_back(strategies[k], w[k]);
  }
  return MixedStrategy(std::move(support));
}

double dot_at_ones(std::span<const double> u, const PureStrategy& x) {
  double v = 0.0;
  for (std::int32_t z : x.ones()) v += u[z];
  return v;
}

void check_strategies(const std::vector<PureStrategy>& strategies) {
  if (strategies.empty())
    throw ValidationError("learner needs at least one strategy");
  for (const PureStrategy& x : strategies) {
    if (x.size() != strategies[0].size())
      throw DimensionError("learner strategies have mixed lengths");
  }
}

}  // namespace

Hedge::Hedge(std::vector<PureStrategy> strategies, HedgeConfig config)
    : strategies_(std::move(strategies)),
      config_(config),
      cumulative_(strategies_.size(), 0.0) {
  check_strategies(strategies_);
  if (config_.eta < 0.0) throw ValidationError("eta must be >= 0");
  if (config_.horizon < 0) throw ValidationError("horizon must be >= 0");
  if (config_.eta > 0.0)
    eta_ = config_.eta;
  else if (config_.horizon > 0)
    eta_ = auto_eta(strategies_.size(), config_.horizon);
  else
    eta_ = auto_eta(strategies_.size(), epoch_len_);
}

std::vector<double> Hedge::weights() const {
  std::vector<double> w(cumulative_.size());
  softmax_into(eta_, cumulative_, w);
  return w;
}

MixedStrategy Hedge::next_distribution() {
  std::vector<double> w(cumulative_.size());
  softmax_into(eta_, cumulative_, w);
  return weights_to_mixed(strategies_, w);
}

void Hedge::observe(const UtilityVector& u) {
  if (u.size() != strategies_[0].size())
    throw DimensionError("utility length " + std::to_string(u.size()) +
                         " != strategy length " +
                         std::to_string(strategies_[0].size()));
  for (std::size_t k = 0; k < strategies_.size(); ++k)
    cumulative_[k] += dot_at_ones(u.values(), strategies_[k]);
  if (config_.eta == 0.0 && config_.horizon == 0) {
    // Anytime mode: at each epoch boundary double the epoch, retune eta,
    // and restart the weights.
    if (++in_epoch_ == epoch_len_) {
      epoch_len_ *= 2;
      in_epoch_ = 0;
      std::fill(cumulative_.begin(), cumulative_.end(), 0.0);
      eta_ = auto_eta(strategies_.size(), epoch_len_);
    }
  }
}

StationaryResult stationary_distribution(std::span<const double> q,
                                         std::int32_t k,
                                         std::span<const double> warm,
                                         const StationaryConfig& config) {
  if (k < 1) throw ValidationError("stationary_distribution: k < 1");
  if (q.size() != static_cast<std::size_t>(k) * static_cast<std::size_t>(k))
    throw DimensionError("stationary_distribution: matrix size mismatch");
  if (!warm.empty() && warm.size() != static_cast<std::size_t>(k))
    throw DimensionError("stationary_distribution: warm start size mismatch");

  std::vector<double> p(k);
  if (warm.empty()) {
    std::fill(p.begin(), p.end(), 1.0 / k);
  } else {
    std::copy(warm.begin(), warm.end(), p.begin());
    const double total = kernels::sum(p);
    if (!(total > 0.0))
      throw ValidationError("stationary_distribution: warm start sums to 0");
    for (double& v : p) v /= total;
  }

  const double alpha = config.damping;
  std::vector<double> pq(k);
  double residual = 0.0;
  for (std::int64_t iter = 0; iter <= config.max_iterations; ++iter) {
    // pq = p Q against the undamped matrix; it feeds both the residual
    // check and (damped, averaged) the next iterate.
    std::fill(pq.begin(), pq.end(), 0.0);
    for (std::int32_t row = 0; row < k; ++row)
      kernels::axpy(p[row], q.subspan(static_cast<std::size_t>(row) * k, k),
                    pq);
    residual = 0.0;
    for (std::int32_t j = 0; j < k; ++j) residual += std::abs(pq[j] - p[j]);
    if (residual <= config.target_residual)
      return {std::move(p), residual, iter};
    if (iter == config.max_iterations) break;

    for (std::int32_t j = 0; j < k; ++j)
      p[j] = 0.5 * p[j] + 0.5 * ((1.0 - alpha) * pq[j] + alpha / k);
    const double total = kernels::sum(p);
    for (double& v : p) v /= total;
  }
  if (residual <= config.accept_residual)
    return {std::move(p), residual, config.max_iterations};
  throw NumericError("stationary distribution residual " +
                     std::to_string(residual) + " after " +
                     std::to_string(config.max_iterations) + " iterations");
}

BlumMansour::BlumMansour(std::vector<PureStrategy> strategies, Config config)
    : strategies_(std::move(strategies)), config_(config) {
  check_strategies(strategies_);
  const std::size_t k = strategies_.size();
  cumulative_.assign(k, std::vector<double>(k, 0.0));
  pi_.assign(k, 1.0 / static_cast<double>(k));
  if (config_.hedge.eta < 0.0) throw ValidationError("eta must be >= 0");
  if (config_.hedge.eta > 0.0)
    eta_ = config_.hedge.eta;
  else if (config_.hedge.horizon > 0)
    eta_ = auto_eta(k, config_.hedge.horizon);
  else
    eta_ = auto_eta(k, epoch_len_);
}

MixedStrategy BlumMansour::next_distribution() {
  return weights_to_mixed(strategies_, pi_);
}

void BlumMansour::observe(const UtilityVector& u) {
  if (u.size() != strategies_[0].size())
    throw DimensionError("utility length " + std::to_string(u.size()) +
                         " != strategy length " +
                         std::to_string(strategies_[0].size()));
  const std::size_t k = strategies_.size();

  // Sub-learner x_k sees pi(x_k) * u; its per-strategy utilities are
  // pi(x_k) * <u, x_j>, so compute the K inner products once and scale.
  std::vector<double> s(k);
  for (std::size_t j = 0; j < k; ++j)
    s[j] = dot_at_ones(u.values(), strategies_[j]);
  for (std::size_t row = 0; row < k; ++row)
    kernels::axpy(pi_[row], s, cumulative_[row]);

  if (config_.hedge.eta == 0.0 && config_.hedge.horizon == 0) {
    if (++in_epoch_ == epoch_len_) {
      epoch_len_ *= 2;
      in_epoch_ = 0;
      for (auto& row : cumulative_) std::fill(row.begin(), row.end(), 0.0);
      eta_ = auto_eta(k, epoch_len_);
    }
  }

  std::vector<double> q(k * k);
  for (std::size_t row = 0; row < k; ++row)
    softmax_into(eta_, cumulative_[row],
                 std::span<double>(q).subspan(row * k, k));
  StationaryResult res = stationary_distribution(
      q, static_cast<std::int32_t>(k), pi_, config_.stationary);
  pi_ = std::move(res.pi);
  last_residual_ = res.residual;
  last_iterations_ = res.iterations;
}

UniformLearner::UniformLearner(std::vector<PureStrategy> strategies)
    : strategies_(std::move(strategies)) {
  check_strategies(strategies_);
}

MixedStrategy UniformLearner::next_distribution() {
  return MixedStrategy::uniform(strategies_);
}

std::vector<PureStrategy> strategy_universe(const TreeFormProblem& problem,
                                            std::int32_t pool_size, Rng& rng) {
  if (pool_size < 1) throw ValidationError("pool size must be >= 1");
  if (problem.strategy_count(kFullUniverseCap + 1) <= kFullUniverseCap)
    return enumerate_pure_strategies(problem);

  std::vector<PureStrategy> pool;
  std::unordered_set<PureStrategy, treeform::PureStrategyHash> seen;
  pool.reserve(pool_size);
  for (std::int32_t i = 0; i < pool_size; ++i) {
    PureStrategy x = sample_uniform_strategy(problem, rng);
    if (seen.insert(x).second) pool.push_back(std::move(x));
  }
  return pool;
}

bool is_learner_name(std::string_view name) {
  return name == "hedge" || name == "blum_mansour" || name == "uniform";
}

std::unique_ptr<Learner> make_learner(std::string_view name,
                                      std::vector<PureStrategy> strategies,
                                      HedgeConfig hedge_config) {
  if (name == "hedge")
    return std::make_unique<Hedge>(std::move(strategies), hedge_config);
  if (name == "blum_mansour")
    return std::make_unique<BlumMansour>(
        std::move(strategies), BlumMansour::Config{hedge_config, {}});
  if (name == "uniform")
    return std::make_unique<UniformLearner>(std::move(strategies));
  throw ValidationError("unknown learner '" + std::string(name) + "'");
}

SelfPlayResult self_play(const NPlayerGame& game,
                         std::span<const std::unique_ptr<Learner>> learners,
                         std::int64_t T) {
  if (static_cast<std::int32_t>(learners.size()) != game.players())
    throw DimensionError("need one learner per player");
  if (T < 1) throw ValidationError("self_play needs T >= 1");

  std::vector<Transcript> transcripts;
  transcripts.reserve(game.players());
  for (std::int32_t i = 0; i < game.players(); ++i)
    transcripts.emplace_back(game.problem(i));

  std::vector<JointDistribution::Term> terms;
  terms.reserve(T);
  const double w = 1.0 / static_cast<double>(T);
  for (std::int64_t t = 0; t < T; ++t) {
    std::vector<MixedStrategy> profile;
    profile.reserve(game.players());
    for (std::int32_t i = 0; i < game.players(); ++i)
      profile.push_back(learners[i]->next_distribution());
    for (std::int32_t i = 0; i < game.players(); ++i) {
      UtilityVector u = game.induced_utilities(i, profile);
      transcripts[i].add_round(profile[i], u);
      learners[i]->observe(u);
    }
    terms.push_back({w, std::move(profile)});
  }
  return {std::move(transcripts), JointDistribution(std::move(terms))};
}

}  // namespace swapreg::learners

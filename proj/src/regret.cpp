#include "swapreg/regret.hpp"

#include <algorithm>
#include <cmath>

#include "swapreg/csv.hpp"
#include "swapreg/errors.hpp"
#include "swapreg/kernels.hpp"

namespace swapreg::regret {

namespace {

/// <gain, x> iterating x's terminals in ascending index order. Every regret
/// quantity and every best_response value goes through this exact loop; two
/// quantities that are equal mathematically stay equal in floating point.
double dot_at_ones(std::span<const double> gain, const PureStrategy& x) {
  double v = 0.0;
  for (std::int32_t z : x.ones()) v += gain[z];
  return v;
}

}  // namespace

StrategyTable::StrategyTable(TreeFormProblem problem)
    : problem_(std::move(problem)) {}

std::int32_t StrategyTable::intern(const PureStrategy& x) {
  auto it = index_.find(x);
  if (it != index_.end()) return it->second;
  if (x.size() != problem_.terminal_count())
    throw DimensionError("strategy length " + std::to_string(x.size()) +
                         " != terminal count " +
                         std::to_string(problem_.terminal_count()));
  if (!validate_realization(problem_, x))
    throw ValidationError("strategy is not a valid realization for the problem");
  const auto id = static_cast<std::int32_t>(strategies_.size());
  strategies_.push_back(x);
  index_.emplace(x, id);
  return id;
}

std::int32_t StrategyTable::find(const PureStrategy& x) const {
  auto it = index_.find(x);
  return it == index_.end() ? -1 : it->second;
}

const PureStrategy& StrategyTable::strategy(std::int32_t id) const {
  if (id < 0 || id >= size())
    throw DomainError("strategy id " + std::to_string(id) + " out of range");
  return strategies_[id];
}

Transcript::Transcript(TreeFormProblem problem)
    : table_(std::move(problem)) {}

void Transcript::add_round(const MixedStrategy& pi, UtilityVector u) {
  if (u.size() != problem().terminal_count())
    throw DimensionError("utility length " + std::to_string(u.size()) +
                         " != terminal count " +
                         std::to_string(problem().terminal_count()));
  std::vector<std::pair<std::int32_t, double>> round;
  round.reserve(pi.support().size());
  for (const auto& [x, p] : pi.support()) round.emplace_back(table_.intern(x), p);
  probs_.push_back(std::move(round));
  utilities_.push_back(std::move(u));
}

std::span<const std::pair<std::int32_t, double>> Transcript::probabilities(
    std::int64_t t) const {
  if (t < 0 || t >= rounds())
    throw DomainError("round " + std::to_string(t) + " out of range");
  return probs_[t];
}

const UtilityVector& Transcript::utility(std::int64_t t) const {
  if (t < 0 || t >= rounds())
    throw DomainError("round " + std::to_string(t) + " out of range");
  return utilities_[t];
}

DeviationFunction DeviationFunction::identity() {
  DeviationFunction d;
  d.identity_ = true;
  return d;
}

void DeviationFunction::set(const PureStrategy& from, PureStrategy to) {
  Image img;
  img.combination.emplace_back(std::move(to), 1.0);
  set(from, std::move(img));
}

void DeviationFunction::set(const PureStrategy& from, Image to) {
  if (identity_)
    throw ValidationError("cannot add entries to the identity deviation");
  if (index_.count(from))
    throw ValidationError("deviation already has an image for this strategy");
  double total = 0.0;
  for (const auto& [y, w] : to.combination) {
    (void)y;
    if (!(w >= -1e-12))
      throw ValidationError("negative weight in deviation image");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw ValidationError("deviation image weights sum to " +
                          std::to_string(total) + ", not 1");
  index_.emplace(from, entries_.size());
  entries_.emplace_back(from, std::move(to));
}

const DeviationFunction::Image* DeviationFunction::find(
    const PureStrategy& from) const {
  auto it = index_.find(from);
  return it == index_.end() ? nullptr : &entries_[it->second].second;
}

std::vector<std::vector<double>> aggregate_gains(const Transcript& tr) {
  const auto m = static_cast<std::size_t>(tr.problem().terminal_count());
  std::vector<std::vector<double>> gains(tr.strategies().size(),
                                         std::vector<double>(m, 0.0));
  for (std::int64_t t = 0; t < tr.rounds(); ++t) {
    std::span<const double> u = tr.utility(t).values();
    for (const auto& [id, p] : tr.probabilities(t)) {
      kernels::axpy(p, u, gains[id]);
    }
  }
  return gains;
}

double value_of_deviation(const Transcript& tr, const DeviationFunction& phi) {
  if (tr.rounds() == 0) throw ValidationError("empty transcript");
  const std::vector<std::vector<double>> gains = aggregate_gains(tr);
  const StrategyTable& table = tr.strategies();
  double total = 0.0;
  for (std::int32_t id = 0; id < table.size(); ++id) {
    const PureStrategy& x = table.strategy(id);
    if (phi.is_identity()) {
      total += dot_at_ones(gains[id], x);
      continue;
    }
    const DeviationFunction::Image* img = phi.find(x);
    if (!img)
      throw DomainError("deviation has no image for interned strategy " +
                        std::to_string(id));
    for (const auto& [y, w] : img->combination) {
      if (y.size() != x.size())
        throw DimensionError("deviation image has mismatched length");
      total += w * dot_at_ones(gains[id], y);
    }
  }
  return total / static_cast<double>(tr.rounds());
}

SwapRegretResult swap_regret(const Transcript& tr) {
  if (tr.rounds() == 0) throw ValidationError("empty transcript");
  const std::vector<std::vector<double>> gains = aggregate_gains(tr);
  const StrategyTable& table = tr.strategies();
  DeviationFunction best;
  double total = 0.0;
  for (std::int32_t id = 0; id < table.size(); ++id) {
    const PureStrategy& x = table.strategy(id);
    treeform::BestResponse br = treeform::best_response(tr.problem(), gains[id]);
    const double base = dot_at_ones(gains[id], x);
    if (br.value > base) {
      total += br.value - base;
      best.set(x, std::move(br.strategy));
    } else {
      // Identity is always feasible, so this input contributes exactly 0;
      // mapping it to itself keeps value_of_deviation(tr, best) consistent.
      best.set(x, x);
    }
  }
  return {total / static_cast<double>(tr.rounds()), std::move(best)};
}

double external_regret(const Transcript& tr) {
  if (tr.rounds() == 0) throw ValidationError("empty transcript");
  const auto m = static_cast<std::size_t>(tr.problem().terminal_count());
  std::vector<double> summed(m, 0.0);
  for (std::int64_t t = 0; t < tr.rounds(); ++t)
    kernels::axpy(1.0, tr.utility(t).values(), summed);
  treeform::BestResponse br = treeform::best_response(tr.problem(), summed);

  const std::vector<std::vector<double>> gains = aggregate_gains(tr);
  const StrategyTable& table = tr.strategies();
  double realized = 0.0;
  for (std::int32_t id = 0; id < table.size(); ++id)
    realized += dot_at_ones(gains[id], table.strategy(id));

  const double T = static_cast<double>(tr.rounds());
  return br.value / T - realized / T;
}

NPlayerGame::NPlayerGame(std::vector<TreeFormProblem> problems,
                         const PayoffFn& payoff)
    : problems_(std::move(problems)) {
  if (problems_.empty()) throw ValidationError("game needs at least one player");
  const auto n = static_cast<std::int32_t>(problems_.size());
  std::size_t profiles = 1;
  strategies_.resize(n);
  strategy_index_.resize(n);
  terminal_of_base_.resize(n);
  for (std::int32_t i = 0; i < n; ++i) {
    strategies_[i] = enumerate_pure_strategies(problems_[i]);
    terminal_of_base_[i] = terminal_of_.size();
    for (std::size_t k = 0; k < strategies_[i].size(); ++k) {
      const PureStrategy& x = strategies_[i][k];
      if (x.ones().size() != 1)
        throw ValidationError(
            "game payoffs need one terminal per pure strategy; player " +
            std::to_string(i) + " has a strategy reaching " +
            std::to_string(x.ones().size()));
      terminal_of_.push_back(x.ones()[0]);
      strategy_index_[i].emplace(x, static_cast<std::int32_t>(k));
    }
    if (profiles > (1u << 20) / strategies_[i].size())
      throw CapacityError("profile count exceeds 2^20");
    profiles *= strategies_[i].size();
  }
  strides_.assign(n, 1);
  for (std::int32_t i = n - 2; i >= 0; --i)
    strides_[i] = strides_[i + 1] * strategies_[i + 1].size();

  payoffs_.assign(n, std::vector<double>(profiles, 0.0));
  std::vector<std::int32_t> profile(n, 0);
  for (std::size_t flat = 0; flat < profiles; ++flat) {
    std::size_t rem = flat;
    for (std::int32_t i = 0; i < n; ++i) {
      profile[i] = static_cast<std::int32_t>(rem / strides_[i]);
      rem %= strides_[i];
    }
    for (std::int32_t i = 0; i < n; ++i) {
      double v = payoff(i, profile);
      if (!(std::abs(v) <= 1.0 + 1e-9))
        throw ValidationError("payoff " + std::to_string(v) +
                              " outside [-1, 1]");
      payoffs_[i][flat] = v;
    }
  }
}

NPlayerGame NPlayerGame::matching_pennies() {
  std::vector<TreeFormProblem> ps;
  ps.push_back(TreeFormProblem::simplex(2));
  ps.push_back(TreeFormProblem::simplex(2));
  return NPlayerGame(std::move(ps),
                     [](std::int32_t player, std::span<const std::int32_t> a) {
                       double v = (a[0] == a[1]) ? 1.0 : -1.0;
                       return player == 0 ? v : -v;
                     });
}

NPlayerGame NPlayerGame::coordination() {
  std::vector<TreeFormProblem> ps;
  ps.push_back(TreeFormProblem::simplex(2));
  ps.push_back(TreeFormProblem::simplex(2));
  return NPlayerGame(std::move(ps),
                     [](std::int32_t, std::span<const std::int32_t> a) {
                       return (a[0] == a[1]) ? 1.0 : 0.0;
                     });
}

NPlayerGame NPlayerGame::random_game(std::span<const std::int32_t> actions,
                                     Rng& rng) {
  std::vector<TreeFormProblem> ps;
  ps.reserve(actions.size());
  for (std::int32_t a : actions) ps.push_back(TreeFormProblem::simplex(a));
  // Payoffs must not depend on the order the constructor queries them, so
  // pre-draw the whole tensor in (player, flat profile) order.
  std::size_t profiles = 1;
  for (std::int32_t a : actions) profiles *= static_cast<std::size_t>(a);
  std::vector<std::vector<double>> drawn(actions.size(),
                                         std::vector<double>(profiles));
  for (auto& row : drawn)
    for (double& v : row) v = 2.0 * rng.next_unit() - 1.0;

  std::vector<std::size_t> strides(actions.size(), 1);
  for (std::int32_t i = static_cast<std::int32_t>(actions.size()) - 2; i >= 0;
       --i)
    strides[i] = strides[i + 1] * static_cast<std::size_t>(actions[i + 1]);
  return NPlayerGame(
      std::move(ps),
      [&drawn, &strides](std::int32_t player,
                         std::span<const std::int32_t> profile) {
        std::size_t flat = 0;
        for (std::size_t i = 0; i < profile.size(); ++i)
          flat += static_cast<std::size_t>(profile[i]) * strides[i];
        return drawn[player][flat];
      });
}

std::int32_t NPlayerGame::strategy_index(std::int32_t player,
                                         const PureStrategy& x) const {
  auto it = strategy_index_[player].find(x);
  if (it == strategy_index_[player].end())
    throw ValidationError("strategy not present in player " +
                          std::to_string(player) + "'s strategy set");
  return it->second;
}

double NPlayerGame::payoff(std::int32_t player,
                           std::span<const std::int32_t> profile) const {
  std::size_t flat = 0;
  for (std::size_t i = 0; i < profile.size(); ++i)
    flat += static_cast<std::size_t>(profile[i]) * strides_[i];
  return payoffs_[player][flat];
}

UtilityVector NPlayerGame::induced_utilities(
    std::int32_t player, std::span<const MixedStrategy> profile) const {
  if (static_cast<std::int32_t>(profile.size()) != players())
    throw DimensionError("profile has " + std::to_string(profile.size()) +
                         " entries for " + std::to_string(players()) +
                         " players");
  const auto m =
      static_cast<std::size_t>(problems_[player].terminal_count());
  std::vector<double> out(m, 0.0);
  std::vector<std::int32_t> prof(players(), 0);

  // Walk opponents in player order, support entries in support order;
  // the accumulation order is part of this function's contract.
  auto recurse = [&](auto&& self, std::int32_t j, double weight) -> void {
    if (j == players()) {
      const auto own = strategies_[player].size();
      for (std::size_t k = 0; k < own; ++k) {
        prof[player] = static_cast<std::int32_t>(k);
        out[terminal_of_[terminal_of_base_[player] + k]] +=
            weight * payoff(player, prof);
      }
      return;
    }
    if (j == player) {
      self(self, j + 1, weight);
      return;
    }
    for (const auto& [x, p] : profile[j].support()) {
      prof[j] = strategy_index(j, x);
      self(self, j + 1, weight * p);
    }
  };
  recurse(recurse, 0, 1.0);
  return UtilityVector(std::move(out));
}

JointDistribution::JointDistribution(std::vector<Term> terms) {
  double total = 0.0;
  for (auto& t : terms) {
    if (!(t.weight >= 0.0))
      throw ValidationError("negative joint-distribution weight");
    total += t.weight;
    if (t.weight > 0.0) terms_.push_back(std::move(t));
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw ValidationError("joint-distribution weights sum to " +
                          std::to_string(total) + ", not 1");
  if (terms_.empty())
    throw ValidationError("joint distribution has no support");
  uniform_weights_ = true;
  for (const Term& t : terms_)
    uniform_weights_ = uniform_weights_ && (t.weight == terms_[0].weight);
}

EquilibriumGapReport equilibrium_gap(const NPlayerGame& game,
                                     const JointDistribution& joint) {
  for (const auto& term : joint.terms()) {
    if (static_cast<std::int32_t>(term.marginals.size()) != game.players())
      throw DimensionError("joint term arity != player count");
  }

  EquilibriumGapReport report;
  report.worst_gap = 0.0;
  for (std::int32_t i = 0; i < game.players(); ++i) {
    double gap;
    DeviationFunction witness;
    if (joint.uniform_weights()) {
      // Uniform mixtures are exactly the self-play average, so replaying
      // the terms through a transcript reuses the swap-regret path bit for
      // bit; the reported gap then agrees exactly with the per-transcript
      // swap regret of the run that produced the joint.
      Transcript tr(game.problem(i));
      for (const auto& term : joint.terms())
        tr.add_round(term.marginals[i],
                     game.induced_utilities(i, term.marginals));
      SwapRegretResult r = swap_regret(tr);
      gap = r.regret;
      witness = std::move(r.deviation);
    } else {
      StrategyTable table(game.problem(i));
      const auto m =
          static_cast<std::size_t>(game.problem(i).terminal_count());
      std::vector<std::vector<double>> gains;
      for (const auto& term : joint.terms()) {
        UtilityVector u = game.induced_utilities(i, term.marginals);
        for (const auto& [x, p] : term.marginals[i].support()) {
          std::int32_t id = table.intern(x);
          if (id == static_cast<std::int32_t>(gains.size()))
            gains.emplace_back(m, 0.0);
          kernels::axpy(term.weight * p, u.values(), gains[id]);
        }
      }
      gap = 0.0;
      for (std::int32_t id = 0; id < table.size(); ++id) {
        const PureStrategy& x = table.strategy(id);
        treeform::BestResponse br =
            treeform::best_response(game.problem(i), gains[id]);
        const double base = dot_at_ones(gains[id], x);
        if (br.value > base) {
          gap += br.value - base;
          witness.set(x, std::move(br.strategy));
        } else {
          witness.set(x, x);
        }
      }
    }
    report.gap.push_back(gap);
    report.deviation.push_back(std::move(witness));
    report.worst_gap = std::max(report.worst_gap, gap);
  }
  return report;
}

void export_transcript(const Transcript& tr,
                       const std::filesystem::path& directory,
                       const std::string& stem) {
  namespace fs = std::filesystem;
  fs::create_directories(directory);

  csvio::Writer probs(directory / (stem + ".probs.csv"),
                      {"t", "strategy", "probability"});
  for (std::int64_t t = 0; t < tr.rounds(); ++t) {
    for (const auto& [id, p] : tr.probabilities(t)) {
      probs.field(t + 1);
      probs.field(static_cast<std::int64_t>(id));
      probs.field(p);
      probs.end_row();
    }
  }
  probs.close();

  csvio::Writer utils(directory / (stem + ".utils.csv"),
                      {"t", "terminal", "utility"});
  for (std::int64_t t = 0; t < tr.rounds(); ++t) {
    std::span<const double> u = tr.utility(t).values();
    for (std::size_t z = 0; z < u.size(); ++z) {
      utils.field(t + 1);
      utils.field(static_cast<std::int64_t>(z + 1));
      utils.field(u[z]);
      utils.end_row();
    }
  }
  utils.close();

  csvio::Writer strategies(directory / (stem + ".strategies.csv"),
                           {"strategy", "realization"});
  for (std::int32_t id = 0; id < tr.strategies().size(); ++id) {
    std::string bits;
    for (std::uint8_t b : tr.strategies().strategy(id).realization())
      bits.push_back(b ? '1' : '0');
    strategies.field(static_cast<std::int64_t>(id));
    strategies.field(bits);
    strategies.end_row();
  }
  strategies.close();
}

Transcript import_transcript(const TreeFormProblem& problem,
                             const std::filesystem::path& directory,
                             const std::string& stem) {
  namespace fs = std::filesystem;
  const auto m = static_cast<std::size_t>(problem.terminal_count());

  auto srows = csvio::read_rows(directory / (stem + ".strategies.csv"),
                                {"strategy", "realization"});
  std::vector<PureStrategy> by_id;
  for (std::size_t i = 0; i < srows.size(); ++i) {
    if (csvio::parse_int(srows[i][0]) != static_cast<std::int64_t>(i))
      throw ValidationError("strategy ids must be dense and ascending");
    const std::string& bits = srows[i][1];
    if (bits.size() != m)
      throw ValidationError("realization bitstring length " +
                            std::to_string(bits.size()) + ", want " +
                            std::to_string(m));
    std::vector<std::uint8_t> realization(m, 0);
    for (std::size_t z = 0; z < m; ++z) {
      if (bits[z] != '0' && bits[z] != '1')
        throw ValidationError("realization bitstring has '" +
                              std::string(1, bits[z]) + "'");
      realization[z] = bits[z] == '1';
    }
    by_id.emplace_back(std::move(realization));
  }

  auto urows = csvio::read_rows(directory / (stem + ".utils.csv"),
                                {"t", "terminal", "utility"});
  if (urows.size() % m != 0)
    throw ValidationError("utility rows not a multiple of terminal count");
  const std::int64_t T = static_cast<std::int64_t>(urows.size() / m);
  std::vector<std::vector<double>> utils(T, std::vector<double>(m));
  for (std::size_t r = 0; r < urows.size(); ++r) {
    const std::int64_t t = csvio::parse_int(urows[r][0]);
    const std::int64_t z = csvio::parse_int(urows[r][1]);
    if (t != static_cast<std::int64_t>(r / m) + 1 ||
        z != static_cast<std::int64_t>(r % m) + 1)
      throw ValidationError("utility rows out of canonical order at row " +
                            std::to_string(r + 2));
    utils[t - 1][z - 1] = csvio::parse_double(urows[r][2]);
  }

  auto prows = csvio::read_rows(directory / (stem + ".probs.csv"),
                                {"t", "strategy", "probability"});
  std::vector<std::vector<std::pair<std::int64_t, double>>> probs(T);
  for (const auto& row : prows) {
    const std::int64_t t = csvio::parse_int(row[0]);
    if (t < 1 || t > T)
      throw ValidationError("probability row references round " +
                            std::to_string(t));
    const std::int64_t id = csvio::parse_int(row[1]);
    if (id < 0 || id >= static_cast<std::int64_t>(by_id.size()))
      throw ValidationError("probability row references strategy " +
                            std::to_string(id));
    probs[t - 1].emplace_back(id, csvio::parse_double(row[2]));
  }

  Transcript tr(problem);
  for (std::int64_t t = 0; t < T; ++t) {
    std::vector<std::pair<PureStrategy, double>> support;
    support.reserve(probs[t].size());
    for (const auto& [id, p] : probs[t]) support.emplace_back(by_id[id], p);
    tr.add_round(MixedStrategy(std::move(support)),
                 UtilityVector(std::move(utils[t])));
  }
  if (tr.strategies().size() != static_cast<std::int32_t>(by_id.size()))
    throw ValidationError("strategy table lists strategies never played");
  for (std::int32_t id = 0; id < tr.strategies().size(); ++id) {
    if (!(tr.strategies().strategy(id) == by_id[id]))
      throw ValidationError("strategy ids do not match first-play order");
  }
  return tr;
}

}  // namespace swapreg::regret

#include "swapreg/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "swapreg/errors.hpp"

namespace swapreg::reduction {

using lowerbound::ScaledStrategy;

double Projection::mass_on(std::int32_t action_id,
                           std::int32_t reserved) const {
  if (matched && action_id == action) return beta;
  if (action_id == reserved) return matched ? 1.0 - beta : 1.0;
  return 0.0;
}

Projection project_strategy(const EmbeddingInstance& emb,
                            const PureStrategy& x, double eps) {
  if (!(eps > 0.0 && eps < 1.0))
    throw ValidationError("eps must be in (0, 1)");
  const ScaledStrategy scaled = emb.decompose(x);
  const std::int32_t group = scaled.row;
  // Highest rank first: the match is the largest-rank codeword on the
  // strategy's row whose correlation clears eps. Codewords on other rows
  // are orthogonal to x in scaled form, so they can never match.
  for (std::int32_t rank = emb.actions().group_size(group) - 1; rank >= 0;
       --rank) {
    const std::int32_t action = emb.actions().action(group, rank);
    const double dot = scaled.signs.dot(emb.codeword(action));
    if (dot > eps) return {true, action, group, rank, dot};
  }
  return {false, -1, -1, -1, 0.0};
}

std::vector<Projection> project_all(const EmbeddingInstance& emb,
                                    const Transcript& tr, double eps) {
  std::vector<Projection> out;
  out.reserve(tr.strategies().size());
  for (std::int32_t id = 0; id < tr.strategies().size(); ++id)
    out.push_back(project_strategy(emb, tr.strategies().strategy(id), eps));
  return out;
}

RevealTimes reveal_times(const EmbeddingInstance& emb,
                         std::span<const std::int32_t> seq,
                         const Transcript& tr,
                         std::span<const Projection> projections) {
  if (projections.size() != static_cast<std::size_t>(tr.strategies().size()))
    throw DimensionError("one projection per interned strategy required");
  const auto T = static_cast<std::int64_t>(seq.size());
  RevealTimes reveal;
  reveal.action_first_play.assign(emb.actions().total(), T);
  for (std::int64_t t = static_cast<std::int64_t>(seq.size()) - 1; t >= 0; --t)
    reveal.action_first_play[seq[t]] = t + 1;

  reveal.strategy_reveal.reserve(projections.size());
  for (const Projection& p : projections)
    reveal.strategy_reveal.push_back(
        p.matched ? reveal.action_first_play[p.action] : 0);
  return reveal;
}

double mass_before_reveal(const Transcript& tr, const RevealTimes& reveal) {
  if (reveal.strategy_reveal.size() !=
      static_cast<std::size_t>(tr.strategies().size()))
    throw DimensionError("reveal times do not match the strategy table");
  double mass = 0.0;
  for (std::int64_t t = 0; t < tr.rounds(); ++t) {
    for (const auto& [id, p] : tr.probabilities(t)) {
      if (t + 1 <= reveal.strategy_reveal[id]) mass += p;
    }
  }
  return mass / static_cast<double>(tr.rounds());
}

std::vector<std::vector<double>> simulate_normalform_learner(
    const Transcript& tr, const EmbeddingInstance& emb,
    std::span<const Projection> projections) {
  if (projections.size() != static_cast<std::size_t>(tr.strategies().size()))
    throw DimensionError("one projection per interned strategy required");
  const std::int32_t M = emb.actions().total();
  const std::int32_t reserved = emb.actions().reserved();
  std::vector<std::vector<double>> pibar(
      tr.rounds(), std::vector<double>(M, 0.0));
  for (std::int64_t t = 0; t < tr.rounds(); ++t) {
    for (const auto& [id, p] : tr.probabilities(t)) {
      const Projection& proj = projections[id];
      if (proj.matched) {
        pibar[t][proj.action] += p * proj.beta;
        pibar[t][reserved] += p * (1.0 - proj.beta);
      } else {
        pibar[t][reserved] += p;
      }
    }
    double total = 0.0;
    for (double v : pibar[t]) total += v;
    if (std::abs(total - 1.0) > 1e-9)
      throw NumericError("simulated action distribution sums to " +
                         std::to_string(total) + " at round " +
                         std::to_string(t + 1));
  }
  return pibar;
}

std::vector<EpsilonBoundViolation> check_epsilon_bound(
    const Transcript& tr, const EmbeddingInstance& emb,
    std::span<const std::int32_t> seq, std::span<const Projection> projections,
    const RevealTimes& reveal, double eps) {
  if (static_cast<std::int64_t>(seq.size()) != tr.rounds())
    throw DimensionError("sequence length != transcript rounds");
  std::vector<EpsilonBoundViolation> violations;

  // Scaled forms once per strategy; the check reuses the exact dots.
  std::vector<ScaledStrategy> scaled;
  scaled.reserve(tr.strategies().size());
  for (std::int32_t id = 0; id < tr.strategies().size(); ++id)
    scaled.push_back(emb.decompose(tr.strategies().strategy(id)));

  const std::int32_t reserved = emb.actions().reserved();
  for (std::int32_t id = 0; id < tr.strategies().size(); ++id) {
    const std::int64_t t_reveal = reveal.strategy_reveal[id];
    for (std::int64_t t = t_reveal; t < tr.rounds(); ++t) {
      // t is 0-based here; rounds t+1 > t_reveal are exactly t >= t_reveal.
      const std::int32_t played = seq[t];
      const double lhs = emb.scaled_dot(scaled[id], played);
      const double rhs = projections[id].mass_on(played, reserved) + eps;
      if (lhs > rhs)
        violations.push_back({id, t + 1, lhs, rhs});
    }
  }
  return violations;
}

NormalFormDeviation best_normalform_deviation(
    std::span<const std::vector<double>> pibar,
    std::span<const std::int32_t> seq) {
  if (pibar.size() != seq.size())
    throw DimensionError("pibar rows != sequence length");
  if (pibar.empty()) throw ValidationError("empty play history");
  const auto M = static_cast<std::int32_t>(pibar[0].size());

  // hindsight[a][b] = sum_t pibar^t(a) [seq^t == b], unnormalized.
  std::vector<std::vector<double>> hindsight(M, std::vector<double>(M, 0.0));
  for (std::size_t t = 0; t < seq.size(); ++t) {
    if (seq[t] < 0 || seq[t] >= M)
      throw DomainError("sequence action out of range");
    for (std::int32_t a = 0; a < M; ++a)
      hindsight[a][seq[t]] += pibar[t][a];
  }

  NormalFormDeviation out;
  out.map.resize(M);
  std::vector<std::int32_t> identity(M);
  for (std::int32_t a = 0; a < M; ++a) {
    identity[a] = a;
    std::int32_t best = 0;
    for (std::int32_t b = 1; b < M; ++b) {
      if (hindsight[a][b] > hindsight[a][best]) best = b;  // ties keep low id
    }
    out.map[a] = best;
  }
  // Both reported values go through normalform_value so that recomputing
  // them from (pibar, seq, map) reproduces them exactly, not within a
  // tolerance. The hindsight table only picks the argmaxes.
  out.value_identity = normalform_value(pibar, seq, identity);
  out.value_deviation = normalform_value(pibar, seq, out.map);
  return out;
}

double normalform_value(std::span<const std::vector<double>> pibar,
                        std::span<const std::int32_t> seq,
                        std::span<const std::int32_t> map) {
  if (pibar.size() != seq.size())
    throw DimensionError("pibar rows != sequence length");
  if (pibar.empty()) throw ValidationError("empty play history");
  const auto M = static_cast<std::int32_t>(pibar[0].size());
  if (static_cast<std::int32_t>(map.size()) != M)
    throw DimensionError("map must cover all actions");
  double total = 0.0;
  for (std::size_t t = 0; t < seq.size(); ++t) {
    for (std::int32_t a = 0; a < M; ++a) {
      if (map[a] == seq[t]) total += pibar[t][a];
    }
  }
  return total / static_cast<double>(seq.size());
}

DeviationFunction lift_deviation(const EmbeddingInstance& emb,
                                 const Transcript& tr,
                                 std::span<const Projection> projections,
                                 std::span<const std::int32_t> map) {
  if (projections.size() != static_cast<std::size_t>(tr.strategies().size()))
    throw DimensionError("one projection per interned strategy required");
  if (static_cast<std::int32_t>(map.size()) != emb.actions().total())
    throw DimensionError("map must cover all actions");
  const std::int32_t reserved = emb.actions().reserved();

  DeviationFunction phi;
  for (std::int32_t id = 0; id < tr.strategies().size(); ++id) {
    const Projection& proj = projections[id];
    DeviationFunction::Image image;
    if (!proj.matched) {
      image.combination.emplace_back(emb.strategy_of(map[reserved]), 1.0);
    } else if (map[proj.action] == map[reserved]) {
      image.combination.emplace_back(emb.strategy_of(map[proj.action]), 1.0);
    } else {
      image.combination.emplace_back(emb.strategy_of(map[proj.action]),
                                     proj.beta);
      image.combination.emplace_back(emb.strategy_of(map[reserved]),
                                     1.0 - proj.beta);
    }
    phi.set(tr.strategies().strategy(id), std::move(image));
  }
  return phi;
}

TransferReport transfer_report(const Transcript& tr,
                               const EmbeddingInstance& emb,
                               std::span<const std::int32_t> seq, double eps,
                               double delta) {
  if (static_cast<std::int64_t>(seq.size()) != tr.rounds())
    throw DimensionError("sequence length != transcript rounds");

  const std::vector<Projection> projections = project_all(emb, tr, eps);
  const RevealTimes reveal = reveal_times(emb, seq, tr, projections);
  const std::vector<std::vector<double>> pibar =
      simulate_normalform_learner(tr, emb, projections);
  const std::vector<EpsilonBoundViolation> violations =
      check_epsilon_bound(tr, emb, seq, projections, reveal, eps);
  const NormalFormDeviation dev = best_normalform_deviation(pibar, seq);
  const DeviationFunction lifted =
      lift_deviation(emb, tr, projections, dev.map);

  TransferReport report;
  report.d = emb.d();
  report.M = emb.actions().total();
  report.n = emb.n();
  report.T = tr.rounds();
  report.eps = eps;
  report.delta = delta;
  report.W = mass_before_reveal(tr, reveal);
  report.F_holds = check_concentration(emb, eps).holds;
  report.V_id = regret::value_of_deviation(tr, DeviationFunction::identity());
  report.Vbar_id = dev.value_identity;
  report.V_phi = regret::value_of_deviation(tr, lifted);
  report.Vbar_phibar = dev.value_deviation;
  report.swap_regret = regret::swap_regret(tr).regret;
  report.epsilon_violations = static_cast<std::int64_t>(violations.size());
  report.phibar = dev.map;

  constexpr double kGuard = 1e-9;
  report.chain_i_slack =
      (report.Vbar_id + eps + 2.0 * report.W) - report.V_id;
  report.chain_i_ok = report.chain_i_slack >= -kGuard;
  report.chain_ii_slack =
      report.V_phi - (report.Vbar_phibar - eps - 2.0 * report.W);
  report.chain_ii_ok = !report.F_holds || report.chain_ii_slack >= -kGuard;
  report.chain_iii_slack =
      report.swap_regret -
      ((report.Vbar_phibar - report.Vbar_id) - 2.0 * eps - 4.0 * report.W);
  report.chain_iii_ok = !report.F_holds || report.chain_iii_slack >= -kGuard;

  auto in_range = [](double v, double lo, double hi) {
    return std::isfinite(v) && v >= lo && v <= hi;
  };
  if (!in_range(report.W, 0.0, 1.0 + 1e-9) ||
      !in_range(report.V_id, -1.0 - 1e-9, 1.0 + 1e-9) ||
      !in_range(report.V_phi, -1.0 - 1e-9, 1.0 + 1e-9) ||
      !in_range(report.Vbar_id, 0.0, 1.0 + 1e-9) ||
      !in_range(report.Vbar_phibar, 0.0, 1.0 + 1e-9) ||
      !in_range(report.swap_regret, -1e-9, 2.0 + 1e-9))
    throw NumericError("transfer report value out of range");
  return report;
}

}  // namespace swapreg::reduction

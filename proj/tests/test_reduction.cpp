#include <doctest.h>

#include <cmath>
#include <vector>

#include "swapreg/errors.hpp"
#include "swapreg/learners.hpp"
#include "swapreg/lowerbound.hpp"
#include "swapreg/reduction.hpp"
#include "swapreg/regret.hpp"
#include "swapreg/rng.hpp"

#include "oracles.hpp"

using namespace swapreg;
using lowerbound::EmbeddingInstance;
using lowerbound::GroupedActions;
using lowerbound::SignVector;
using regret::DeviationFunction;
using regret::Transcript;
using treeform::MixedStrategy;
using treeform::PureStrategy;
using treeform::UtilityVector;

namespace {

SignVector signs(std::vector<int> s) { return SignVector::from_signs(s); }

/// Three actions in one group plus the reserved one; codewords chosen so
/// action 2's pattern correlates 0.5 with action 0's and is orthogonal to
/// action 1's.
EmbeddingInstance crafted_embedding() {
  return EmbeddingInstance(GroupedActions({3}), 4,
                           {signs({1, 1, 1, -1}),      // action 0
                            signs({1, -1, -1, 1}),     // action 1
                            signs({1, 1, 1, 1}),       // action 2
                            signs({-1, -1, -1, -1})}); // reserved image
}

}  // namespace

TEST_CASE("projection matches the largest-rank codeword above threshold") {
  const EmbeddingInstance emb(
      GroupedActions({3}), 4,
      {signs({-1, -1, -1, -1}), signs({1, 1, 1, -1}), signs({1, 1, -1, 1}),
       signs({-1, 1, -1, 1})});
  // x agrees 0.5 with both rank-1 and rank-2 codewords; rank 2 must win.
  const PureStrategy x =
      emb.compose({0, signs({1, 1, 1, 1})});
  const reduction::Projection proj = reduction::project_strategy(emb, x, 0.45);
  REQUIRE(proj.matched);
  CHECK(proj.action == 2);
  CHECK(proj.group == 0);
  CHECK(proj.rank == 2);
  CHECK(proj.beta == 0.5);
  CHECK(proj.mass_on(2, 3) == 0.5);
  CHECK(proj.mass_on(3, 3) == 0.5);
  CHECK(proj.mass_on(0, 3) == 0.0);
}

TEST_CASE("projection falls through to a lower rank when higher ranks miss") {
  const EmbeddingInstance emb = crafted_embedding();
  const PureStrategy x = emb.strategy_of(1);
  const reduction::Projection proj = reduction::project_strategy(emb, x, 0.45);
  REQUIRE(proj.matched);
  CHECK(proj.action == 1);
  CHECK(proj.beta == 1.0);
}

TEST_CASE("projection leaves uncorrelated strategies on the reserved action") {
  const EmbeddingInstance emb = crafted_embedding();
  // Orthogonal-or-worse against all three codewords.
  const PureStrategy x = emb.compose({0, signs({-1, 1, -1, 1})});
  const reduction::Projection proj = reduction::project_strategy(emb, x, 0.45);
  CHECK_FALSE(proj.matched);
  CHECK(proj.beta == 0.0);
  CHECK(proj.mass_on(emb.actions().reserved(), emb.actions().reserved()) ==
        1.0);
  CHECK(proj.mass_on(0, emb.actions().reserved()) == 0.0);
}

TEST_CASE("projection validates the threshold range") {
  const EmbeddingInstance emb = crafted_embedding();
  const PureStrategy x = emb.strategy_of(0);
  CHECK_THROWS_AS(reduction::project_strategy(emb, x, 0.0), ValidationError);
  CHECK_THROWS_AS(reduction::project_strategy(emb, x, 1.0), ValidationError);
}

TEST_CASE("reveal times record first plays and matched strategies") {
  const EmbeddingInstance emb = crafted_embedding();
  Transcript tr(emb.problem());
  const PureStrategy matched = emb.strategy_of(1);
  const PureStrategy unmatched = emb.compose({0, signs({-1, 1, -1, 1})});
  tr.add_round(MixedStrategy::point_mass(matched), emb.utility_of(0));
  tr.add_round(MixedStrategy::point_mass(unmatched), emb.utility_of(1));
  tr.add_round(MixedStrategy::point_mass(matched), emb.utility_of(0));
  const std::vector<std::int32_t> seq = {0, 1, 0};
  const std::vector<reduction::Projection> projections =
      reduction::project_all(emb, tr, 0.45);
  REQUIRE(projections.size() == 2);
  const reduction::RevealTimes reveal =
      reduction::reveal_times(emb, seq, tr, projections);
  CHECK(reveal.action_first_play[0] == 1);
  CHECK(reveal.action_first_play[1] == 2);
  CHECK(reveal.action_first_play[2] == 3);  // never played: reported as T
  CHECK(reveal.strategy_reveal[0] == 2);    // matched action 1
  CHECK(reveal.strategy_reveal[1] == 0);    // unmatched

  // Strategy 0's window is rounds 1..2, where it carried mass 1 then 0.
  CHECK(reduction::mass_before_reveal(tr, reveal) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("simulated normal-form rows push mass through projections") {
  const EmbeddingInstance emb = crafted_embedding();
  Transcript tr(emb.problem());
  const PureStrategy both = emb.compose({0, signs({-1, 1, 1, 1})});
  // Correlates 0.5 with action 2 only; the projection puts beta = 0.5 on
  // action 2 and the rest on the reserved action.
  tr.add_round(MixedStrategy::point_mass(both), emb.utility_of(0));
  const std::vector<reduction::Projection> projections =
      reduction::project_all(emb, tr, 0.45);
  const std::vector<std::vector<double>> pibar =
      reduction::simulate_normalform_learner(tr, emb, projections);
  REQUIRE(pibar.size() == 1);
  REQUIRE(pibar[0].size() == 4);
  CHECK(pibar[0][0] == 0.0);
  CHECK(pibar[0][1] == 0.0);
  CHECK(pibar[0][2] == 0.5);
  CHECK(pibar[0][3] == 0.5);
}

TEST_CASE("epsilon bound holds after reveal on a lawful adversary run") {
  const GroupedActions actions({2, 2});
  const EmbeddingInstance emb = EmbeddingInstance::sample(actions, 32, 71);
  const std::vector<std::int32_t> seq =
      lowerbound::staircase_sequence(actions, 60, 0.2, 72);
  const std::vector<UtilityVector> utils =
      lowerbound::embedded_utilities(emb, seq);
  Rng pool_rng(derive_seed(73, "reduction-test"));
  std::vector<PureStrategy> universe =
      learners::strategy_universe(emb.problem(), 12, pool_rng);
  learners::Hedge hedge(universe, {0.0, 60});
  Transcript tr(emb.problem());
  for (std::int64_t t = 0; t < 60; ++t) {
    const MixedStrategy pi = hedge.next_distribution();
    tr.add_round(pi, utils[t]);
    hedge.observe(utils[t]);
  }
  const std::vector<reduction::Projection> projections =
      reduction::project_all(emb, tr, 0.25);
  const reduction::RevealTimes reveal =
      reduction::reveal_times(emb, seq, tr, projections);
  CHECK(reduction::check_epsilon_bound(tr, emb, seq, projections, reveal, 0.25)
            .empty());
}

TEST_CASE("epsilon bound catches an adversary that breaks rank order") {
  const EmbeddingInstance emb = crafted_embedding();
  const PureStrategy x = emb.strategy_of(2);
  Transcript tr(emb.problem());
  for (int t = 0; t < 3; ++t) {
    tr.add_round(MixedStrategy::point_mass(x), emb.utility_of(0));
  }
  // Rank 2 first, then rank 0 twice: a staircase never does this.
  const std::vector<std::int32_t> seq = {2, 0, 0};
  CHECK(lowerbound::scan_sequence(emb.actions(), seq).order_violations > 0);
  const std::vector<reduction::Projection> projections =
      reduction::project_all(emb, tr, 0.45);
  const reduction::RevealTimes reveal =
      reduction::reveal_times(emb, seq, tr, projections);
  const std::vector<reduction::EpsilonBoundViolation> violations =
      reduction::check_epsilon_bound(tr, emb, seq, projections, reveal, 0.45);
  REQUIRE(violations.size() == 2);
  CHECK(violations[0].strategy == 0);
  CHECK(violations[0].t == 2);
  CHECK(violations[0].lhs == 0.5);   // <c2, c0> in scaled form
  CHECK(violations[0].rhs == 0.45);  // no mass on action 0, plus eps
  CHECK(violations[1].t == 3);
}

TEST_CASE("best normal-form deviation matches the exhaustive oracle") {
  Rng rng(derive_seed(74, "reduction-test"));
  for (int rep = 0; rep < 25; ++rep) {
    const std::int32_t M = 3 + static_cast<std::int32_t>(rng.next_below(4));
    const std::int64_t T = 5 + static_cast<std::int64_t>(rng.next_below(20));
    std::vector<std::vector<double>> pibar(T, std::vector<double>(M));
    for (auto& row : pibar) {
      double total = 0.0;
      for (double& v : row) {
        v = rng.next_unit() + 1e-3;
        total += v;
      }
      for (double& v : row) v /= total;
    }
    std::vector<std::int32_t> seq(T);
    for (std::int32_t& a : seq) {
      a = static_cast<std::int32_t>(rng.next_below(M - 1));  // never reserved
    }
    const reduction::NormalFormDeviation dev =
        reduction::best_normalform_deviation(pibar, seq);
    const double oracle = testing::exhaustive_normalform_value(pibar, seq);
    CHECK(std::abs(dev.value_deviation - oracle) <= 1e-9);
    CHECK(dev.value_deviation >= dev.value_identity - 1e-12);
    REQUIRE(static_cast<std::int32_t>(dev.map.size()) == M);
    for (std::int32_t target : dev.map) {
      CHECK(target != M - 1);  // reserved column is all zeros
    }
    std::vector<std::int32_t> identity(M);
    for (std::int32_t a = 0; a < M; ++a) identity[a] = a;
    CHECK(reduction::normalform_value(pibar, seq, identity) ==
          dev.value_identity);
    CHECK(reduction::normalform_value(pibar, seq, dev.map) ==
          dev.value_deviation);
  }
}

TEST_CASE("lifted deviations mix the mapped action with the reserved image") {
  const EmbeddingInstance emb = crafted_embedding();
  Transcript tr(emb.problem());
  const PureStrategy both = emb.compose({0, signs({-1, 1, 1, 1})});
  const PureStrategy lost = emb.compose({0, signs({-1, 1, -1, 1})});
  tr.add_round(MixedStrategy({{both, 0.5}, {lost, 0.5}}), emb.utility_of(0));
  const std::vector<reduction::Projection> projections =
      reduction::project_all(emb, tr, 0.45);
  const std::vector<std::int32_t> map = {1, 0, 0, 2};
  const DeviationFunction phi =
      reduction::lift_deviation(emb, tr, projections, map);

  // `both` projects to action 2 with beta 0.5; its image mixes the lifted
  // strategies of map[2] = 0 and map[reserved] = 2 evenly.
  const DeviationFunction::Image* image = phi.find(both);
  REQUIRE(image != nullptr);
  REQUIRE(image->combination.size() == 2);
  CHECK(image->combination[0].first == emb.strategy_of(0));
  CHECK(image->combination[0].second == 0.5);
  CHECK(image->combination[1].first == emb.strategy_of(2));
  CHECK(image->combination[1].second == 0.5);

  // `lost` is unmatched: a point on the reserved action's image.
  const DeviationFunction::Image* point = phi.find(lost);
  REQUIRE(point != nullptr);
  REQUIRE(point->combination.size() == 1);
  CHECK(point->combination[0].first == emb.strategy_of(2));
  CHECK(point->combination[0].second == 1.0);
}

TEST_CASE("lifted deviation merges components mapped to the same action") {
  const EmbeddingInstance emb = crafted_embedding();
  Transcript tr(emb.problem());
  const PureStrategy both = emb.compose({0, signs({-1, 1, 1, 1})});
  tr.add_round(MixedStrategy::point_mass(both), emb.utility_of(0));
  const std::vector<reduction::Projection> projections =
      reduction::project_all(emb, tr, 0.45);
  const std::vector<std::int32_t> map = {0, 1, 1, 1};
  const DeviationFunction phi =
      reduction::lift_deviation(emb, tr, projections, map);
  const DeviationFunction::Image* image = phi.find(both);
  REQUIRE(image != nullptr);
  REQUIRE(image->combination.size() == 1);
  CHECK(image->combination[0].first == emb.strategy_of(1));
  CHECK(image->combination[0].second == 1.0);
}

TEST_CASE("transfer report chains hold on a real run") {
  const GroupedActions actions({2, 2});
  const EmbeddingInstance emb = EmbeddingInstance::sample(actions, 32, 5);
  const std::int64_t T = 50;
  const std::vector<std::int32_t> seq =
      lowerbound::staircase_sequence(actions, T, 0.2, 6);
  const std::vector<UtilityVector> utils =
      lowerbound::embedded_utilities(emb, seq);
  Rng pool_rng(derive_seed(75, "reduction-test"));
  std::vector<PureStrategy> universe =
      learners::strategy_universe(emb.problem(), 10, pool_rng);
  learners::Hedge hedge(universe, {0.0, T});
  Transcript tr(emb.problem());
  for (std::int64_t t = 0; t < T; ++t) {
    const MixedStrategy pi = hedge.next_distribution();
    tr.add_round(pi, utils[t]);
    hedge.observe(utils[t]);
  }
  const double eps = 0.25;
  const double delta = 25.0 * std::exp(-32.0 * eps * eps / 2.0);
  const reduction::TransferReport report =
      reduction::transfer_report(tr, emb, seq, eps, delta);

  CHECK(report.d == 2);
  CHECK(report.M == 5);
  CHECK(report.n == 32);
  CHECK(report.T == T);
  CHECK(report.eps == eps);
  CHECK(report.epsilon_violations == 0);
  CHECK(report.chain_i_ok);
  CHECK(report.chain_ii_ok);
  CHECK(report.chain_iii_ok);
  CHECK(report.W >= 0.0);
  CHECK(report.W <= 1.0);
  CHECK(report.swap_regret >= 0.0);
  CHECK(report.chain_i_slack >= -1e-9);
  REQUIRE(report.phibar.size() == 5);

  // V(Id) is the realized average utility; recompute it the long way.
  double v_id = 0.0;
  for (std::int64_t t = 0; t < T; ++t) {
    for (const auto& [id, p] : tr.probabilities(t)) {
      double dot = 0.0;
      for (std::int32_t z : tr.strategies().strategy(id).ones()) {
        dot += tr.utility(t)[z];
      }
      v_id += p * dot;
    }
  }
  v_id /= static_cast<double>(T);
  CHECK(report.V_id == doctest::Approx(v_id).epsilon(1e-12));

  // The identity chain with the actual W, eps: V_id <= Vbar_id + eps + 2W.
  CHECK(report.V_id <= report.Vbar_id + eps + 2.0 * report.W + 1e-9);
}

TEST_CASE("transfer report flags concentration failures as vacuous chains") {
  // Force a concentration failure: two identical codewords in one group.
  const SignVector a = signs({1, 1, 1, 1});
  const SignVector b = signs({1, -1, 1, -1});
  const EmbeddingInstance emb(GroupedActions({2}), 4, {a, a, b});
  Transcript tr(emb.problem());
  const std::vector<std::int32_t> seq = {0, 0};
  tr.add_round(MixedStrategy::point_mass(emb.strategy_of(0)),
               emb.utility_of(0));
  tr.add_round(MixedStrategy::point_mass(emb.strategy_of(0)),
               emb.utility_of(0));
  const reduction::TransferReport report =
      reduction::transfer_report(tr, emb, seq, 0.5, 0.1);
  CHECK_FALSE(report.F_holds);
  CHECK(report.chain_ii_ok);   // vacuously
  CHECK(report.chain_iii_ok);  // vacuously
  CHECK(report.chain_i_ok);    // chain (i) never needs F
}

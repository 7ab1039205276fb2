#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "swapreg/errors.hpp"
#include "swapreg/regret.hpp"
#include "swapreg/rng.hpp"
#include "swapreg/treeform.hpp"

#include "oracles.hpp"

using namespace swapreg;
using regret::DeviationFunction;
using regret::JointDistribution;
using regret::NPlayerGame;
using regret::StrategyTable;
using regret::Transcript;
using treeform::MixedStrategy;
using treeform::PureStrategy;
using treeform::TreeFormProblem;
using treeform::UtilityVector;

namespace {

PureStrategy strat(std::vector<std::uint8_t> v) {
  return PureStrategy(std::move(v));
}

std::filesystem::path fresh_dir(const std::string& tag) {
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / ("swapreg_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("strategy table interns by realization and validates once") {
  StrategyTable table(TreeFormProblem::simplex(3));
  const PureStrategy a = strat({1, 0, 0});
  CHECK(table.intern(a) == 0);
  CHECK(table.intern(strat({0, 1, 0})) == 1);
  CHECK(table.intern(a) == 0);
  CHECK(table.size() == 2);
  CHECK(table.find(strat({0, 0, 1})) == -1);
  CHECK(table.strategy(1) == strat({0, 1, 0}));
  CHECK_THROWS_AS(table.intern(strat({1, 1, 0})), ValidationError);
}

TEST_CASE("chasing yesterday's winner has zero swap regret") {
  // Two rounds on a two-action simplex: play each action exactly when it
  // pays off. No modification rule can improve on that.
  Transcript tr(TreeFormProblem::simplex(2));
  const PureStrategy e1 = strat({1, 0});
  const PureStrategy e2 = strat({0, 1});
  tr.add_round(MixedStrategy::point_mass(e1), UtilityVector({1.0, 0.0}));
  tr.add_round(MixedStrategy::point_mass(e2), UtilityVector({0.0, 1.0}));
  CHECK(regret::swap_regret(tr).regret == 0.0);
  CHECK(regret::external_regret(tr) == -0.5);
}

TEST_CASE("perfectly wrong play has swap regret one") {
  Transcript tr(TreeFormProblem::simplex(2));
  const PureStrategy e1 = strat({1, 0});
  const PureStrategy e2 = strat({0, 1});
  tr.add_round(MixedStrategy::point_mass(e1), UtilityVector({0.0, 1.0}));
  tr.add_round(MixedStrategy::point_mass(e2), UtilityVector({1.0, 0.0}));
  CHECK(regret::swap_regret(tr).regret == 1.0);
  CHECK(regret::external_regret(tr) == 0.5);
}

TEST_CASE("swap regret dominates external regret and is nonnegative") {
  Rng rng(derive_seed(31, "regret-test"));
  for (int rep = 0; rep < 40; ++rep) {
    const TreeFormProblem p = testing::random_small_problem(rng);
    const Transcript tr =
        testing::random_transcript(p, 3 + rng.next_below(8), rng);
    const double swap = regret::swap_regret(tr).regret;
    CHECK(swap >= 0.0);
    CHECK(swap >= regret::external_regret(tr) - 1e-12);
  }
}

TEST_CASE("swap regret matches the exhaustive oracle") {
  Rng rng(derive_seed(32, "regret-test"));
  for (int rep = 0; rep < 40; ++rep) {
    const TreeFormProblem p = testing::random_small_problem(rng);
    const Transcript tr =
        testing::random_transcript(p, 2 + rng.next_below(6), rng);
    const double swap = regret::swap_regret(tr).regret;
    const double oracle = testing::exhaustive_swap_regret(tr);
    CHECK(std::abs(swap - oracle) <= 1e-9);
  }
}

TEST_CASE("the reported deviation attains the reported regret") {
  Rng rng(derive_seed(33, "regret-test"));
  for (int rep = 0; rep < 20; ++rep) {
    const TreeFormProblem p = testing::random_small_problem(rng);
    const Transcript tr =
        testing::random_transcript(p, 2 + rng.next_below(6), rng);
    const regret::SwapRegretResult result = regret::swap_regret(tr);
    const double v_phi = regret::value_of_deviation(tr, result.deviation);
    const double v_id =
        regret::value_of_deviation(tr, DeviationFunction::identity());
    CHECK(std::abs((v_phi - v_id) - result.regret) <= 1e-9);
  }
}

TEST_CASE("deviation functions reject misuse") {
  DeviationFunction id = DeviationFunction::identity();
  CHECK(id.is_identity());
  const PureStrategy a = strat({1, 0});
  const PureStrategy b = strat({0, 1});
  CHECK_THROWS_AS(id.set(a, b), ValidationError);

  DeviationFunction phi;
  phi.set(a, b);
  CHECK_THROWS_AS(phi.set(a, a), ValidationError);
  CHECK(phi.find(a) != nullptr);
  CHECK(phi.find(b) == nullptr);

  Transcript tr(TreeFormProblem::simplex(2));
  tr.add_round(MixedStrategy::point_mass(b), UtilityVector({1.0, 0.0}));
  CHECK_THROWS_AS(regret::value_of_deviation(tr, phi), DomainError);

  DeviationFunction mixed;
  CHECK_THROWS_AS(
      mixed.set(a, DeviationFunction::Image{{{a, 0.3}, {b, 0.3}}}),
      ValidationError);
}

TEST_CASE("aggregate_gains accumulates per-strategy weighted utilities") {
  Transcript tr(TreeFormProblem::simplex(2));
  const PureStrategy e1 = strat({1, 0});
  const PureStrategy e2 = strat({0, 1});
  tr.add_round(MixedStrategy({{e1, 0.25}, {e2, 0.75}}),
               UtilityVector({1.0, -1.0}));
  tr.add_round(MixedStrategy::point_mass(e1), UtilityVector({0.5, 0.0}));
  const std::vector<std::vector<double>> gains = regret::aggregate_gains(tr);
  REQUIRE(gains.size() == 2);
  CHECK(gains[0][0] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(gains[0][1] == doctest::Approx(-0.25).epsilon(1e-15));
  CHECK(gains[1][0] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(gains[1][1] == doctest::Approx(-0.75).epsilon(1e-15));
}

TEST_CASE("matching pennies payoffs are zero-sum and correct") {
  const NPlayerGame game = NPlayerGame::matching_pennies();
  const std::int32_t same[2] = {0, 0};
  const std::int32_t diff[2] = {0, 1};
  CHECK(game.payoff(0, same) == 1.0);
  CHECK(game.payoff(1, same) == -1.0);
  CHECK(game.payoff(0, diff) == -1.0);
  CHECK(game.payoff(1, diff) == 1.0);
}

TEST_CASE("induced utilities average over opponent mixtures") {
  const NPlayerGame game = NPlayerGame::matching_pennies();
  const std::span<const PureStrategy> xs1 = game.strategies(1);
  std::vector<MixedStrategy> profile = {
      MixedStrategy::point_mass(game.strategies(0)[0]),
      MixedStrategy::point_mass(xs1[0])};
  const UtilityVector u0 = game.induced_utilities(0, profile);
  CHECK(u0[0] == 1.0);
  CHECK(u0[1] == -1.0);

  profile[1] = MixedStrategy::uniform(xs1);
  const UtilityVector mixed = game.induced_utilities(0, profile);
  CHECK(mixed[0] == 0.0);
  CHECK(mixed[1] == 0.0);
}

TEST_CASE("random games are reproducible and bounded") {
  Rng rng1(derive_seed(34, "regret-test"));
  Rng rng2(derive_seed(34, "regret-test"));
  const std::int32_t actions[2] = {3, 4};
  const NPlayerGame g1 = NPlayerGame::random_game(actions, rng1);
  const NPlayerGame g2 = NPlayerGame::random_game(actions, rng2);
  std::int32_t profile[2];
  for (profile[0] = 0; profile[0] < 3; ++profile[0]) {
    for (profile[1] = 0; profile[1] < 4; ++profile[1]) {
      for (std::int32_t pl = 0; pl < 2; ++pl) {
        const double v = g1.payoff(pl, profile);
        CHECK(v == g2.payoff(pl, profile));
        CHECK(std::abs(v) <= 1.0);
      }
    }
  }
}

TEST_CASE("games reject trees whose strategies span several terminals") {
  std::vector<TreeFormProblem> ps;
  ps.push_back(TreeFormProblem::two_level(1, 2));  // 2 terminals per strategy
  ps.push_back(TreeFormProblem::simplex(2));
  CHECK_THROWS_AS(
      NPlayerGame(std::move(ps),
                  [](std::int32_t, std::span<const std::int32_t>) {
                    return 0.0;
                  }),
      ValidationError);
}

TEST_CASE("joint distributions validate weights and detect uniformity") {
  const NPlayerGame game = NPlayerGame::coordination();
  const MixedStrategy a = MixedStrategy::point_mass(game.strategies(0)[0]);
  const MixedStrategy b = MixedStrategy::point_mass(game.strategies(1)[0]);
  const JointDistribution uniform({{0.5, {a, b}}, {0.5, {a, b}}});
  CHECK(uniform.uniform_weights());
  CHECK(uniform.terms().size() == 2);
  const JointDistribution skewed({{0.75, {a, b}}, {0.25, {a, b}}});
  CHECK_FALSE(skewed.uniform_weights());
  const JointDistribution dropped({{1.0, {a, b}}, {0.0, {a, b}}});
  CHECK(dropped.terms().size() == 1);
  CHECK_THROWS_AS(JointDistribution({{0.5, {a, b}}}), ValidationError);
}

TEST_CASE("coordination on a disagreement point has gap one") {
  const NPlayerGame game = NPlayerGame::coordination();
  const JointDistribution joint(
      {{1.0,
        {MixedStrategy::point_mass(game.strategies(0)[0]),
         MixedStrategy::point_mass(game.strategies(1)[1])}}});
  const regret::EquilibriumGapReport report =
      regret::equilibrium_gap(game, joint);
  CHECK(report.worst_gap == 1.0);
  CHECK(report.gap[0] == 1.0);
  CHECK(report.gap[1] == 1.0);
}

TEST_CASE("coordination on an agreement point is an equilibrium") {
  const NPlayerGame game = NPlayerGame::coordination();
  const JointDistribution joint(
      {{1.0,
        {MixedStrategy::point_mass(game.strategies(0)[1]),
         MixedStrategy::point_mass(game.strategies(1)[1])}}});
  CHECK(regret::equilibrium_gap(game, joint).worst_gap == 0.0);
}

TEST_CASE("transcripts export and import byte-identically") {
  Rng rng(derive_seed(35, "regret-test"));
  const TreeFormProblem p = testing::random_small_problem(rng);
  const Transcript tr = testing::random_transcript(p, 6, rng);
  const std::filesystem::path dir = fresh_dir("transcript_roundtrip");

  regret::export_transcript(tr, dir, "run");
  const Transcript back = regret::import_transcript(p, dir, "run");
  REQUIRE(back.rounds() == tr.rounds());
  CHECK(regret::swap_regret(back).regret == regret::swap_regret(tr).regret);

  const std::filesystem::path dir2 = fresh_dir("transcript_roundtrip2");
  regret::export_transcript(back, dir2, "run");
  for (const char* name : {"run.probs.csv", "run.utils.csv",
                           "run.strategies.csv"}) {
    std::ifstream f1(dir / name), f2(dir2 / name);
    const std::string s1((std::istreambuf_iterator<char>(f1)), {});
    const std::string s2((std::istreambuf_iterator<char>(f2)), {});
    CHECK(s1 == s2);
  }
  std::filesystem::remove_all(dir);
  std::filesystem::remove_all(dir2);
}

TEST_CASE("transcript import rejects tampered files") {
  Rng rng(derive_seed(36, "regret-test"));
  const TreeFormProblem p = TreeFormProblem::simplex(2);
  const Transcript tr = testing::random_transcript(p, 3, rng);
  const std::filesystem::path dir = fresh_dir("transcript_tamper");
  regret::export_transcript(tr, dir, "run");

  SUBCASE("missing file") {
    std::filesystem::remove(dir / "run.utils.csv");
    CHECK_THROWS_AS(regret::import_transcript(p, dir, "run"), ValidationError);
  }
  SUBCASE("broken probability column") {
    // Rewrite the probs file with a distribution that cannot sum to one.
    std::ofstream out(dir / "run.probs.csv", std::ios::trunc);
    out << "t,strategy,probability\n1,0,0.25\n";
    out.close();
    CHECK_THROWS_AS(regret::import_transcript(p, dir, "run"), ValidationError);
  }
  SUBCASE("wrong header") {
    std::ofstream out(dir / "run.strategies.csv", std::ios::trunc);
    out << "strategy,bits\n0,10\n";
    out.close();
    CHECK_THROWS_AS(regret::import_transcript(p, dir, "run"), ValidationError);
  }
  std::filesystem::remove_all(dir);
}

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "swapreg/csv.hpp"
#include "swapreg/errors.hpp"
#include "swapreg/lowerbound.hpp"
#include "swapreg/rng.hpp"
#include "swapreg/treeform.hpp"

using namespace swapreg;
using lowerbound::EmbeddingInstance;
using lowerbound::GroupedActions;
using lowerbound::SignVector;
using treeform::PureStrategy;

namespace {

SignVector signs(std::vector<int> s) { return SignVector::from_signs(s); }

}  // namespace

TEST_CASE("grouped actions index groups first and the reserved action last") {
  const GroupedActions actions({2, 3});
  CHECK(actions.total() == 6);
  CHECK(actions.groups() == 2);
  CHECK(actions.reserved() == 5);
  CHECK(actions.is_reserved(5));
  CHECK_FALSE(actions.is_reserved(4));
  CHECK(actions.action(0, 0) == 0);
  CHECK(actions.action(0, 1) == 1);
  CHECK(actions.action(1, 0) == 2);
  CHECK(actions.action(1, 2) == 4);
  const GroupedActions::GroupRank gr = actions.locate(3);
  CHECK(gr.group == 1);
  CHECK(gr.rank == 1);
  CHECK_THROWS_AS(actions.locate(5), DomainError);
  CHECK_THROWS_AS(GroupedActions({}), ValidationError);
  CHECK_THROWS_AS(GroupedActions({2, 0}), ValidationError);
}

TEST_CASE("default advance probability") {
  const GroupedActions actions({5, 5, 5});
  CHECK(lowerbound::default_advance_prob(actions, 200) == 0.075);
  CHECK(lowerbound::default_advance_prob(actions, 10) == 1.0);
  const GroupedActions uneven({2, 8});
  CHECK(lowerbound::default_advance_prob(uneven, 100) == 0.04);
}

TEST_CASE("staircase sequences are reproducible and structurally clean") {
  const GroupedActions actions({3, 4, 2});
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const std::vector<std::int32_t> seq =
        lowerbound::staircase_sequence(actions, 300, 0.1, seed);
    REQUIRE(seq.size() == 300);
    const lowerbound::SequenceScan scan = lowerbound::scan_sequence(actions, seq);
    CHECK(scan.order_violations == 0);
    CHECK(scan.reserved_plays == 0);
    CHECK(seq == lowerbound::staircase_sequence(actions, 300, 0.1, seed));
  }
}

TEST_CASE("staircase with certain advance walks up and saturates") {
  const GroupedActions actions({3});
  const std::vector<std::int32_t> seq =
      lowerbound::staircase_sequence(actions, 6, 1.0, 7);
  CHECK(seq == std::vector<std::int32_t>{0, 1, 2, 2, 2, 2});
}

TEST_CASE("staircase with zero advance repeats the first rank") {
  const GroupedActions actions({4});
  const std::vector<std::int32_t> seq =
      lowerbound::staircase_sequence(actions, 5, 0.0, 7);
  CHECK(seq == std::vector<std::int32_t>(5, 0));
}

TEST_CASE("sequence scan flags rank regressions and reserved plays") {
  const GroupedActions actions({3});
  const std::vector<std::int32_t> bad = {2, 1, 0};
  CHECK(lowerbound::scan_sequence(actions, bad).order_violations == 2);
  const std::vector<std::int32_t> reserved = {0, 3, 3};
  CHECK(lowerbound::scan_sequence(actions, reserved).reserved_plays == 2);
}

TEST_CASE("sign vectors compute integer-exact inner products") {
  const SignVector a = signs({1, 1, -1, 1});
  const SignVector b = signs({1, -1, -1, -1});
  CHECK(a.n() == 4);
  CHECK(a.agreements(b) == 2);
  CHECK(a.dot(b) == 0.0);
  CHECK(a.dot(a) == 1.0);
  CHECK(b.dot(b) == 1.0);
  const SignVector c = signs({1, 1, -1, -1});  // 3 of 4 entries agree with a
  CHECK(a.dot(c) == 0.5);
  CHECK(a.entry(0) == 0.5);  // +1/sqrt(4)
  CHECK(a.entry(2) == -0.5);
}

TEST_CASE("sign vector dot equals the brute-force entry sum") {
  Rng rng(derive_seed(51, "lowerbound-test"));
  for (int rep = 0; rep < 30; ++rep) {
    const std::int32_t n = 1 + static_cast<std::int32_t>(rng.next_below(130));
    const SignVector a = SignVector::random(n, rng);
    const SignVector b = SignVector::random(n, rng);
    double brute = 0.0;
    for (std::int32_t j = 0; j < n; ++j) brute += a.entry(j) * b.entry(j);
    CHECK(std::abs(a.dot(b) - brute) <= 1e-12);
    CHECK(a.dot(b) == b.dot(a));
  }
}

TEST_CASE("sign vector ctor rejects dirty padding bits") {
  CHECK_THROWS_AS(SignVector(4, {0xF0ull}), ValidationError);
  CHECK_NOTHROW(SignVector(4, {0x0Full}));
  CHECK_THROWS_AS(SignVector(65, {1ull}), DimensionError);
}

TEST_CASE("random sign vector dots concentrate around zero") {
  Rng rng(derive_seed(52, "lowerbound-test"));
  const std::int32_t n = 64;
  double mean = 0.0;
  const int reps = 2000;
  for (int i = 0; i < reps; ++i) {
    mean += SignVector::random(n, rng).dot(SignVector::random(n, rng));
  }
  mean /= reps;
  CHECK(std::abs(mean) <= 0.02);
}

TEST_CASE("parameter selection closed forms") {
  const lowerbound::LowerBoundParameters p =
      lowerbound::select_parameters(1.0, 1, 4);
  CHECK(p.eps == 0.25);
  CHECK(p.n == 185);
  CHECK(p.delta == doctest::Approx(0.04935771081648415).epsilon(1e-12));
  CHECK(5.0 * p.delta <= p.eps);

  const lowerbound::LowerBoundParameters q =
      lowerbound::select_parameters(1.0, 1, 32);
  CHECK(q.n == 318);
  CHECK(q.delta == doctest::Approx(0.04948784503544334).epsilon(1e-12));

  CHECK(lowerbound::select_parameters(2.0, 1, 4).eps == 0.125);

  CHECK_THROWS_AS(lowerbound::select_parameters(0.0, 1, 4), ValidationError);
  CHECK_THROWS_AS(lowerbound::select_parameters(1.0, 0, 4), ValidationError);
  CHECK_THROWS_AS(lowerbound::select_parameters(1.0, 1, 1), ValidationError);
}

TEST_CASE("embedding samples are reproducible and live on the right rows") {
  const GroupedActions actions({2, 3});
  const EmbeddingInstance emb = EmbeddingInstance::sample(actions, 16, 99);
  const EmbeddingInstance again = EmbeddingInstance::sample(actions, 16, 99);
  CHECK(emb.problem().terminal_count() == 2 * 2 * 16);
  for (std::int32_t a = 0; a < actions.total(); ++a) {
    CHECK(emb.codeword(a) == again.codeword(a));
    const std::int32_t row = emb.row_of(a);
    if (actions.is_reserved(a)) {
      CHECK(row == 0);
    } else {
      CHECK(row == actions.locate(a).group);
    }
    const PureStrategy x = emb.strategy_of(a);
    CHECK(treeform::validate_realization(emb.problem(), x));
    const lowerbound::ScaledStrategy s = emb.decompose(x);
    CHECK(s.row == row);
    CHECK(s.signs == emb.codeword(a));
    CHECK(emb.compose(s) == x);
  }
}

TEST_CASE("scaled dots vanish across rows and are sign dots within a row") {
  const GroupedActions actions({2, 2});
  const EmbeddingInstance emb = EmbeddingInstance::sample(actions, 32, 5);
  const lowerbound::ScaledStrategy on_row0 = emb.scaled_of(0);
  // Action 2 lives on row 1: orthogonal by construction, exactly.
  CHECK(emb.scaled_dot(on_row0, 2) == 0.0);
  CHECK(emb.scaled_dot(on_row0, 1) == emb.codeword(0).dot(emb.codeword(1)));
  CHECK(emb.scaled_dot(on_row0, 0) == 1.0);
}

TEST_CASE("transported utilities preserve inner products") {
  const GroupedActions actions({2, 2});
  const EmbeddingInstance emb = EmbeddingInstance::sample(actions, 24, 13);
  Rng rng(derive_seed(53, "lowerbound-test"));
  for (std::int32_t a = 0; a < actions.total() - 1; ++a) {
    const treeform::UtilityVector u = emb.utility_of(a);
    // Entries are +-1/n on the action's row and zero elsewhere.
    for (double v : u.values()) {
      CHECK((v == 0.0 || std::abs(v) == 1.0 / 24.0));
    }
    for (int rep = 0; rep < 8; ++rep) {
      const std::int32_t row = static_cast<std::int32_t>(rng.next_below(2));
      const lowerbound::ScaledStrategy s{row, SignVector::random(24, rng)};
      const PureStrategy x = emb.compose(s);
      double lin = 0.0;
      for (std::int32_t z : x.ones()) lin += u[z];
      CHECK(std::abs(lin - emb.scaled_dot(s, a)) <= 1e-12);
    }
  }
}

TEST_CASE("concentration check includes the boundary and skips the reserved "
          "image") {
  const GroupedActions actions({2});
  const SignVector a = signs({1, 1, 1, 1});
  const SignVector b = signs({1, 1, 1, -1});  // dot(a, b) = 0.5
  SUBCASE("boundary dot counts as holding") {
    const EmbeddingInstance emb(actions, 4, {a, b, a});
    const lowerbound::ConcentrationReport rep =
        lowerbound::check_concentration(emb, 0.5);
    CHECK(rep.holds);
    CHECK(rep.pairs_checked == 1);
    CHECK(rep.violations.empty());
  }
  SUBCASE("a correlated pair is caught") {
    const EmbeddingInstance emb(actions, 4, {a, a, b});
    const lowerbound::ConcentrationReport rep =
        lowerbound::check_concentration(emb, 0.5);
    CHECK_FALSE(rep.holds);
    REQUIRE(rep.violations.size() == 1);
    CHECK(rep.violations[0].first == 0);
    CHECK(rep.violations[0].second == 1);
  }
  SUBCASE("the reserved image never participates") {
    // Reserved codeword identical to action 0: still fine.
    const EmbeddingInstance emb(actions, 4, {a, b, a});
    CHECK(lowerbound::check_concentration(emb, 0.5).holds);
  }
}

TEST_CASE("embedded utilities follow the sequence and reject reserved plays") {
  const GroupedActions actions({2});
  const EmbeddingInstance emb = EmbeddingInstance::sample(actions, 8, 3);
  const std::vector<std::int32_t> seq = {0, 1, 0};
  const std::vector<treeform::UtilityVector> us =
      lowerbound::embedded_utilities(emb, seq);
  REQUIRE(us.size() == 3);
  for (std::size_t t = 0; t < seq.size(); ++t) {
    const treeform::UtilityVector expect = emb.utility_of(seq[t]);
    for (std::int32_t z = 0; z < expect.size(); ++z) {
      CHECK(us[t][z] == expect[z]);
    }
  }
  const std::vector<std::int32_t> with_reserved = {0, 2};
  CHECK_THROWS_AS(lowerbound::embedded_utilities(emb, with_reserved),
                  ValidationError);
}

TEST_CASE("embedding export lists codewords with the reserved row last") {
  const GroupedActions actions({1, 2});
  const EmbeddingInstance emb = EmbeddingInstance::sample(actions, 6, 17);
  const std::filesystem::path path =
      std::filesystem::temp_directory_path() / "swapreg_embedding_test.csv";
  lowerbound::export_embedding(emb, path);
  const std::vector<std::vector<std::string>> rows =
      csvio::read_rows(path, {"i", "j", "pattern"});
  REQUIRE(rows.size() == 4);
  CHECK(rows[0][0] == "1");
  CHECK(rows[0][1] == "1");
  CHECK(rows[1][0] == "2");
  CHECK(rows[1][1] == "1");
  CHECK(rows[2][1] == "2");
  CHECK(rows[3][0] == "0");
  CHECK(rows[3][1] == "0");
  for (const std::vector<std::string>& row : rows) {
    CHECK(row[2].size() == 6);
    for (char c : row[2]) CHECK((c == '0' || c == '1'));
  }
  std::filesystem::remove(path);
}

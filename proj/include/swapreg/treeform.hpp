#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "swapreg/rng.hpp"

namespace swapreg::treeform {

/// A tree-form decision problem: a rooted tree whose internal nodes are
/// either decision points (the agent picks exactly one child) or observation
/// points (the environment reveals a signal; the agent must be ready for all
/// children), and whose leaves are terminals. A pure strategy commits to one
/// child at every decision point it can reach and is represented in
/// realization form: a 0/1 vector over terminals with x[z] = 1 iff terminal
/// z is reached for some sequence of observations.

using NodeId = std::int32_t;

struct DecisionPoint {
  std::vector<NodeId> children;
};

struct ObservationPoint {
  std::vector<NodeId> children;
};

struct Terminal {
  std::int32_t index;  // slot in realization/utility vectors, 0-based
};

using Node = std::variant<DecisionPoint, ObservationPoint, Terminal>;

/// Hard ceiling for enumerate_pure_strategies when the caller does not pass
/// a tighter one. Guards against accidentally materializing 3 * 2^64 vectors.
inline constexpr std::uint64_t kDefaultEnumerationCap = 1ull << 20;

class TreeFormProblem {
 public:
  /// Validates on construction: every node reachable from the root exactly
  /// once (single parent, no cycles, no orphans), internal nodes have at
  /// least one child, and terminal indices are exactly {0, ..., m-1} with no
  /// repeats. Throws ValidationError otherwise.
  TreeFormProblem(std::vector<Node> nodes, NodeId root);

  /// One decision point with `actions` terminal children: the probability
  /// simplex over `actions` atoms.
  static TreeFormProblem simplex(std::int32_t actions);

  /// The two-level family used by the embedding construction: a root
  /// decision with d actions, each followed by an observation with n
  /// signals, each followed by a binary decision between a "+" and a "-"
  /// terminal. Terminals are indexed row-major: action i, then signal j,
  /// then sign, i.e. index = (i*n + j)*2 + s with s=0 for "+".
  static TreeFormProblem two_level(std::int32_t d, std::int32_t n);

  const Node& node(NodeId id) const { return nodes_[id]; }
  NodeId root() const { return root_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::int32_t terminal_count() const { return terminal_count_; }

  /// Number of realization-distinct pure strategies, saturating at `cap`
  /// (returns `cap` whenever the true count is >= cap, so the caller can
  /// test count < cap without overflow).
  std::uint64_t strategy_count(std::uint64_t cap = ~std::uint64_t{0}) const;

 private:
  std::vector<Node> nodes_;
  NodeId root_ = 0;
  std::int32_t terminal_count_ = 0;
};

/// A pure strategy in realization form. Immutable after construction;
/// entries must be 0 or 1. Terminal indices with value 1 are cached in
/// ascending order, and every inner product in the library iterates them in
/// that order, which is what makes "equal exactly" claims between different
/// code paths meaningful.
class PureStrategy {
 public:
  explicit PureStrategy(std::vector<std::uint8_t> realization);

  std::span<const std::uint8_t> realization() const { return realization_; }
  std::span<const std::int32_t> ones() const { return ones_; }
  std::int32_t size() const {
    return static_cast<std::int32_t>(realization_.size());
  }

  friend bool operator==(const PureStrategy& a, const PureStrategy& b) {
    return a.realization_ == b.realization_;
  }
  friend std::strong_ordering operator<=>(const PureStrategy& a,
                                          const PureStrategy& b) {
    return a.realization_ <=> b.realization_;
  }

 private:
  std::vector<std::uint8_t> realization_;
  std::vector<std::int32_t> ones_;
};

struct PureStrategyHash {
  std::size_t operator()(const PureStrategy& s) const;
};

/// A utility vector over terminals, entries in [-1, 1] (validated with a
/// 1e-9 tolerance for accumulated rounding in convex combinations).
class UtilityVector {
 public:
  explicit UtilityVector(std::vector<double> values);

  std::span<const double> values() const { return values_; }
  double operator[](std::int32_t z) const { return values_[z]; }
  std::int32_t size() const { return static_cast<std::int32_t>(values_.size()); }

 private:
  std::vector<double> values_;
};

/// A finitely supported distribution over pure strategies. Duplicate
/// entries are merged, zero-weight entries dropped, and weights must be
/// nonnegative and sum to 1 within 1e-9. Support order is insertion order
/// after merging, which every consumer iterates deterministically.
class MixedStrategy {
 public:
  explicit MixedStrategy(
      std::vector<std::pair<PureStrategy, double>> support);

  static MixedStrategy point_mass(PureStrategy x);
  static MixedStrategy uniform(std::span<const PureStrategy> xs);

  const std::vector<std::pair<PureStrategy, double>>& support() const {
    return support_;
  }

 private:
  std::vector<std::pair<PureStrategy, double>> support_;
};

/// True iff x is a valid realization vector for the problem: below every
/// reachable decision point exactly one child subtree carries mass, below
/// every reachable observation point all children do, unreachable subtrees
/// are all-zero, and the reached terminals are exactly the entries set to 1.
/// Throws DimensionError if the vector length is not terminal_count().
bool validate_realization(const TreeFormProblem& problem,
                          const PureStrategy& x);

/// All pure strategies in canonical order: decision children expand in
/// child order, observation branches combine lexicographically with the
/// first child varying slowest. Throws CapacityError if the count exceeds
/// `cap` (checked before materializing anything).
std::vector<PureStrategy> enumerate_pure_strategies(
    const TreeFormProblem& problem,
    std::uint64_t cap = kDefaultEnumerationCap);

struct BestResponse {
  PureStrategy strategy;
  double value;
};

/// argmax over pure strategies of <gain, x>, by bottom-up dynamic
/// programming (max at decision points, sum at observation points). Ties
/// break toward the lowest-index child, which matches the first argmax in
/// enumeration order. The reported value is recomputed as the inner product
/// of `gain` with the winning strategy's terminals in ascending index
/// order, the same arithmetic an enumeration-based check uses. `gain` is an
/// arbitrary vector over terminals (not range-restricted; callers pass
/// unnormalized sums of utilities).
BestResponse best_response(const TreeFormProblem& problem,
                           std::span<const double> gain);

/// sum_x pi(x) * <u, x>.
double expected_utility(const MixedStrategy& pi, const UtilityVector& u);

/// One pure strategy uniform over the full strategy set, drawn without
/// enumerating it (log-space counting DP; decision children are picked with
/// probability proportional to their subtree counts). Exact up to double
/// rounding in the counts, which is far below any tolerance we test.
PureStrategy sample_uniform_strategy(const TreeFormProblem& problem, Rng& rng);

}  // namespace swapreg::treeform

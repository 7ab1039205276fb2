#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "swapreg/rng.hpp"
#include "swapreg/treeform.hpp"

namespace swapreg::lowerbound {

using treeform::PureStrategy;
using treeform::TreeFormProblem;
using treeform::UtilityVector;

/// A normal-form action space of M actions arranged as d ordered groups of
/// sizes M_1..M_d plus one reserved action. Action ids are dense: group 0
/// first, the reserved action last (index M-1). Putting the reserved action
/// last matters downstream: empirical argmaxes tie-break toward lower ids,
/// so no deviation ever maps onto the reserved action (it is never played,
/// its column of the hindsight table is all zero).
class GroupedActions {
 public:
  explicit GroupedActions(std::vector<std::int32_t> group_sizes);

  std::int32_t total() const { return total_; }  // M, including reserved
  std::int32_t groups() const {
    return static_cast<std::int32_t>(sizes_.size());
  }
  std::int32_t group_size(std::int32_t group) const { return sizes_[group]; }
  std::int32_t reserved() const { return total_ - 1; }
  bool is_reserved(std::int32_t action) const {
    return action == reserved();
  }

  /// Action id for 0-based (group, rank within group).
  std::int32_t action(std::int32_t group, std::int32_t rank) const;

  struct GroupRank {
    std::int32_t group;
    std::int32_t rank;  // 0-based within the group
  };
  /// Inverse of action(); throws DomainError for the reserved action.
  GroupRank locate(std::int32_t action) const;

 private:
  std::vector<std::int32_t> sizes_;
  std::vector<std::int32_t> offsets_;
  std::int32_t total_;
};

/// Default advance probability for the staircase sequence:
/// min(1, d * min_i M_i / T), the conservative rate at which every group
/// still finishes its staircase with slack.
double default_advance_prob(const GroupedActions& actions, std::int64_t T);

/// Oblivious adversary sequence of non-reserved action ids, length T. Each
/// group keeps a counter starting at 0; each round one group is drawn
/// uniformly, its counter advances with probability advance_prob (capped at
/// the group size), and the group's action at rank max(counter, 1) is
/// emitted. Guarantees by construction: the reserved action never appears,
/// and within each group ranks are nondecreasing over time.
std::vector<std::int32_t> staircase_sequence(const GroupedActions& actions,
                                             std::int64_t T,
                                             double advance_prob,
                                             std::uint64_t seed);

struct SequenceScan {
  std::int64_t order_violations;  // same-group rank decreases
  std::int64_t reserved_plays;
};

/// Independent checker for the two structural properties above; the
/// campaigns run it on every generated sequence.
SequenceScan scan_sequence(const GroupedActions& actions,
                           std::span<const std::int32_t> seq);

/// A vector in {-1/sqrt(n), +1/sqrt(n)}^n stored as packed sign bits
/// (bit set = positive). All inner products between sign vectors are
/// computed in integer arithmetic, (n - 2 * hamming) / n, with one float
/// division at the end; two code paths comparing such dots against the
/// same threshold therefore agree exactly.
class SignVector {
 public:
  SignVector(std::int32_t n, std::vector<std::uint64_t> bits);
  static SignVector random(std::int32_t n, Rng& rng);
  /// From explicit +1/-1 entries; test helper.
  static SignVector from_signs(std::span<const int> signs);

  std::int32_t n() const { return n_; }
  bool positive(std::int32_t j) const {
    return (bits_[j >> 6] >> (j & 63)) & 1;
  }
  /// Signed entry value, +1/sqrt(n) or -1/sqrt(n).
  double entry(std::int32_t j) const;

  std::int32_t agreements(const SignVector& other) const;
  double dot(const SignVector& other) const;

  std::span<const std::uint64_t> words() const { return bits_; }
  friend bool operator==(const SignVector& a, const SignVector& b) = default;

 private:
  std::int32_t n_;
  std::vector<std::uint64_t> bits_;
};

/// A strategy of the two-level (d, n) problem in scaled form: the row it
/// commits to and its sign pattern over that row's n signals.
struct ScaledStrategy {
  std::int32_t row;
  SignVector signs;
};

/// Random embedding of a grouped action space into the two-level (d, n)
/// problem with d = number of groups: every non-reserved action gets an
/// independent uniform sign codeword on its group's row, and the reserved
/// action gets one sampled the same way on row 0 (kept out of the
/// concentration event). The embedding fixes, in both directions, the
/// linear identification between realization vectors and scaled form, and
/// transports codewords to utility vectors adjointly so inner products are
/// preserved.
class EmbeddingInstance {
 public:
  /// Explicit construction; `codewords` indexed by action id, reserved
  /// image last (so codewords.size() == M). Validates rows and widths.
  EmbeddingInstance(GroupedActions actions, std::int32_t n,
                    std::vector<SignVector> codewords);

  /// Uniform random codewords from the given stream, in action-id order,
  /// reserved image last.
  static EmbeddingInstance sample(const GroupedActions& actions,
                                  std::int32_t n, std::uint64_t seed);

  const GroupedActions& actions() const { return actions_; }
  std::int32_t n() const { return n_; }
  std::int32_t d() const { return actions_.groups(); }
  const TreeFormProblem& problem() const { return problem_; }

  /// Sign pattern of any action, reserved included.
  const SignVector& codeword(std::int32_t action) const;
  /// Row the action's image lives on (its group; row 0 for reserved).
  std::int32_t row_of(std::int32_t action) const;

  /// The action's image as a pure strategy (realization form).
  PureStrategy strategy_of(std::int32_t action) const;
  ScaledStrategy scaled_of(std::int32_t action) const;

  /// Scaled form of an arbitrary pure strategy of the problem; throws
  /// ValidationError if x is not a valid realization.
  ScaledStrategy decompose(const PureStrategy& x) const;
  /// Realization form of a scaled strategy (inverse of decompose).
  PureStrategy compose(const ScaledStrategy& s) const;

  /// <x, psi-image of action> in scaled form: exactly 0 when x commits to a
  /// different row, else the integer-exact sign dot.
  double scaled_dot(const ScaledStrategy& x, std::int32_t action) const;

  /// Utility vector whose inner product with any pure strategy x equals
  /// (up to float summation of +-1/n terms) the scaled dot between x and
  /// the action's codeword. Entries are +-1/n on the action's row, 0 off it.
  UtilityVector utility_of(std::int32_t action) const;

 private:
  GroupedActions actions_;
  std::int32_t n_;
  std::vector<SignVector> codewords_;  // by action id, reserved last
  TreeFormProblem problem_;
};

struct ConcentrationReport {
  bool holds;
  std::int64_t pairs_checked;
  /// Offending (action, action) pairs, both non-reserved.
  std::vector<std::pair<std::int32_t, std::int32_t>> violations;
};

/// Checks |<codeword_a, codeword_b>| <= eps for every unordered pair of
/// distinct non-reserved actions (the event the union bound
/// delta = M^2 exp(-n eps^2 / 2) controls). The comparison is on the
/// integer-exact dots; the boundary |dot| == eps counts as holding.
ConcentrationReport check_concentration(const EmbeddingInstance& emb,
                                        double eps);

/// Per-round utility vectors for an adversary action sequence. Throws
/// ValidationError if the sequence contains the reserved action (the
/// adversary's contract says it never plays it).
std::vector<UtilityVector> embedded_utilities(const EmbeddingInstance& emb,
                                              std::span<const std::int32_t> seq);

struct LowerBoundParameters {
  double C;
  std::int32_t d;
  std::int32_t M;
  double eps;    // 1 / (4 C d^6)
  std::int64_t n;  // ceil(2 ln(20 C M^2 d^6) / eps^2)
  double delta;  // M^2 exp(-n eps^2 / 2); always satisfies 5 delta <= eps
};

/// The construction's own parameter choices as closed forms of (C, d, M).
/// Throws ValidationError on nonpositive C, d < 1, or M < 2.
LowerBoundParameters select_parameters(double C, std::int32_t d,
                                       std::int32_t M);

/// CSV rows (i, j, pattern): 1-based group and rank for real codewords,
/// (0, 0) for the reserved image. `pattern` is the sign bitstring, '1' for
/// +1/sqrt(n), most significant position = signal 1.
void export_embedding(const EmbeddingInstance& emb,
                      const std::filesystem::path& path);

}  // namespace swapreg::lowerbound

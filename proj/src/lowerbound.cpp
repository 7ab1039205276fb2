#include "swapreg/lowerbound.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "swapreg/csv.hpp"
#include "swapreg/errors.hpp"
#include "swapreg/kernels.hpp"

namespace swapreg::lowerbound {

GroupedActions::GroupedActions(std::vector<std::int32_t> group_sizes)
    : sizes_(std::move(group_sizes)) {
  if (sizes_.empty())
    throw ValidationError("action space needs at least one group");
  std::int64_t total = 0;
  for (std::int32_t s : sizes_) {
    if (s < 1) throw ValidationError("group sizes must be >= 1");
    offsets_.push_back(static_cast<std::int32_t>(total));
    total += s;
  }
  total += 1;  // reserved action
  if (total > (1 << 20))
    throw CapacityError("action space of " + std::to_string(total) +
                        " actions exceeds 2^20");
  total_ = static_cast<std::int32_t>(total);
}

std::int32_t GroupedActions::action(std::int32_t group,
                                    std::int32_t rank) const {
  if (group < 0 || group >= groups())
    throw DomainError("group " + std::to_string(group) + " out of range");
  if (rank < 0 || rank >= sizes_[group])
    throw DomainError("rank " + std::to_string(rank) + " out of range in group " +
                      std::to_string(group));
  return offsets_[group] + rank;
}

GroupedActions::GroupRank GroupedActions::locate(std::int32_t a) const {
  if (a < 0 || a >= total_ || is_reserved(a))
    throw DomainError("action " + std::to_string(a) +
                      " has no (group, rank) decomposition");
  std::int32_t group = 0;
  while (group + 1 < groups() && offsets_[group + 1] <= a) ++group;
  return {group, a - offsets_[group]};
}

double default_advance_prob(const GroupedActions& actions, std::int64_t T) {
  std::int32_t min_size = actions.group_size(0);
  for (std::int32_t g = 1; g < actions.groups(); ++g)
    min_size = std::min(min_size, actions.group_size(g));
  const double p = static_cast<double>(actions.groups()) *
                   static_cast<double>(min_size) / static_cast<double>(T);
  return std::min(1.0, p);
}

std::vector<std::int32_t> staircase_sequence(const GroupedActions& actions,
                                             std::int64_t T,
                                             double advance_prob,
                                             std::uint64_t seed) {
  if (T < 1) throw ValidationError("sequence length must be >= 1");
  if (!(advance_prob >= 0.0 && advance_prob <= 1.0))
    throw ValidationError("advance probability must be in [0, 1]");
  Rng rng(seed);
  std::vector<std::int32_t> counter(actions.groups(), 0);
  std::vector<std::int32_t> seq;
  seq.reserve(T);
  for (std::int64_t t = 0; t < T; ++t) {
    const auto g = static_cast<std::int32_t>(
        rng.next_below(static_cast<std::uint64_t>(actions.groups())));
    if (rng.next_bernoulli(advance_prob))
      counter[g] = std::min(counter[g] + 1, actions.group_size(g));
    seq.push_back(actions.action(g, std::max(counter[g], 1) - 1));
  }
  return seq;
}

SequenceScan scan_sequence(const GroupedActions& actions,
                           std::span<const std::int32_t> seq) {
  SequenceScan scan{0, 0};
  std::vector<std::int32_t> high_rank(actions.groups(), -1);
  for (std::int32_t a : seq) {
    if (a < 0 || a >= actions.total())
      throw DomainError("sequence action " + std::to_string(a) +
                        " out of range");
    if (actions.is_reserved(a)) {
      ++scan.reserved_plays;
      continue;
    }
    const auto [group, rank] = actions.locate(a);
    if (rank < high_rank[group]) ++scan.order_violations;
    high_rank[group] = std::max(high_rank[group], rank);
  }
  return scan;
}

SignVector::SignVector(std::int32_t n, std::vector<std::uint64_t> bits)
    : n_(n), bits_(std::move(bits)) {
  if (n_ < 1) throw ValidationError("sign vector needs n >= 1");
  const auto words = static_cast<std::size_t>((n_ + 63) / 64);
  if (bits_.size() != words)
    throw DimensionError("sign vector needs " + std::to_string(words) +
                         " words, got " + std::to_string(bits_.size()));
  // Padding bits must be zero so Hamming distances ignore them.
  if (n_ % 64 != 0) {
    const std::uint64_t mask = (~std::uint64_t{0}) << (n_ % 64);
    if (bits_.back() & mask)
      throw ValidationError("sign vector has nonzero padding bits");
  }
}

SignVector SignVector::random(std::int32_t n, Rng& rng) {
  if (n < 1) throw ValidationError("sign vector needs n >= 1");
  std::vector<std::uint64_t> bits((n + 63) / 64);
  for (std::uint64_t& w : bits) w = rng.next_u64();
  if (n % 64 != 0) bits.back() &= ~((~std::uint64_t{0}) << (n % 64));
  return SignVector(n, std::move(bits));
}

SignVector SignVector::from_signs(std::span<const int> signs) {
  const auto n = static_cast<std::int32_t>(signs.size());
  if (n < 1) throw ValidationError("sign vector needs n >= 1");
  std::vector<std::uint64_t> bits((n + 63) / 64, 0);
  for (std::int32_t j = 0; j < n; ++j) {
    if (signs[j] == 1)
      bits[j >> 6] |= std::uint64_t{1} << (j & 63);
    else if (signs[j] != -1)
      throw ValidationError("sign entries must be +1 or -1");
  }
  return SignVector(n, std::move(bits));
}

double SignVector::entry(std::int32_t j) const {
  if (j < 0 || j >= n_)
    throw DomainError("sign index " + std::to_string(j) + " out of range");
  const double mag = 1.0 / std::sqrt(static_cast<double>(n_));
  return positive(j) ? mag : -mag;
}

std::int32_t SignVector::agreements(const SignVector& other) const {
  if (n_ != other.n_)
    throw DimensionError("sign vectors of widths " + std::to_string(n_) +
                         " and " + std::to_string(other.n_));
  const std::int64_t mismatches = kernels::xor_popcount(bits_, other.bits_);
  return n_ - static_cast<std::int32_t>(mismatches);
}

double SignVector::dot(const SignVector& other) const {
  const std::int32_t agree = agreements(other);
  return static_cast<double>(2 * agree - n_) / static_cast<double>(n_);
}

EmbeddingInstance::EmbeddingInstance(GroupedActions actions, std::int32_t n,
                                     std::vector<SignVector> codewords)
    : actions_(std::move(actions)),
      n_(n),
      codewords_(std::move(codewords)),
      problem_(TreeFormProblem::two_level(actions_.groups(), n)) {
  if (static_cast<std::int32_t>(codewords_.size()) != actions_.total())
    throw DimensionError("need one codeword per action (reserved image last)");
  for (const SignVector& c : codewords_) {
    if (c.n() != n_)
      throw DimensionError("codeword width " + std::to_string(c.n()) +
                           " != n " + std::to_string(n_));
  }
}

EmbeddingInstance EmbeddingInstance::sample(const GroupedActions& actions,
                                            std::int32_t n,
                                            std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SignVector> codewords;
  codewords.reserve(actions.total());
  for (std::int32_t a = 0; a < actions.total(); ++a)
    codewords.push_back(SignVector::random(n, rng));
  return EmbeddingInstance(actions, n, std::move(codewords));
}

const SignVector& EmbeddingInstance::codeword(std::int32_t action) const {
  if (action < 0 || action >= actions_.total())
    throw DomainError("action " + std::to_string(action) + " out of range");
  return codewords_[action];
}

std::int32_t EmbeddingInstance::row_of(std::int32_t action) const {
  if (actions_.is_reserved(action)) return 0;
  return actions_.locate(action).group;
}

PureStrategy EmbeddingInstance::strategy_of(std::int32_t action) const {
  return compose({row_of(action), codeword(action)});
}

ScaledStrategy EmbeddingInstance::scaled_of(std::int32_t action) const {
  return {row_of(action), codeword(action)};
}

PureStrategy EmbeddingInstance::compose(const ScaledStrategy& s) const {
  if (s.row < 0 || s.row >= d())
    throw DomainError("row " + std::to_string(s.row) + " out of range");
  if (s.signs.n() != n_)
    throw DimensionError("scaled strategy width mismatch");
  std::vector<std::uint8_t> realization(problem_.terminal_count(), 0);
  for (std::int32_t j = 0; j < n_; ++j) {
    const std::int32_t base = (s.row * n_ + j) * 2;
    realization[base + (s.signs.positive(j) ? 0 : 1)] = 1;
  }
  return PureStrategy(std::move(realization));
}

ScaledStrategy EmbeddingInstance::decompose(const PureStrategy& x) const {
  if (x.size() != problem_.terminal_count())
    throw DimensionError("strategy length " + std::to_string(x.size()) +
                         " != terminal count " +
                         std::to_string(problem_.terminal_count()));
  if (x.ones().size() != static_cast<std::size_t>(n_))
    throw ValidationError("not a two-level strategy: expected " +
                          std::to_string(n_) + " terminals, got " +
                          std::to_string(x.ones().size()));
  const std::int32_t row = x.ones()[0] / (2 * n_);
  std::vector<std::uint64_t> bits((n_ + 63) / 64, 0);
  for (std::int32_t j = 0; j < n_; ++j) {
    const std::int32_t base = (row * n_ + j) * 2;
    const bool plus = x.realization()[base] == 1;
    const bool minus = x.realization()[base + 1] == 1;
    if (plus == minus)
      throw ValidationError(
          "not a two-level strategy: signal " + std::to_string(j + 1) +
          " does not pick exactly one sign on row " + std::to_string(row + 1));
    if (plus) bits[j >> 6] |= std::uint64_t{1} << (j & 63);
  }
  return {row, SignVector(n_, std::move(bits))};
}

double EmbeddingInstance::scaled_dot(const ScaledStrategy& x,
                                     std::int32_t action) const {
  if (x.row != row_of(action)) return 0.0;
  return x.signs.dot(codeword(action));
}

UtilityVector EmbeddingInstance::utility_of(std::int32_t action) const {
  const SignVector& c = codeword(action);
  const std::int32_t row = row_of(action);
  std::vector<double> u(problem_.terminal_count(), 0.0);
  // Entry 1/n, not (1/sqrt n)^2, so the value is exactly representable
  // whenever n is a power of two and correctly rounded otherwise.
  const double mag = 1.0 / static_cast<double>(n_);
  for (std::int32_t j = 0; j < n_; ++j) {
    const std::int32_t base = (row * n_ + j) * 2;
    const double v = c.positive(j) ? mag : -mag;
    u[base] = v;
    u[base + 1] = -v;
  }
  return UtilityVector(std::move(u));
}

ConcentrationReport check_concentration(const EmbeddingInstance& emb,
                                        double eps) {
  if (!(eps > 0.0 && eps < 1.0))
    throw ValidationError("eps must be in (0, 1)");
  ConcentrationReport report{true, 0, {}};
  const std::int32_t real = emb.actions().total() - 1;  // reserved excluded
  for (std::int32_t a = 0; a < real; ++a) {
    for (std::int32_t b = a + 1; b < real; ++b) {
      ++report.pairs_checked;
      if (std::abs(emb.codeword(a).dot(emb.codeword(b))) > eps) {
        report.holds = false;
        report.violations.emplace_back(a, b);
      }
    }
  }
  return report;
}

std::vector<UtilityVector> embedded_utilities(
    const EmbeddingInstance& emb, std::span<const std::int32_t> seq) {
  std::vector<UtilityVector> out;
  out.reserve(seq.size());
  for (std::size_t t = 0; t < seq.size(); ++t) {
    if (emb.actions().is_reserved(seq[t]))
      throw ValidationError("adversary contract violated: reserved action at "
                            "round " + std::to_string(t + 1));
    out.push_back(emb.utility_of(seq[t]));
  }
  return out;
}

LowerBoundParameters select_parameters(double C, std::int32_t d,
                                       std::int32_t M) {
  if (!(C > 0.0)) throw ValidationError("C must be positive");
  if (d < 1) throw ValidationError("d must be >= 1");
  if (M < 2) throw ValidationError("M must be >= 2 (at least one real action)");
  const double d6 = std::pow(static_cast<double>(d), 6.0);
  const double eps = 1.0 / (4.0 * C * d6);
  const double m2 = static_cast<double>(M) * static_cast<double>(M);
  const double n_real = 2.0 * std::log(20.0 * C * m2 * d6) / (eps * eps);
  const auto n = static_cast<std::int64_t>(std::ceil(n_real));
  const double delta =
      m2 * std::exp(-static_cast<double>(n) * eps * eps / 2.0);
  // Implied by the choice of n; if this ever fires the formulas drifted.
  if (!(5.0 * delta <= eps + 1e-12))
    throw NumericError("parameter invariant 5*delta <= eps failed");
  return {C, d, M, eps, n, delta};
}

void export_embedding(const EmbeddingInstance& emb,
                      const std::filesystem::path& path) {
  csvio::Writer out(path, {"i", "j", "pattern"});
  auto bitstring = [&](const SignVector& c) {
    std::string s;
    s.reserve(c.n());
    for (std::int32_t j = 0; j < c.n(); ++j) s.push_back(c.positive(j) ? '1' : '0');
    return s;
  };
  for (std::int32_t g = 0; g < emb.actions().groups(); ++g) {
    for (std::int32_t r = 0; r < emb.actions().group_size(g); ++r) {
      out.field(static_cast<std::int64_t>(g + 1));
      out.field(static_cast<std::int64_t>(r + 1));
      out.field(bitstring(emb.codeword(emb.actions().action(g, r))));
      out.end_row();
    }
  }
  out.field(std::int64_t{0});
  out.field(std::int64_t{0});
  out.field(bitstring(emb.codeword(emb.actions().reserved())));
  out.end_row();
  out.close();
}

}  // namespace swapreg::lowerbound

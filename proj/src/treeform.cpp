#include "swapreg/treeform.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "swapreg/errors.hpp"

namespace swapreg::treeform {

namespace {

const std::vector<NodeId>& children_of(const Node& node) {
  if (const auto* d = std::get_if<DecisionPoint>(&node)) return d->children;
  return std::get<ObservationPoint>(node).children;
}

bool is_terminal(const Node& node) {
  return std::holds_alternative<Terminal>(node);
}

}  // namespace

TreeFormProblem::TreeFormProblem(std::vector<Node> nodes, NodeId root)
    : nodes_(std::move(nodes)), root_(root) {
  const auto n = static_cast<std::int64_t>(nodes_.size());
  if (n == 0) throw ValidationError("tree has no nodes");
  if (root_ < 0 || root_ >= n)
    throw ValidationError("root id " + std::to_string(root_) +
                          " out of range");

  std::vector<char> seen(nodes_.size(), 0);
  std::vector<char> terminal_used;
  std::int64_t visited = 0;

  // Iterative DFS; file-loaded trees can be deep enough that recursing per
  // node would be reckless.
  std::vector<NodeId> stack{root_};
  seen[root_] = 1;
  while (!stack.empty()) {
    NodeId id = stack.back();
    stack.pop_back();
    ++visited;
    const Node& node = nodes_[id];
    if (const auto* t = std::get_if<Terminal>(&node)) {
      if (t->index < 0)
        throw ValidationError("terminal index " + std::to_string(t->index) +
                              " negative");
      if (static_cast<std::size_t>(t->index) >= nodes_.size())
        throw ValidationError("terminal index " + std::to_string(t->index) +
                              " exceeds node count");
      if (static_cast<std::size_t>(t->index) >= terminal_used.size())
        terminal_used.resize(t->index + 1, 0);
      if (terminal_used[t->index])
        throw ValidationError("terminal index " + std::to_string(t->index) +
                              " repeated");
      terminal_used[t->index] = 1;
      ++terminal_count_;
      continue;
    }
    const auto& children = children_of(node);
    if (children.empty())
      throw ValidationError("node " + std::to_string(id) + " has no children");
    for (NodeId c : children) {
      if (c < 0 || c >= n)
        throw ValidationError("child id " + std::to_string(c) +
                              " out of range at node " + std::to_string(id));
      if (seen[c])
        throw ValidationError("node " + std::to_string(c) +
                              " has two parents (or a cycle)");
      seen[c] = 1;
      stack.push_back(c);
    }
  }

  if (visited != n)
    throw ValidationError(std::to_string(n - visited) +
                          " node(s) unreachable from the root");
  if (static_cast<std::int64_t>(terminal_used.size()) != terminal_count_)
    throw ValidationError("terminal indices do not cover 0..m-1");
}

TreeFormProblem TreeFormProblem::simplex(std::int32_t actions) {
  if (actions < 1) throw ValidationError("simplex needs at least one action");
  std::vector<Node> nodes;
  nodes.reserve(1 + actions);
  DecisionPoint root;
  for (std::int32_t a = 0; a < actions; ++a) {
    root.children.push_back(1 + a);
  }
  nodes.emplace_back(std::move(root));
  for (std::int32_t a = 0; a < actions; ++a) {
    nodes.emplace_back(Terminal{a});
  }
  return TreeFormProblem(std::move(nodes), 0);
}

TreeFormProblem TreeFormProblem::two_level(std::int32_t d, std::int32_t n) {
  if (d < 1 || n < 1)
    throw ValidationError("two_level needs d >= 1 and n >= 1");
  // Layout: node 0 is the root decision; nodes 1..d the observation points;
  // then d*n sign decisions; then 2*d*n terminals.
  const std::int32_t obs_base = 1;
  const std::int32_t sign_base = obs_base + d;
  const std::int32_t term_base = sign_base + d * n;
  std::vector<Node> nodes(term_base + 2 * d * n);

  DecisionPoint root;
  for (std::int32_t i = 0; i < d; ++i) root.children.push_back(obs_base + i);
  nodes[0] = std::move(root);

  for (std::int32_t i = 0; i < d; ++i) {
    ObservationPoint obs;
    for (std::int32_t j = 0; j < n; ++j)
      obs.children.push_back(sign_base + i * n + j);
    nodes[obs_base + i] = std::move(obs);
  }
  for (std::int32_t i = 0; i < d; ++i) {
    for (std::int32_t j = 0; j < n; ++j) {
      const std::int32_t t = (i * n + j) * 2;
      DecisionPoint sign;
      sign.children = {term_base + t, term_base + t + 1};
      nodes[sign_base + i * n + j] = std::move(sign);
      nodes[term_base + t] = Terminal{t};          // "+"
      nodes[term_base + t + 1] = Terminal{t + 1};  // "-"
    }
  }
  return TreeFormProblem(std::move(nodes), 0);
}

std::uint64_t TreeFormProblem::strategy_count(std::uint64_t cap) const {
  // Saturating count DP: decision points add child counts, observation
  // points multiply them. Everything clamps to `cap` on the way up.
  std::function<std::uint64_t(NodeId)> count = [&](NodeId id) -> std::uint64_t {
    const Node& node = nodes_[id];
    if (is_terminal(node)) return std::min<std::uint64_t>(1, cap);
    const auto& children = children_of(node);
    if (std::holds_alternative<DecisionPoint>(node)) {
      std::uint64_t total = 0;
      for (NodeId c : children) {
        std::uint64_t v = count(c);
        if (total > cap - std::min(v, cap)) return cap;
        total = std::min(total + v, cap);
      }
      return total;
    }
    std::uint64_t total = 1;
    for (NodeId c : children) {
      std::uint64_t v = count(c);
      if (v == 0) return 0;
      if (total > cap / v) return cap;
      total = std::min(total * v, cap);
    }
    return total;
  };
  return count(root_);
}

PureStrategy::PureStrategy(std::vector<std::uint8_t> realization)
    : realization_(std::move(realization)) {
  for (std::size_t z = 0; z < realization_.size(); ++z) {
    if (realization_[z] > 1)
      throw ValidationError("realization entries must be 0 or 1");
    if (realization_[z]) ones_.push_back(static_cast<std::int32_t>(z));
  }
}

std::size_t PureStrategyHash::operator()(const PureStrategy& s) const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::uint8_t b : s.realization()) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return static_cast<std::size_t>(h);
}

UtilityVector::UtilityVector(std::vector<double> values)
    : values_(std::move(values)) {
  for (double v : values_) {
    if (!(std::abs(v) <= 1.0 + 1e-9))
      throw ValidationError("utility entry " + std::to_string(v) +
                            " outside [-1, 1]");
  }
}

MixedStrategy::MixedStrategy(
    std::vector<std::pair<PureStrategy, double>> support) {
  double total = 0.0;
  for (auto& [x, p] : support) {
    if (!(p >= -1e-12))
      throw ValidationError("negative probability " + std::to_string(p));
    total += p;
    if (p <= 0.0) continue;
    // Merge duplicates into the first occurrence. Supports are small enough
    // (worst case the strategy pool, ~64) that quadratic scan is fine and
    // keeps insertion order without a hash set.
    bool merged = false;
    for (auto& [y, q] : support_) {
      if (y == x) {
        q += p;
        merged = true;
        break;
      }
    }
    if (!merged) support_.emplace_back(std::move(x), p);
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw ValidationError("probabilities sum to " + std::to_string(total) +
                          ", not 1");
  if (support_.empty())
    throw ValidationError("mixed strategy has empty support");
}

MixedStrategy MixedStrategy::point_mass(PureStrategy x) {
  std::vector<std::pair<PureStrategy, double>> support;
  support.emplace_back(std::move(x), 1.0);
  return MixedStrategy(std::move(support));
}

MixedStrategy MixedStrategy::uniform(std::span<const PureStrategy> xs) {
  if (xs.empty()) throw ValidationError("uniform over empty strategy set");
  std::vector<std::pair<PureStrategy, double>> support;
  support.reserve(xs.size());
  const double p = 1.0 / static_cast<double>(xs.size());
  for (const PureStrategy& x : xs) support.emplace_back(x, p);
  return MixedStrategy(std::move(support));
}

bool validate_realization(const TreeFormProblem& problem,
                          const PureStrategy& x) {
  if (x.size() != problem.terminal_count())
    throw DimensionError("realization length " + std::to_string(x.size()) +
                         " != terminal count " +
                         std::to_string(problem.terminal_count()));
  auto mass = x.realization();

  // any_mass(id): does the subtree under id contain a 1?
  std::function<bool(NodeId)> any_mass = [&](NodeId id) -> bool {
    const Node& node = problem.node(id);
    if (const auto* t = std::get_if<Terminal>(&node)) return mass[t->index];
    for (NodeId c : children_of(node)) {
      if (any_mass(c)) return true;
    }
    return false;
  };
  // valid(id): subtree under id is a well-formed reached sub-strategy.
  std::function<bool(NodeId)> valid = [&](NodeId id) -> bool {
    const Node& node = problem.node(id);
    if (const auto* t = std::get_if<Terminal>(&node)) return mass[t->index];
    if (std::holds_alternative<DecisionPoint>(node)) {
      std::int32_t live = 0;
      bool ok = true;
      for (NodeId c : children_of(node)) {
        if (any_mass(c)) {
          ++live;
          ok = ok && valid(c);
        }
      }
      return ok && live == 1;
    }
    for (NodeId c : children_of(node)) {
      if (!valid(c)) return false;
    }
    return true;
  };
  return valid(problem.root());
}

std::vector<PureStrategy> enumerate_pure_strategies(
    const TreeFormProblem& problem, std::uint64_t cap) {
  const std::uint64_t count = problem.strategy_count(cap);
  if (count >= cap)
    throw CapacityError("strategy count reaches cap " + std::to_string(cap));

  // Each partial result is the sorted terminal set of a sub-strategy.
  using Ones = std::vector<std::int32_t>;
  std::function<std::vector<Ones>(NodeId)> expand =
      [&](NodeId id) -> std::vector<Ones> {
    const Node& node = problem.node(id);
    if (const auto* t = std::get_if<Terminal>(&node)) return {{t->index}};
    if (std::holds_alternative<DecisionPoint>(node)) {
      std::vector<Ones> out;
      for (NodeId c : children_of(node)) {
        for (Ones& o : expand(c)) out.push_back(std::move(o));
      }
      return out;
    }
    std::vector<Ones> acc{{}};
    for (NodeId c : children_of(node)) {
      std::vector<Ones> branch = expand(c);
      std::vector<Ones> next;
      next.reserve(acc.size() * branch.size());
      for (const Ones& a : acc) {
        for (const Ones& b : branch) {
          Ones merged = a;
          merged.insert(merged.end(), b.begin(), b.end());
          next.push_back(std::move(merged));
        }
      }
      acc = std::move(next);
    }
    return acc;
  };

  std::vector<PureStrategy> result;
  result.reserve(count);
  const auto m = static_cast<std::size_t>(problem.terminal_count());
  for (const Ones& ones : expand(problem.root())) {
    std::vector<std::uint8_t> realization(m, 0);
    for (std::int32_t z : ones) realization[z] = 1;
    result.emplace_back(std::move(realization));
  }
  return result;
}

BestResponse best_response(const TreeFormProblem& problem,
                           std::span<const double> gain) {
  if (static_cast<std::int32_t>(gain.size()) != problem.terminal_count())
    throw DimensionError("gain length " + std::to_string(gain.size()) +
                         " != terminal count " +
                         std::to_string(problem.terminal_count()));

  // Pass 1: DP values, remembering the chosen child at decision points.
  std::vector<std::int32_t> choice(problem.node_count(), -1);
  std::function<double(NodeId)> value = [&](NodeId id) -> double {
    const Node& node = problem.node(id);
    if (const auto* t = std::get_if<Terminal>(&node)) return gain[t->index];
    const auto& children = children_of(node);
    if (std::holds_alternative<DecisionPoint>(node)) {
      double best = value(children[0]);
      std::int32_t best_idx = 0;
      for (std::size_t k = 1; k < children.size(); ++k) {
        double v = value(children[k]);
        if (v > best) {  // strict: ties keep the lowest index
          best = v;
          best_idx = static_cast<std::int32_t>(k);
        }
      }
      choice[id] = best_idx;
      return best;
    }
    double total = 0.0;
    for (NodeId c : children) total += value(c);
    return total;
  };
  value(problem.root());

  // Pass 2: walk the chosen branches and collect terminals.
  std::vector<std::uint8_t> realization(problem.terminal_count(), 0);
  std::function<void(NodeId)> mark = [&](NodeId id) {
    const Node& node = problem.node(id);
    if (const auto* t = std::get_if<Terminal>(&node)) {
      realization[t->index] = 1;
      return;
    }
    const auto& children = children_of(node);
    if (std::holds_alternative<DecisionPoint>(node)) {
      mark(children[choice[id]]);
      return;
    }
    for (NodeId c : children) mark(c);
  };
  mark(problem.root());

  PureStrategy best(std::move(realization));
  double v = 0.0;
  for (std::int32_t z : best.ones()) v += gain[z];
  return {std::move(best), v};
}

double expected_utility(const MixedStrategy& pi, const UtilityVector& u) {
  double total = 0.0;
  for (const auto& [x, p] : pi.support()) {
    if (x.size() != u.size())
      throw DimensionError("strategy length " + std::to_string(x.size()) +
                           " != utility length " + std::to_string(u.size()));
    double dot = 0.0;
    for (std::int32_t z : x.ones()) dot += u[z];
    total += p * dot;
  }
  return total;
}

PureStrategy sample_uniform_strategy(const TreeFormProblem& problem,
                                     Rng& rng) {
  // log_count(id) = log of the number of sub-strategies below id. Only
  // ratios between siblings matter for sampling, so double precision is
  // ample even when counts overflow every integer type.
  std::vector<double> log_count(problem.node_count(),
                                std::numeric_limits<double>::quiet_NaN());
  std::function<double(NodeId)> lc = [&](NodeId id) -> double {
    if (!std::isnan(log_count[id])) return log_count[id];
    const Node& node = problem.node(id);
    double out = 0.0;
    if (!is_terminal(node)) {
      const auto& children = children_of(node);
      if (std::holds_alternative<DecisionPoint>(node)) {
        double mx = -std::numeric_limits<double>::infinity();
        for (NodeId c : children) mx = std::max(mx, lc(c));
        double s = 0.0;
        for (NodeId c : children) s += std::exp(lc(c) - mx);
        out = mx + std::log(s);
      } else {
        for (NodeId c : children) out += lc(c);
      }
    }
    log_count[id] = out;
    return out;
  };
  lc(problem.root());

  std::vector<std::uint8_t> realization(problem.terminal_count(), 0);
  std::function<void(NodeId)> descend = [&](NodeId id) {
    const Node& node = problem.node(id);
    if (const auto* t = std::get_if<Terminal>(&node)) {
      realization[t->index] = 1;
      return;
    }
    const auto& children = children_of(node);
    if (std::holds_alternative<DecisionPoint>(node)) {
      double u = rng.next_unit();
      double acc = 0.0;
      NodeId pick = children.back();  // guard against rounding leaving a gap
      for (NodeId c : children) {
        acc += std::exp(lc(c) - log_count[id]);
        if (u < acc) {
          pick = c;
          break;
        }
      }
      descend(pick);
      return;
    }
    for (NodeId c : children) descend(c);
  };
  descend(problem.root());
  return PureStrategy(std::move(realization));
}

}  // namespace swapreg::treeform

#include "swapreg/problem_io.hpp"

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "swapreg/errors.hpp"

namespace swapreg::treeform {

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw ValidationError("problem file line " + std::to_string(line) + ": " +
                        what);
}

std::int64_t parse_int(const std::string& tok, std::size_t line) {
  try {
    std::size_t used = 0;
    std::int64_t v = std::stoll(tok, &used);
    if (used != tok.size()) fail(line, "trailing characters in '" + tok + "'");
    return v;
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception&) {
    fail(line, "expected an integer, got '" + tok + "'");
  }
}

}  // namespace

TreeFormProblem parse_problem(std::istream& in) {
  struct PendingNode {
    std::size_t line;
    std::string kind;
    std::vector<std::int64_t> args;
  };
  std::vector<std::optional<PendingNode>> pending;
  std::optional<std::int64_t> root;
  std::optional<std::pair<std::int64_t, std::int64_t>> generator;
  bool saw_node = false;

  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::istringstream line(raw);
    std::string head;
    if (!(line >> head) || head[0] == '#') continue;

    if (head == "fig1") {
      std::int64_t d = -1, n = -1;
      std::string tok;
      while (line >> tok) {
        if (tok.rfind("d=", 0) == 0)
          d = parse_int(tok.substr(2), lineno);
        else if (tok.rfind("n=", 0) == 0)
          n = parse_int(tok.substr(2), lineno);
        else
          fail(lineno, "unexpected token '" + tok + "' on fig1 line");
      }
      if (d < 1 || n < 1) fail(lineno, "fig1 needs d=<d> n=<n>, both >= 1");
      if (generator) fail(lineno, "second fig1 line");
      generator = {d, n};
      continue;
    }
    if (head == "root") {
      std::string tok;
      if (!(line >> tok)) fail(lineno, "root needs an id");
      if (root) fail(lineno, "second root line");
      root = parse_int(tok, lineno);
      continue;
    }
    if (head == "node") {
      saw_node = true;
      std::string tok;
      if (!(line >> tok)) fail(lineno, "node needs an id");
      std::int64_t id = parse_int(tok, lineno);
      if (id < 0) fail(lineno, "node id must be nonnegative");
      std::string kind;
      if (!(line >> kind)) fail(lineno, "node needs a kind");
      if (kind != "decision" && kind != "observation" && kind != "terminal")
        fail(lineno, "unknown node kind '" + kind + "'");
      std::vector<std::int64_t> args;
      while (line >> tok) args.push_back(parse_int(tok, lineno));
      if (static_cast<std::size_t>(id) >= pending.size())
        pending.resize(id + 1);
      if (pending[id]) fail(lineno, "node " + std::to_string(id) + " redefined");
      pending[id] = PendingNode{lineno, kind, std::move(args)};
      continue;
    }
    fail(lineno, "unknown directive '" + head + "'");
  }

  if (generator) {
    if (saw_node || root)
      throw ValidationError(
          "problem file: fig1 generator cannot be mixed with node/root lines");
    return TreeFormProblem::two_level(static_cast<std::int32_t>(generator->first),
                                      static_cast<std::int32_t>(generator->second));
  }
  if (!saw_node) throw ValidationError("problem file: no nodes");

  std::int64_t terminal_total = 0;
  for (const auto& p : pending) {
    if (p && p->kind == "terminal") ++terminal_total;
  }

  std::vector<Node> nodes;
  nodes.reserve(pending.size());
  for (std::size_t id = 0; id < pending.size(); ++id) {
    if (!pending[id])
      throw ValidationError("problem file: node ids must be dense, " +
                            std::to_string(id) + " is missing");
    const PendingNode& p = *pending[id];
    if (p.kind == "terminal") {
      if (p.args.size() != 1)
        fail(p.line, "terminal needs exactly one index");
      std::int64_t z = p.args[0];
      if (z < 1 || z > terminal_total)
        fail(p.line, "terminal index " + std::to_string(z) +
                         " outside 1.." + std::to_string(terminal_total));
      nodes.emplace_back(Terminal{static_cast<std::int32_t>(z - 1)});
      continue;
    }
    if (p.args.empty()) fail(p.line, p.kind + " node needs children");
    std::vector<NodeId> children;
    for (std::int64_t c : p.args) {
      if (c < 0 || static_cast<std::size_t>(c) >= pending.size())
        fail(p.line, "child id " + std::to_string(c) + " out of range");
      children.push_back(static_cast<NodeId>(c));
    }
    if (p.kind == "decision")
      nodes.emplace_back(DecisionPoint{std::move(children)});
    else
      nodes.emplace_back(ObservationPoint{std::move(children)});
  }

  return TreeFormProblem(std::move(nodes),
                         static_cast<NodeId>(root.value_or(0)));
}

TreeFormProblem load_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw ValidationError("cannot open problem file " + path.string());
  return parse_problem(in);
}

void write_problem(std::ostream& out, const TreeFormProblem& problem) {
  for (std::size_t id = 0; id < problem.node_count(); ++id) {
    const Node& node = problem.node(static_cast<NodeId>(id));
    out << "node " << id << ' ';
    if (const auto* t = std::get_if<Terminal>(&node)) {
      out << "terminal " << (t->index + 1) << '\n';
    } else if (const auto* d = std::get_if<DecisionPoint>(&node)) {
      out << "decision";
      for (NodeId c : d->children) out << ' ' << c;
      out << '\n';
    } else {
      out << "observation";
      for (NodeId c : std::get<ObservationPoint>(node).children)
        out << ' ' << c;
      out << '\n';
    }
  }
  out << "root " << problem.root() << '\n';
}

void save_problem(const std::filesystem::path& path,
                  const TreeFormProblem& problem) {
  std::ofstream out(path);
  if (!out)
    throw ValidationError("cannot write problem file " + path.string());
  write_problem(out, problem);
  if (!out) throw ValidationError("write failed for " + path.string());
}

}  // namespace swapreg::treeform

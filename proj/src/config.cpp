#include "swapreg/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "swapreg/csv.hpp"
#include "swapreg/errors.hpp"
#include "swapreg/learners.hpp"
#include "swapreg/lowerbound.hpp"
#include "swapreg/problem_io.hpp"
#include "swapreg/runner.hpp"

namespace swapreg::cli {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw ValidationError("config line " + std::to_string(line) + ": " + what);
}

bool parse_bool(const std::string& v, std::size_t line) {
  if (v == "true") return true;
  if (v == "false") return false;
  fail(line, "expected true or false, got '" + v + "'");
}

std::vector<std::string> split_commas(const std::string& v) {
  return csvio::split_line(v);
}

// Keys legal for each kind, beyond the common set.
const std::set<std::string> kCommonKeys = {
    "schema_version", "kind",    "T",   "seeds",
    "out",            "learner", "eta", "horizon_mode"};
const std::set<std::string> kDynamicsKeys = {"problem", "utilities", "pool"};
const std::set<std::string> kLowerboundKeys = {
    "d",   "M",   "group_sizes",  "auto_n",           "C",
    "n",   "eps", "adversary",    "advance_prob",     "pool",
    "export_embedding"};
const std::set<std::string> kNfceKeys = {"game"};

const std::set<std::string>& kind_keys(const std::string& kind) {
  static const std::set<std::string> empty;
  if (kind == "dynamics") return kDynamicsKeys;
  if (kind == "lowerbound" || kind == "lemmas") return kLowerboundKeys;
  if (kind == "nfce") return kNfceKeys;
  return empty;
}

void validate(RunConfig& cfg, const std::set<std::string>& set_keys) {
  for (const char* required : {"schema_version", "kind", "T"}) {
    if (!set_keys.count(required))
      throw ValidationError(std::string("missing required key '") + required +
                            "'");
  }
  if (cfg.schema_version != 1)
    throw ValidationError("unsupported schema_version " +
                          std::to_string(cfg.schema_version));
  if (cfg.kind != "dynamics" && cfg.kind != "lowerbound" &&
      cfg.kind != "lemmas" && cfg.kind != "nfce")
    throw ValidationError("unknown kind '" + cfg.kind + "'");

  const std::set<std::string>& allowed = kind_keys(cfg.kind);
  for (const std::string& k : set_keys) {
    if (!kCommonKeys.count(k) && !allowed.count(k))
      throw ValidationError("key '" + k + "' does not apply to kind '" +
                            cfg.kind + "'");
  }

  if (cfg.T < 1) throw ValidationError("T must be >= 1");
  if (cfg.seeds.empty()) throw ValidationError("seeds must be nonempty");
  if (!learners::is_learner_name(cfg.learner))
    throw ValidationError("unknown learner '" + cfg.learner + "'");
  if (cfg.eta < 0.0) throw ValidationError("eta must be >= 0");
  if (cfg.horizon_mode != "known" && cfg.horizon_mode != "anytime")
    throw ValidationError("horizon_mode must be known or anytime");
  if (cfg.pool < 1) throw ValidationError("pool must be >= 1");

  if (cfg.kind == "dynamics") {
    if (cfg.problem.empty()) throw ValidationError("dynamics needs problem=");
    // Resolving also validates file problems end to end.
    treeform::TreeFormProblem problem = resolve_problem(cfg);
    if (cfg.utilities.rfind("constant:", 0) == 0) {
      if (static_cast<std::int32_t>(cfg.constant_utilities.size()) !=
          problem.terminal_count())
        throw ValidationError(
            "constant utilities need " +
            std::to_string(problem.terminal_count()) + " entries, got " +
            std::to_string(cfg.constant_utilities.size()));
      for (double v : cfg.constant_utilities) {
        if (!(std::abs(v) <= 1.0))
          throw ValidationError("constant utility outside [-1, 1]");
      }
    } else if (cfg.utilities != "uniform_basis") {
      throw ValidationError("unknown utilities '" + cfg.utilities + "'");
    }
  }

  if (cfg.kind == "lowerbound" || cfg.kind == "lemmas") {
    if (cfg.d < 1) throw ValidationError("d must be >= 1");
    if (cfg.M < 2) throw ValidationError("M must be >= 2");
    if (cfg.M - 1 < cfg.d)
      throw ValidationError("need M-1 >= d so every group is nonempty");
    if (!cfg.group_sizes.empty()) {
      if (static_cast<std::int32_t>(cfg.group_sizes.size()) != cfg.d)
        throw ValidationError("group_sizes must list d entries");
      std::int64_t total = 0;
      for (std::int32_t s : cfg.group_sizes) {
        if (s < 1) throw ValidationError("group sizes must be >= 1");
        total += s;
      }
      if (total != cfg.M - 1)
        throw ValidationError("group_sizes must sum to M-1 = " +
                              std::to_string(cfg.M - 1));
    }
    if (cfg.adversary != "staircase")
      throw ValidationError("unknown adversary '" + cfg.adversary + "'");
    if (!(cfg.advance_prob >= 0.0 && cfg.advance_prob <= 1.0))
      throw ValidationError("advance_prob must be in [0, 1]");
    if (cfg.auto_n) {
      if (set_keys.count("n") || set_keys.count("eps"))
        throw ValidationError("auto_n = true conflicts with explicit n/eps");
      if (!(cfg.C > 0.0)) throw ValidationError("C must be positive");
      lowerbound::LowerBoundParameters params =
          lowerbound::select_parameters(cfg.C, cfg.d, cfg.M);
      if (params.n > (1 << 20))
        throw ValidationError(
            "auto_n selects n = " + std::to_string(params.n) +
            ", beyond the 2^20 desk-scale cap; set n and eps explicitly");
    } else {
      if (!set_keys.count("n") || !set_keys.count("eps"))
        throw ValidationError(
            "lowerbound/lemmas need auto_n = true or explicit n and eps");
      if (cfg.n < 1 || cfg.n > (1 << 20))
        throw ValidationError("n must be in [1, 2^20]");
      if (!(cfg.eps > 0.0 && cfg.eps < 1.0))
        throw ValidationError("eps must be in (0, 1)");
    }
  }

  if (cfg.kind == "nfce") {
    if (cfg.game.empty()) throw ValidationError("nfce needs game=");
    if (cfg.game != "matching_pennies" && cfg.game != "coordination") {
      if (cfg.game.rfind("random:", 0) != 0)
        throw ValidationError("unknown game '" + cfg.game + "'");
      const std::string dims = cfg.game.substr(7);
      const std::size_t x = dims.find('x');
      if (x == std::string::npos)
        throw ValidationError("random game needs random:<a>x<b>");
      const std::int64_t a = csvio::parse_int(dims.substr(0, x));
      const std::int64_t b = csvio::parse_int(dims.substr(x + 1));
      if (a < 2 || a > 64 || b < 2 || b > 64)
        throw ValidationError("random game sizes must be in [2, 64]");
    }
  }
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::set<std::string> set_keys;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) fail(lineno, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(lineno, "empty key");
    if (value.empty()) fail(lineno, "empty value for '" + key + "'");
    if (!set_keys.insert(key).second) fail(lineno, "duplicate key '" + key + "'");

    try {
      if (key == "schema_version")
        cfg.schema_version =
            static_cast<std::int32_t>(csvio::parse_int(value));
      else if (key == "kind")
        cfg.kind = value;
      else if (key == "T")
        cfg.T = csvio::parse_int(value);
      else if (key == "seeds")
        cfg.seeds = parse_seed_spec(value);
      else if (key == "out")
        cfg.out = value;
      else if (key == "learner")
        cfg.learner = value;
      else if (key == "eta")
        cfg.eta = csvio::parse_double(value);
      else if (key == "horizon_mode")
        cfg.horizon_mode = value;
      else if (key == "problem")
        cfg.problem = value;
      else if (key == "utilities") {
        cfg.utilities = value;
        if (value.rfind("constant:", 0) == 0) {
          cfg.constant_utilities.clear();
          for (const std::string& f : split_commas(value.substr(9)))
            cfg.constant_utilities.push_back(csvio::parse_double(f));
        }
      } else if (key == "pool")
        cfg.pool = static_cast<std::int32_t>(csvio::parse_int(value));
      else if (key == "d")
        cfg.d = static_cast<std::int32_t>(csvio::parse_int(value));
      else if (key == "M")
        cfg.M = static_cast<std::int32_t>(csvio::parse_int(value));
      else if (key == "group_sizes") {
        cfg.group_sizes.clear();
        for (const std::string& f : split_commas(value))
          cfg.group_sizes.push_back(
              static_cast<std::int32_t>(csvio::parse_int(f)));
      } else if (key == "auto_n")
        cfg.auto_n = parse_bool(value, lineno);
      else if (key == "C")
        cfg.C = csvio::parse_double(value);
      else if (key == "n")
        cfg.n = csvio::parse_int(value);
      else if (key == "eps")
        cfg.eps = csvio::parse_double(value);
      else if (key == "adversary")
        cfg.adversary = value;
      else if (key == "advance_prob")
        cfg.advance_prob = csvio::parse_double(value);
      else if (key == "export_embedding")
        cfg.export_embedding = parse_bool(value, lineno);
      else if (key == "game")
        cfg.game = value;
      else
        fail(lineno, "unknown key '" + key + "'");
    } catch (const ValidationError& e) {
      // Re-anchor value parse errors to the config line.
      std::string what = e.what();
      if (what.rfind("config line", 0) == 0) throw;
      fail(lineno, what);
    }
  }
  validate(cfg, set_keys);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  return parse_config(in);
}

std::vector<std::uint64_t> parse_seed_spec(const std::string& spec) {
  std::vector<std::uint64_t> seeds;
  const std::size_t dots = spec.find("..");
  if (dots != std::string::npos) {
    const std::int64_t a = csvio::parse_int(spec.substr(0, dots));
    const std::int64_t b = csvio::parse_int(spec.substr(dots + 2));
    if (a < 0 || b < a) throw ValidationError("bad seed range '" + spec + "'");
    if (b - a >= (1 << 20))
      throw ValidationError("seed range of " + std::to_string(b - a + 1) +
                            " exceeds 2^20");
    for (std::int64_t s = a; s <= b; ++s)
      seeds.push_back(static_cast<std::uint64_t>(s));
    return seeds;
  }
  for (const std::string& f : split_commas(spec)) {
    const std::int64_t s = csvio::parse_int(f);
    if (s < 0) throw ValidationError("seeds must be nonnegative");
    seeds.push_back(static_cast<std::uint64_t>(s));
  }
  if (seeds.empty()) throw ValidationError("empty seed list");
  return seeds;
}

std::string canonical_config_text(const RunConfig& cfg) {
  // Effective configuration, one sorted key per line. `out` and `seeds` are
  // deliberately excluded: where results are written and which seeds are
  // swept do not change what a single (config, seed) run computes.
  std::map<std::string, std::string> kv;
  kv["schema_version"] = std::to_string(cfg.schema_version);
  kv["kind"] = cfg.kind;
  kv["T"] = std::to_string(cfg.T);
  kv["learner"] = cfg.learner;
  kv["eta"] = csvio::format_double(cfg.eta);
  kv["horizon_mode"] = cfg.horizon_mode;

  if (cfg.kind == "dynamics") {
    kv["problem"] = cfg.problem;
    kv["utilities"] = cfg.utilities;
    kv["pool"] = std::to_string(cfg.pool);
  } else if (cfg.kind == "lowerbound" || cfg.kind == "lemmas") {
    kv["d"] = std::to_string(cfg.d);
    kv["M"] = std::to_string(cfg.M);
    std::string groups;
    for (std::int32_t s : resolve_group_sizes(cfg)) {
      if (!groups.empty()) groups.push_back(',');
      groups += std::to_string(s);
    }
    kv["group_sizes"] = groups;
    kv["auto_n"] = cfg.auto_n ? "true" : "false";
    kv["C"] = csvio::format_double(cfg.C);
    const EffectiveParameters params = resolve_parameters(cfg);
    kv["n"] = std::to_string(params.n);
    kv["eps"] = csvio::format_double(params.eps);
    kv["adversary"] = cfg.adversary;
    kv["advance_prob"] = csvio::format_double(cfg.advance_prob);
    kv["pool"] = std::to_string(cfg.pool);
    kv["export_embedding"] = cfg.export_embedding ? "true" : "false";
  } else if (cfg.kind == "nfce") {
    kv["game"] = cfg.game;
  }

  std::ostringstream out;
  for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
  return out.str();
}

std::uint64_t config_hash(const RunConfig& cfg) {
  const std::string text = canonical_config_text(cfg);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace swapreg::cli

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace swapreg::cli {

/// Parsed and validated experiment configuration.
///
/// File grammar: one `key = value` per line, `#` comments and blank lines
/// ignored, keys unique. Every file must carry `schema_version = 1` and a
/// `kind`. Unknown keys and keys that do not apply to the kind are
/// rejected up front, before any run starts.
///
/// Keys by kind (defaults in parentheses):
///   common     schema_version, kind, T, seeds (0), out (.),
///              learner (hedge), eta (0 = auto), horizon_mode (known)
///   dynamics   problem = simplex:<m> | fig1:<d>x<n> | file:<path>,
///              utilities = uniform_basis | constant:<v1>,<v2>,...,
///              pool (64)
///   lowerbound d, M, group_sizes (near-equal split), adversary (staircase),
///              advance_prob (0 = auto), pool (64), export_embedding (false),
///              and either auto_n = true with C (1.0), or explicit n + eps
///   lemmas     same keys as lowerbound
///   nfce       game = matching_pennies | coordination | random:<a>x<b>
///
/// `seeds` is a comma list ("1,5,9") or inclusive range ("0..99").
struct RunConfig {
  std::int32_t schema_version = 1;
  std::string kind;

  std::int64_t T = 0;
  std::vector<std::uint64_t> seeds{0};
  std::string out = ".";

  std::string learner = "hedge";
  double eta = 0.0;
  std::string horizon_mode = "known";  // known | anytime

  // dynamics
  std::string problem;
  std::string utilities = "uniform_basis";
  std::vector<double> constant_utilities;

  // lowerbound / lemmas
  std::int32_t d = 0;
  std::int32_t M = 0;
  std::vector<std::int32_t> group_sizes;
  bool auto_n = false;
  double C = 1.0;
  std::int64_t n = 0;
  double eps = 0.0;
  std::string adversary = "staircase";
  double advance_prob = 0.0;  // 0 = default
  std::int32_t pool = 64;
  bool export_embedding = false;

  // nfce
  std::string game;
};

RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);

/// Every effective field as sorted, normalized `key = value` lines; two
/// configs that differ only in comments or ordering canonicalize
/// identically.
std::string canonical_config_text(const RunConfig& config);

/// FNV-1a 64 over the canonical text, hex-printed in CSV outputs.
std::uint64_t config_hash(const RunConfig& config);

/// Parses "a..b" or "a,b,c" into a seed list.
std::vector<std::uint64_t> parse_seed_spec(const std::string& spec);

}  // namespace swapreg::cli

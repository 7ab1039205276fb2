#include "swapreg/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <mutex>
#include <ostream>
#include <thread>

#include "swapreg/csv.hpp"
#include "swapreg/errors.hpp"
#include "swapreg/learners.hpp"
#include "swapreg/lowerbound.hpp"
#include "swapreg/problem_io.hpp"
#include "swapreg/reduction.hpp"
#include "swapreg/regret.hpp"
#include "swapreg/rng.hpp"

namespace swapreg::cli {

namespace {

using learners::HedgeConfig;
using learners::Learner;
using lowerbound::EmbeddingInstance;
using lowerbound::GroupedActions;
using regret::NPlayerGame;
using regret::Transcript;
using treeform::MixedStrategy;
using treeform::PureStrategy;
using treeform::TreeFormProblem;
using treeform::UtilityVector;

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Runs fn(i, seeds[i]) for every seed, serially or on `jobs` threads, and
/// returns the records in seed order either way. The first exception (if
/// any) is rethrown after all workers drain.
template <typename Record, typename Fn>
std::vector<Record> map_seeds(const std::vector<std::uint64_t>& seeds,
                              std::int32_t jobs, Fn&& fn) {
  const std::size_t count = seeds.size();
  std::vector<Record> records(count);
  std::size_t workers =
      jobs < 1 ? 1 : std::min<std::size_t>(static_cast<std::size_t>(jobs), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) records[i] = fn(i, seeds[i]);
    return records;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        records[i] = fn(i, seeds[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return records;
}

class RunLog {
 public:
  explicit RunLog(std::ostream& out) : out_(out) {}
  void line(const std::string& s) {
    std::lock_guard<std::mutex> lock(mutex_);
    out_ << s << '\n';
  }

 private:
  std::ostream& out_;
  std::mutex mutex_;
};

class WallTimer {
 public:
  double ms() const {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

HedgeConfig hedge_config_for(const RunConfig& cfg) {
  HedgeConfig hc;
  hc.eta = cfg.eta;
  hc.horizon = cfg.horizon_mode == "known" ? cfg.T : 0;
  return hc;
}

std::unique_ptr<Learner> build_learner(const RunConfig& cfg,
                                       const TreeFormProblem& problem,
                                       std::uint64_t seed) {
  Rng pool_rng(derive_seed(seed, "pool"));
  std::vector<PureStrategy> universe =
      learners::strategy_universe(problem, cfg.pool, pool_rng);
  return learners::make_learner(cfg.learner, std::move(universe),
                                hedge_config_for(cfg));
}

std::vector<std::int64_t> curve_checkpoints(std::int64_t T) {
  std::vector<std::int64_t> cps;
  for (std::int64_t c = 1; c < T; c *= 2) cps.push_back(c);
  cps.push_back(T);
  return cps;
}

// ---------------------------------------------------------------- dynamics

struct CurvePoint {
  std::int64_t t;
  double external;
  double swap;
};

struct DynamicsRecord {
  std::uint64_t seed = 0;
  double swap = 0.0;
  double external = 0.0;
  std::vector<CurvePoint> curve;
};

int run_dynamics(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds,
                 const std::filesystem::path& out_dir, std::int32_t jobs,
                 RunLog& log) {
  const TreeFormProblem problem = resolve_problem(cfg);
  const std::int32_t m = problem.terminal_count();
  const std::vector<std::int64_t> checkpoints = curve_checkpoints(cfg.T);
  const bool constant = cfg.utilities.rfind("constant:", 0) == 0;

  auto run_one = [&](std::size_t, std::uint64_t seed) {
    WallTimer timer;
    DynamicsRecord rec;
    rec.seed = seed;
    std::unique_ptr<Learner> learner = build_learner(cfg, problem, seed);
    Rng util_rng(derive_seed(seed, "utilities"));
    Transcript tr(problem);
    std::size_t next_cp = 0;
    for (std::int64_t t = 0; t < cfg.T; ++t) {
      MixedStrategy pi = learner->next_distribution();
      std::vector<double> u(m, 0.0);
      if (constant) {
        u = cfg.constant_utilities;
      } else {
        u[static_cast<std::int32_t>(util_rng.next_below(m))] = 1.0;
      }
      UtilityVector uv(std::move(u));
      tr.add_round(pi, uv);
      learner->observe(uv);
      if (next_cp < checkpoints.size() && t + 1 == checkpoints[next_cp]) {
        rec.curve.push_back({t + 1, regret::external_regret(tr),
                             regret::swap_regret(tr).regret});
        ++next_cp;
      }
    }
    rec.swap = rec.curve.back().swap;
    rec.external = rec.curve.back().external;
    log.line("dynamics seed=" + std::to_string(seed) +
             " swap=" + csvio::format_double(rec.swap) +
             " wall_ms=" + csvio::format_double(timer.ms()));
    return rec;
  };

  std::vector<DynamicsRecord> records =
      map_seeds<DynamicsRecord>(seeds, jobs, run_one);

  const std::string hash = hash_hex(config_hash(cfg));
  csvio::Writer runs(out_dir / "dynamics_runs.csv",
                     {"seed", "config", "learner", "T", "swap_regret",
                      "external_regret"});
  for (const DynamicsRecord& r : records) {
    runs.field(r.seed);
    runs.field(hash);
    runs.field(cfg.learner);
    runs.field(cfg.T);
    runs.field(r.swap);
    runs.field(r.external);
    runs.end_row();
  }
  runs.close();

  csvio::Writer curve(out_dir / "dynamics_curve.csv",
                      {"seed", "t", "external_regret", "swap_regret"});
  for (const DynamicsRecord& r : records) {
    for (const CurvePoint& p : r.curve) {
      curve.field(r.seed);
      curve.field(p.t);
      curve.field(p.external);
      curve.field(p.swap);
      curve.end_row();
    }
  }
  curve.close();
  return 0;
}

// -------------------------------------------------------------- lowerbound

struct TransferRecord {
  std::uint64_t seed = 0;
  reduction::TransferReport report{};
  lowerbound::SequenceScan scan{0, 0};
  std::vector<reduction::EpsilonBoundViolation> violations;
};

TransferRecord run_embedding_seed(const RunConfig& cfg,
                                  const GroupedActions& actions,
                                  const EffectiveParameters& params,
                                  double advance_prob, std::uint64_t seed,
                                  const std::filesystem::path& out_dir) {
  TransferRecord rec;
  rec.seed = seed;
  EmbeddingInstance emb = EmbeddingInstance::sample(
      actions, static_cast<std::int32_t>(params.n),
      derive_seed(seed, "embedding"));
  std::vector<std::int32_t> seq = lowerbound::staircase_sequence(
      actions, cfg.T, advance_prob, derive_seed(seed, "adversary"));
  rec.scan = lowerbound::scan_sequence(actions, seq);
  std::vector<UtilityVector> utils = lowerbound::embedded_utilities(emb, seq);

  std::unique_ptr<Learner> learner = build_learner(cfg, emb.problem(), seed);
  Transcript tr(emb.problem());
  for (std::int64_t t = 0; t < cfg.T; ++t) {
    MixedStrategy pi = learner->next_distribution();
    tr.add_round(pi, utils[t]);
    learner->observe(utils[t]);
  }

  reduction::TransferReport report =
      reduction::transfer_report(tr, emb, seq, params.eps, params.delta);
  // transfer_report recomputes the violation list internally; rebuild it
  // here only when nonempty so the CSV can show the witnesses.
  if (report.epsilon_violations > 0) {
    std::vector<reduction::Projection> projections =
        reduction::project_all(emb, tr, params.eps);
    reduction::RevealTimes reveal =
        reduction::reveal_times(emb, seq, tr, projections);
    rec.violations = reduction::check_epsilon_bound(tr, emb, seq, projections,
                                                    reveal, params.eps);
  }
  rec.report = std::move(report);

  if (cfg.export_embedding) {
    lowerbound::export_embedding(
        emb, out_dir / ("embedding_seed" + std::to_string(seed) + ".csv"));
  }
  return rec;
}

int run_lowerbound(const RunConfig& cfg,
                   const std::vector<std::uint64_t>& seeds,
                   const std::filesystem::path& out_dir, std::int32_t jobs,
                   RunLog& log) {
  const GroupedActions actions(resolve_group_sizes(cfg));
  const EffectiveParameters params = resolve_parameters(cfg);
  const double advance_prob =
      cfg.advance_prob > 0.0 ? cfg.advance_prob
                             : lowerbound::default_advance_prob(actions, cfg.T);

  auto run_one = [&](std::size_t, std::uint64_t seed) {
    WallTimer timer;
    TransferRecord rec =
        run_embedding_seed(cfg, actions, params, advance_prob, seed, out_dir);
    log.line("lowerbound seed=" + std::to_string(seed) +
             " swap=" + csvio::format_double(rec.report.swap_regret) +
             " F=" + (rec.report.F_holds ? std::string("1") : std::string("0")) +
             " wall_ms=" + csvio::format_double(timer.ms()));
    return rec;
  };

  std::vector<TransferRecord> records =
      map_seeds<TransferRecord>(seeds, jobs, run_one);

  csvio::Writer out(out_dir / "transfer.csv",
                    {"seed", "d", "n", "M", "T", "eps", "delta", "W",
                     "F_holds", "V_id", "Vbar_id", "V_phi", "Vbar_phibar",
                     "swap_regret", "chain_i_ok", "chain_ii_ok",
                     "chain_iii_ok"});
  bool all_ok = true;
  std::int64_t total_violations = 0;
  for (const TransferRecord& r : records) {
    const reduction::TransferReport& rep = r.report;
    out.field(r.seed);
    out.field(static_cast<std::int64_t>(rep.d));
    out.field(rep.n);
    out.field(static_cast<std::int64_t>(rep.M));
    out.field(rep.T);
    out.field(rep.eps);
    out.field(rep.delta);
    out.field(rep.W);
    out.field(static_cast<std::int64_t>(rep.F_holds ? 1 : 0));
    out.field(rep.V_id);
    out.field(rep.Vbar_id);
    out.field(rep.V_phi);
    out.field(rep.Vbar_phibar);
    out.field(rep.swap_regret);
    out.field(static_cast<std::int64_t>(rep.chain_i_ok ? 1 : 0));
    out.field(static_cast<std::int64_t>(rep.chain_ii_ok ? 1 : 0));
    out.field(static_cast<std::int64_t>(rep.chain_iii_ok ? 1 : 0));
    out.end_row();
    total_violations += rep.epsilon_violations;
    if (rep.epsilon_violations > 0 || !rep.chain_i_ok || !rep.chain_ii_ok ||
        !rep.chain_iii_ok || r.scan.order_violations > 0 ||
        r.scan.reserved_plays > 0)
      all_ok = false;
  }
  out.close();

  if (total_violations > 0) {
    csvio::Writer viol(out_dir / "lowerbound_violations.csv",
                       {"seed", "strategy", "t", "lhs", "rhs"});
    for (const TransferRecord& r : records) {
      for (const reduction::EpsilonBoundViolation& v : r.violations) {
        viol.field(r.seed);
        viol.field(static_cast<std::int64_t>(v.strategy));
        viol.field(v.t);
        viol.field(v.lhs);
        viol.field(v.rhs);
        viol.end_row();
      }
    }
    viol.close();
  }
  return all_ok ? 0 : 3;
}

// ------------------------------------------------------------------ lemmas

struct LemmaRecord {
  std::uint64_t seed = 0;
  bool holds = true;
  std::int64_t pairs = 0;
  std::int64_t violating_pairs = 0;
  double W = 0.0;
};

int run_lemmas(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds,
               const std::filesystem::path& out_dir, std::int32_t jobs,
               RunLog& log) {
  const GroupedActions actions(resolve_group_sizes(cfg));
  const EffectiveParameters params = resolve_parameters(cfg);
  const double advance_prob =
      cfg.advance_prob > 0.0 ? cfg.advance_prob
                             : lowerbound::default_advance_prob(actions, cfg.T);

  auto run_one = [&](std::size_t, std::uint64_t seed) {
    WallTimer timer;
    LemmaRecord rec;
    rec.seed = seed;
    EmbeddingInstance emb = EmbeddingInstance::sample(
        actions, static_cast<std::int32_t>(params.n),
        derive_seed(seed, "embedding"));
    lowerbound::ConcentrationReport conc =
        lowerbound::check_concentration(emb, params.eps);
    rec.holds = conc.holds;
    rec.pairs = conc.pairs_checked;
    rec.violating_pairs = static_cast<std::int64_t>(conc.violations.size());

    std::vector<std::int32_t> seq = lowerbound::staircase_sequence(
        actions, cfg.T, advance_prob, derive_seed(seed, "adversary"));
    std::vector<UtilityVector> utils =
        lowerbound::embedded_utilities(emb, seq);
    std::unique_ptr<Learner> learner = build_learner(cfg, emb.problem(), seed);
    Transcript tr(emb.problem());
    for (std::int64_t t = 0; t < cfg.T; ++t) {
      MixedStrategy pi = learner->next_distribution();
      tr.add_round(pi, utils[t]);
      learner->observe(utils[t]);
    }
    std::vector<reduction::Projection> projections =
        reduction::project_all(emb, tr, params.eps);
    reduction::RevealTimes reveal =
        reduction::reveal_times(emb, seq, tr, projections);
    rec.W = reduction::mass_before_reveal(tr, reveal);
    log.line("lemmas seed=" + std::to_string(seed) + " holds=" +
             (rec.holds ? std::string("1") : std::string("0")) +
             " W=" + csvio::format_double(rec.W) +
             " wall_ms=" + csvio::format_double(timer.ms()));
    return rec;
  };

  std::vector<LemmaRecord> records = map_seeds<LemmaRecord>(seeds, jobs, run_one);

  csvio::Writer runs(out_dir / "lemma_runs.csv",
                     {"seed", "concentration_holds", "pairs",
                      "violating_pairs", "W"});
  std::int64_t failures = 0;
  double w_sum = 0.0;
  for (const LemmaRecord& r : records) {
    runs.field(r.seed);
    runs.field(static_cast<std::int64_t>(r.holds ? 1 : 0));
    runs.field(r.pairs);
    runs.field(r.violating_pairs);
    runs.field(r.W);
    runs.end_row();
    if (!r.holds) ++failures;
    w_sum += r.W;
  }
  runs.close();

  const double S = static_cast<double>(records.size());
  const double failure_rate = static_cast<double>(failures) / S;
  const double rate_sigma =
      std::sqrt(std::max(params.delta * (1.0 - params.delta), 0.0) / S);
  const double rate_bound = params.delta + 3.0 * rate_sigma;
  const bool rate_ok = failure_rate <= rate_bound;

  const double mean_w = w_sum / S;
  double var_w = 0.0;
  for (const LemmaRecord& r : records) {
    var_w += (r.W - mean_w) * (r.W - mean_w);
  }
  const double se_w =
      records.size() > 1 ? std::sqrt(var_w / (S - 1.0) / S) : 0.0;
  const double w_bound = params.delta + 3.0 * se_w;
  const bool w_ok = mean_w <= w_bound;

  csvio::Writer summary(
      out_dir / "lemma_summary.csv",
      {"seeds", "M", "d", "n", "eps", "delta", "failure_count",
       "failure_rate", "rate_bound", "rate_ok", "mean_W", "se_W", "w_bound",
       "w_ok"});
  summary.field(static_cast<std::int64_t>(records.size()));
  summary.field(static_cast<std::int64_t>(cfg.M));
  summary.field(static_cast<std::int64_t>(cfg.d));
  summary.field(params.n);
  summary.field(params.eps);
  summary.field(params.delta);
  summary.field(failures);
  summary.field(failure_rate);
  summary.field(rate_bound);
  summary.field(static_cast<std::int64_t>(rate_ok ? 1 : 0));
  summary.field(mean_w);
  summary.field(se_w);
  summary.field(w_bound);
  summary.field(static_cast<std::int64_t>(w_ok ? 1 : 0));
  summary.end_row();
  summary.close();

  return (rate_ok && w_ok) ? 0 : 3;
}

// -------------------------------------------------------------------- nfce

struct NfceRecord {
  std::uint64_t seed = 0;
  double swap_p1 = 0.0;
  double swap_p2 = 0.0;
  double worst_gap = 0.0;
  bool ok = true;
};

NPlayerGame build_game(const RunConfig& cfg, std::uint64_t seed) {
  if (cfg.game == "matching_pennies") return NPlayerGame::matching_pennies();
  if (cfg.game == "coordination") return NPlayerGame::coordination();
  // random:<a>x<b>, validated at config load.
  const std::string dims = cfg.game.substr(7);
  const std::size_t x = dims.find('x');
  const std::int32_t a =
      static_cast<std::int32_t>(csvio::parse_int(dims.substr(0, x)));
  const std::int32_t b =
      static_cast<std::int32_t>(csvio::parse_int(dims.substr(x + 1)));
  Rng rng(derive_seed(seed, "game"));
  const std::int32_t actions[2] = {a, b};
  return NPlayerGame::random_game(actions, rng);
}

int run_nfce(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds,
             const std::filesystem::path& out_dir, std::int32_t jobs,
             RunLog& log) {
  auto run_one = [&](std::size_t, std::uint64_t seed) {
    WallTimer timer;
    NfceRecord rec;
    rec.seed = seed;
    NPlayerGame game = build_game(cfg, seed);
    std::vector<std::unique_ptr<Learner>> players;
    for (std::int32_t i = 0; i < game.players(); ++i) {
      std::span<const PureStrategy> xs = game.strategies(i);
      players.push_back(learners::make_learner(
          cfg.learner, std::vector<PureStrategy>(xs.begin(), xs.end()),
          hedge_config_for(cfg)));
    }
    learners::SelfPlayResult result = learners::self_play(game, players, cfg.T);
    rec.swap_p1 = regret::swap_regret(result.transcripts[0]).regret;
    rec.swap_p2 = regret::swap_regret(result.transcripts[1]).regret;
    regret::EquilibriumGapReport gap =
        regret::equilibrium_gap(game, result.average_profile);
    rec.worst_gap = gap.worst_gap;
    rec.ok = rec.worst_gap <= std::max(rec.swap_p1, rec.swap_p2);
    log.line("nfce seed=" + std::to_string(seed) +
             " gap=" + csvio::format_double(rec.worst_gap) +
             " wall_ms=" + csvio::format_double(timer.ms()));
    return rec;
  };

  std::vector<NfceRecord> records = map_seeds<NfceRecord>(seeds, jobs, run_one);

  csvio::Writer out(out_dir / "nfce_runs.csv",
                    {"seed", "game", "learner", "T", "swap_p1", "swap_p2",
                     "max_swap", "worst_gap", "gap_le_max_swap"});
  bool all_ok = true;
  for (const NfceRecord& r : records) {
    out.field(r.seed);
    out.field(cfg.game);
    out.field(cfg.learner);
    out.field(cfg.T);
    out.field(r.swap_p1);
    out.field(r.swap_p2);
    out.field(std::max(r.swap_p1, r.swap_p2));
    out.field(r.worst_gap);
    out.field(static_cast<std::int64_t>(r.ok ? 1 : 0));
    out.end_row();
    if (!r.ok) all_ok = false;
  }
  out.close();
  return all_ok ? 0 : 3;
}

}  // namespace

TreeFormProblem resolve_problem(const RunConfig& cfg) {
  const std::string& p = cfg.problem;
  if (p.rfind("simplex:", 0) == 0) {
    const std::int64_t m = csvio::parse_int(p.substr(8));
    if (m < 1 || m > 4096)
      throw ValidationError("simplex size must be in [1, 4096]");
    return TreeFormProblem::simplex(static_cast<std::int32_t>(m));
  }
  if (p.rfind("fig1:", 0) == 0) {
    const std::string dims = p.substr(5);
    const std::size_t x = dims.find('x');
    if (x == std::string::npos)
      throw ValidationError("fig1 problem needs fig1:<d>x<n>");
    const std::int64_t d = csvio::parse_int(dims.substr(0, x));
    const std::int64_t n = csvio::parse_int(dims.substr(x + 1));
    if (d < 1 || d > 1024 || n < 1 || n > 4096)
      throw ValidationError("fig1 sizes must satisfy 1 <= d <= 1024, "
                            "1 <= n <= 4096");
    return TreeFormProblem::two_level(static_cast<std::int32_t>(d),
                                      static_cast<std::int32_t>(n));
  }
  if (p.rfind("file:", 0) == 0) return treeform::load_problem(p.substr(5));
  throw ValidationError("unknown problem '" + p + "'");
}

std::vector<std::int32_t> resolve_group_sizes(const RunConfig& cfg) {
  if (!cfg.group_sizes.empty()) return cfg.group_sizes;
  std::vector<std::int32_t> sizes(cfg.d);
  const std::int32_t base = (cfg.M - 1) / cfg.d;
  const std::int32_t extra = (cfg.M - 1) % cfg.d;
  for (std::int32_t g = 0; g < cfg.d; ++g)
    sizes[g] = base + (g < extra ? 1 : 0);
  return sizes;
}

EffectiveParameters resolve_parameters(const RunConfig& cfg) {
  if (cfg.auto_n) {
    lowerbound::LowerBoundParameters p =
        lowerbound::select_parameters(cfg.C, cfg.d, cfg.M);
    return {p.n, p.eps, p.delta};
  }
  const double m = static_cast<double>(cfg.M);
  const double delta =
      m * m * std::exp(-static_cast<double>(cfg.n) * cfg.eps * cfg.eps / 2.0);
  return {cfg.n, cfg.eps, delta};
}

int run_experiment(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds,
                   const std::filesystem::path& out_dir, std::int32_t jobs,
                   std::ostream& log_stream) {
  if (seeds.empty()) throw ValidationError("no seeds to run");
  std::filesystem::create_directories(out_dir);
  RunLog log(log_stream);
  if (cfg.kind == "dynamics") return run_dynamics(cfg, seeds, out_dir, jobs, log);
  if (cfg.kind == "lowerbound")
    return run_lowerbound(cfg, seeds, out_dir, jobs, log);
  if (cfg.kind == "lemmas") return run_lemmas(cfg, seeds, out_dir, jobs, log);
  if (cfg.kind == "nfce") return run_nfce(cfg, seeds, out_dir, jobs, log);
  throw ValidationError("unknown kind '" + cfg.kind + "'");
}

}  // namespace swapreg::cli

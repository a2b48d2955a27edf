#ifndef HCDIST_EXPERIMENT_HPP
#define HCDIST_EXPERIMENT_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hcdist/dhc.hpp"
#include "hcdist/graph.hpp"
#include "hcdist/rotation.hpp"
#include "hcdist/runtime.hpp"
#include "hcdist/upcast.hpp"
#include "hcdist/verify.hpp"

namespace hcdist {

/// Invalid experiment parameters; the CLI maps it to a nonzero exit.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Algo : std::uint8_t { Dra, Dhc1, Dhc2, Upcast };

constexpr std::string_view to_string(Algo a) noexcept {
  switch (a) {
    case Algo::Dra: return "dra";
    case Algo::Dhc1: return "dhc1";
    case Algo::Dhc2: return "dhc2";
    case Algo::Upcast: return "upcast";
  }
  return "?";
}

inline Algo parse_algo(std::string_view s) {
  for (Algo a : {Algo::Dra, Algo::Dhc1, Algo::Dhc2, Algo::Upcast})
    if (to_string(a) == s) return a;
  throw ConfigError("unknown algorithm '" + std::string(s) + "' (dra, dhc1, dhc2, upcast)");
}

struct ExperimentConfig {
  Algo algo = Algo::Dra;
  std::size_t n = 0;
  std::optional<double> p;  // explicit edge probability; else c ln n / n^delta
  double c = 1.0;
  double delta = 0.5;  // also sets DHC2's color count
  std::uint64_t seed = 1;
  std::uint32_t trials = 1;
  std::uint32_t retries = 0;
  double cprime = 3.0;
  double max_steps_mult = 1.0;
  std::uint64_t max_rounds = 0;  // 0: runtime default
  std::uint32_t num_colors = 0;  // 0: algorithm default
};

/// The edge probability a config asks for; never clamped.
inline double edge_probability(const ExperimentConfig& cfg) {
  if (cfg.n < 1) throw ConfigError("n must be at least 1");
  double p = 0;
  if (cfg.p) {
    p = *cfg.p;
  } else {
    const double n = static_cast<double>(cfg.n);
    p = cfg.c * std::log(n) / std::pow(n, cfg.delta);
  }
  if (!(p >= 0)) throw ConfigError("edge probability must be non-negative");
  if (p > 1) {
    std::ostringstream os;
    os << "edge probability p = " << p << " exceeds 1";
    if (!cfg.p) os << " for c = " << cfg.c << ", n = " << cfg.n << ", delta = " << cfg.delta;
    throw ConfigError(os.str());
  }
  return p;
}

inline void validate(const ExperimentConfig& cfg) {
  edge_probability(cfg);
  if (cfg.trials < 1) throw ConfigError("trials must be at least 1");
  if (cfg.cprime <= 0) throw ConfigError("cprime must be positive");
  if (cfg.max_steps_mult <= 0) throw ConfigError("max-steps-mult must be positive");
  if (cfg.algo == Algo::Dhc2 && !(cfg.delta > 0 && cfg.delta <= 1)) throw ConfigError("dhc2 needs delta in (0, 1]");
}

/// Graph seed of a trial; seeds advance by one per trial.
inline std::uint64_t trial_seed(const ExperimentConfig& cfg, std::uint32_t trial) { return cfg.seed + trial; }

/// Algorithm seed of an attempt. The first attempt reuses the trial seed;
/// retries keep the graph and draw fresh algorithm randomness.
inline std::uint64_t attempt_seed(std::uint64_t trial_seed, std::uint32_t attempt) {
  return attempt == 0 ? trial_seed : hash_combine(trial_seed, 0x7265747279ULL, attempt);
}

// ---- result rows ------------------------------------------------------------

inline constexpr std::string_view kCsvHeader =
    "algo,n,p,c,delta,seed,trial,success,rounds,steps,messages,phase1_rounds,phase2_rounds,"
    "peak_mem_max_node,peak_mem_root,failure_reason,wall_ms";

struct ResultRow {
  Algo algo = Algo::Dra;
  std::size_t n = 0;
  double p = 0;
  std::optional<double> c;  // absent when p was given explicitly
  double delta = 0;
  std::uint64_t seed = 0;
  std::uint32_t trial = 0;
  bool success = false;
  std::uint64_t rounds = 0;
  std::uint64_t steps = 0;
  std::uint64_t messages = 0;
  std::uint64_t phase1_rounds = 0;
  std::uint64_t phase2_rounds = 0;
  std::uint64_t peak_mem_max_node = 0;
  std::uint64_t peak_mem_root = 0;
  std::string failure_reason;
  double wall_ms = 0;
};

/// Shortest-form text that parses back to the same double.
inline std::string format_double(double x) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << x;
  return os.str();
}

/// One CSV line without the newline; wall_ms is optional so determinism
/// checks can compare the rest byte for byte.
inline std::string to_csv(const ResultRow& r, bool with_wall = true) {
  std::ostringstream os;
  os << to_string(r.algo) << ',' << r.n << ',' << format_double(r.p) << ',' << (r.c ? format_double(*r.c) : "")
     << ',' << format_double(r.delta) << ',' << r.seed << ',' << r.trial << ',' << (r.success ? 1 : 0) << ','
     << r.rounds << ',' << r.steps << ',' << r.messages << ',' << r.phase1_rounds << ',' << r.phase2_rounds << ','
     << r.peak_mem_max_node << ',' << r.peak_mem_root << ',' << r.failure_reason << ',';
  if (with_wall) os << std::fixed << std::setprecision(1) << r.wall_ms;
  return os.str();
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out(1);
  for (char ch : line) {
    if (ch == ',') out.emplace_back();
    else out.back() += ch;
  }
  return out;
}

inline ResultRow parse_row(const std::string& line) {
  const auto f = split_csv(line);
  if (f.size() != 17) throw std::runtime_error("result row needs 17 columns: " + line);
  ResultRow r;
  r.algo = parse_algo(f[0]);
  r.n = std::stoull(f[1]);
  r.p = std::stod(f[2]);
  if (!f[3].empty()) r.c = std::stod(f[3]);
  r.delta = std::stod(f[4]);
  r.seed = std::stoull(f[5]);
  r.trial = static_cast<std::uint32_t>(std::stoul(f[6]));
  r.success = f[7] == "1";
  r.rounds = std::stoull(f[8]);
  r.steps = std::stoull(f[9]);
  r.messages = std::stoull(f[10]);
  r.phase1_rounds = std::stoull(f[11]);
  r.phase2_rounds = std::stoull(f[12]);
  r.peak_mem_max_node = std::stoull(f[13]);
  r.peak_mem_root = std::stoull(f[14]);
  r.failure_reason = f[15];
  r.wall_ms = f[16].empty() ? 0 : std::stod(f[16]);
  return r;
}

inline std::vector<ResultRow> read_results(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) throw std::runtime_error("missing result header");
  std::vector<ResultRow> rows;
  while (std::getline(is, line))
    if (!line.empty()) rows.push_back(parse_row(line));
  return rows;
}

// ---- running ----------------------------------------------------------------

/// Everything one algorithm run produced, normalized across algorithms.
struct RunOutcome {
  SimulationReport report;
  HcCertificate certificate;
  std::uint64_t steps = 0;
  std::uint64_t phase1_rounds = 0;
  std::uint64_t phase2_rounds = 0;
  NodeId root = 0;  // upcast: tree root; otherwise node 0, the elected leader
  std::uint32_t tree_depth = 0;          // upcast only
  std::vector<std::uint32_t> colors;     // DHC only, initial color per node
  std::vector<std::size_t> class_sizes;  // DHC only, by color
  std::vector<MergeLevelStats> levels;   // DHC2 only
};

inline RunOutcome run_algorithm(const ExperimentConfig& cfg, const Graph& g, std::uint64_t seed,
                                std::ostream* transcript = nullptr) {
  Budgets budgets{cfg.max_rounds, cfg.max_steps_mult};
  RunOutcome o;
  switch (cfg.algo) {
    case Algo::Dra: {
      auto r = run_dra(g, seed, budgets, {}, transcript);
      o.report = std::move(r.report);
      o.certificate = std::move(r.certificate);
      o.phase1_rounds = o.report.phase_total("setup");
      o.phase2_rounds = o.report.phase_total("dra");
      break;
    }
    case Algo::Dhc1:
    case Algo::Dhc2: {
      DhcOptions opt{cfg.num_colors, budgets, transcript};
      auto r = cfg.algo == Algo::Dhc1 ? dhc1(g, seed, opt) : dhc2(g, seed, cfg.delta, opt);
      o.report = std::move(r.report);
      o.certificate = std::move(r.certificate);
      o.colors = std::move(r.colors);
      o.class_sizes = std::move(r.class_sizes);
      o.levels = std::move(r.levels);
      o.phase1_rounds = o.report.phase_total("phase1:");
      o.phase2_rounds = o.report.phase_total("phase2:");
      break;
    }
    case Algo::Upcast: {
      UpcastOptions opt;
      opt.cprime = cfg.cprime;
      opt.budgets = budgets;
      opt.transcript = transcript;
      auto r = upcast(g, seed, opt);
      o.report = std::move(r.report);
      o.certificate = std::move(r.certificate);
      o.phase1_rounds = o.report.phase_total("phase1:");
      o.phase2_rounds = o.report.phase_total("phase2:");
      o.steps = r.solve_steps;
      o.root = r.tree.root == kNoNode ? 0 : r.tree.root;
      o.tree_depth = r.tree.depth;
      break;
    }
  }
  if (cfg.algo != Algo::Upcast) o.steps = o.report.steps;
  // Every reported success must survive the global checker.
  if (o.report.success && !check_certificate(g, o.certificate).ok())
    throw std::logic_error(std::string(to_string(cfg.algo)) + " reported success with a rejected certificate");
  return o;
}

struct TrialResult {
  ResultRow row;
  RunOutcome outcome;
  std::uint32_t attempts = 0;
};

/// One trial: build the graph, run up to 1 + retries attempts, keep the
/// last attempt's numbers.
inline TrialResult run_trial(const ExperimentConfig& cfg, std::uint32_t trial, std::ostream* transcript = nullptr) {
  const double p = edge_probability(cfg);
  const std::uint64_t gseed = trial_seed(cfg, trial);
  const auto t0 = std::chrono::steady_clock::now();
  Graph g = generate_gnp({cfg.n, p, gseed});
  TrialResult tr;
  for (std::uint32_t a = 0; a <= cfg.retries; ++a) {
    if (transcript) *transcript << "# trial " << trial << " attempt " << a << '\n';
    tr.outcome = run_algorithm(cfg, g, attempt_seed(gseed, a), transcript);
    tr.attempts = a + 1;
    if (tr.outcome.report.success) break;
  }
  const auto& rep = tr.outcome.report;
  ResultRow& r = tr.row;
  r.algo = cfg.algo;
  r.n = cfg.n;
  r.p = p;
  if (!cfg.p) r.c = cfg.c;
  r.delta = cfg.delta;
  r.seed = gseed;
  r.trial = trial;
  r.success = rep.success;
  r.rounds = rep.rounds;
  r.steps = tr.outcome.steps;
  r.messages = rep.messages;
  r.phase1_rounds = tr.outcome.phase1_rounds;
  r.phase2_rounds = tr.outcome.phase2_rounds;
  r.peak_mem_max_node = rep.peak_memory_max();
  r.peak_mem_root = rep.peak_memory_words.empty() ? 0 : rep.peak_memory_words[tr.outcome.root];
  r.failure_reason = rep.failure_reason ? std::string(to_string(*rep.failure_reason)) : std::string();
  r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return tr;
}

/// Runs every trial in order. Each row reaches `csv` as one flushed write;
/// `on_trial` sees the full result (certificates, per-level stats).
inline std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg, std::ostream* csv = nullptr,
                                             std::ostream* transcript = nullptr,
                                             const std::function<void(const TrialResult&)>& on_trial = {}) {
  validate(cfg);
  std::vector<ResultRow> rows;
  for (std::uint32_t t = 0; t < cfg.trials; ++t) {
    TrialResult tr = run_trial(cfg, t, transcript);
    if (on_trial) on_trial(tr);
    if (csv) {
      *csv << to_csv(tr.row) + '\n';
      csv->flush();
    }
    rows.push_back(std::move(tr.row));
  }
  return rows;
}

// ---- certificates ---------------------------------------------------------

inline std::string certificate_name(const ResultRow& r) {
  std::ostringstream os;
  os << to_string(r.algo) << "_n" << r.n << "_seed" << r.seed << ".cert";
  return os.str();
}

inline void store_certificate(const std::filesystem::path& dir, const ResultRow& r, const HcCertificate& cert) {
  std::filesystem::create_directories(dir);
  std::ofstream os(dir / certificate_name(r));
  write_certificate(os, cert);
  if (!os) throw std::runtime_error("cannot write certificate to " + (dir / certificate_name(r)).string());
}

struct ReverifyResult {
  std::size_t checked = 0;
  std::vector<std::string> failures;  // one line per rejected or missing certificate
};

/// Regenerates each success row's graph and checks its stored certificate.
inline ReverifyResult reverify(const std::vector<ResultRow>& rows, const std::filesystem::path& dir) {
  ReverifyResult out;
  for (const auto& r : rows) {
    if (!r.success) continue;
    ++out.checked;
    const auto path = dir / certificate_name(r);
    std::ifstream is(path);
    if (!is) {
      out.failures.push_back(path.string() + ": missing");
      continue;
    }
    const Graph g = generate_gnp({r.n, r.p, r.seed});
    const CheckResult res = check_certificate(g, read_certificate(is));
    if (!res.ok()) out.failures.push_back(path.string() + ": " + std::string(to_string(res.failure)));
  }
  return out;
}

// ---- sweeps -----------------------------------------------------------------

/// Median over successful rows; nullopt when none succeeded.
inline std::optional<double> median_rounds(const std::vector<ResultRow>& rows) {
  std::vector<double> r;
  for (const auto& row : rows)
    if (row.success) r.push_back(static_cast<double>(row.rounds));
  if (r.empty()) return std::nullopt;
  std::sort(r.begin(), r.end());
  const std::size_t m = r.size() / 2;
  return r.size() % 2 ? r[m] : (r[m - 1] + r[m]) / 2;
}

struct SweepPoint {
  std::size_t n = 0;
  std::optional<double> median_rounds;
  std::uint32_t successes = 0;
  std::uint32_t trials = 0;
};

struct SweepRatio {
  std::size_t n1 = 0, n2 = 0;
  std::optional<double> measured;  // rounds(n2) / rounds(n1)
  double predicted = 0;            // (n2/n1)^delta * (ln n2 / ln n1)^2
};

struct SweepReport {
  std::vector<ResultRow> rows;
  std::vector<SweepPoint> points;
  std::vector<SweepRatio> ratios;
};

inline double predicted_ratio(std::size_t n1, std::size_t n2, double delta) {
  const double a = static_cast<double>(n1), b = static_cast<double>(n2);
  const double l = std::log(b) / std::log(a);
  return std::pow(b / a, delta) * l * l;
}

inline SweepReport sweep(ExperimentConfig cfg, const std::vector<std::size_t>& ns, std::ostream* csv = nullptr,
                         std::ostream* transcript = nullptr) {
  if (ns.size() < 2) throw ConfigError("a sweep needs at least two values of n");
  for (std::size_t n : ns) {
    cfg.n = n;
    validate(cfg);
  }
  SweepReport rep;
  for (std::size_t n : ns) {
    cfg.n = n;
    auto rows = run_experiment(cfg, csv, transcript);
    SweepPoint pt;
    pt.n = n;
    pt.median_rounds = median_rounds(rows);
    pt.trials = static_cast<std::uint32_t>(rows.size());
    for (const auto& r : rows) pt.successes += r.success ? 1 : 0;
    rep.points.push_back(pt);
    rep.rows.insert(rep.rows.end(), rows.begin(), rows.end());
  }
  for (std::size_t i = 0; i + 1 < rep.points.size(); ++i) {
    SweepRatio r;
    r.n1 = rep.points[i].n;
    r.n2 = rep.points[i + 1].n;
    if (rep.points[i].median_rounds && rep.points[i + 1].median_rounds && *rep.points[i].median_rounds > 0)
      r.measured = *rep.points[i + 1].median_rounds / *rep.points[i].median_rounds;
    r.predicted = predicted_ratio(r.n1, r.n2, cfg.delta);
    rep.ratios.push_back(r);
  }
  return rep;
}

inline void write_sweep_report(std::ostream& os, const SweepReport& rep) {
  os << "n,median_rounds,successes,trials\n";
  for (const auto& p : rep.points)
    os << p.n << ',' << (p.median_rounds ? format_double(*p.median_rounds) : "") << ',' << p.successes << ','
       << p.trials << '\n';
  os << "n1,n2,measured_ratio,predicted_ratio\n";
  for (const auto& r : rep.ratios)
    os << r.n1 << ',' << r.n2 << ',' << (r.measured ? format_double(*r.measured) : "") << ','
       << format_double(r.predicted) << '\n';
}

/// A matplotlib script that plots median rounds against n from a result CSV.
inline std::string plot_script(const std::string& csv_path) {
  return "import sys\n"
         "import pandas as pd\n"
         "import matplotlib.pyplot as plt\n\n"
         "path = sys.argv[1] if len(sys.argv) > 1 else '" + csv_path + "'\n"
         "df = pd.read_csv(path)\n"
         "ok = df[df.success == 1]\n"
         "for algo, part in ok.groupby('algo'):\n"
         "    med = part.groupby('n').rounds.median()\n"
         "    plt.loglog(med.index, med.values, marker='o', label=algo)\n"
         "plt.xlabel('n')\n"
         "plt.ylabel('median rounds')\n"
         "plt.legend()\n"
         "plt.savefig(path + '.png', dpi=150)\n";
}

}  // namespace hcdist

#endif  // HCDIST_EXPERIMENT_HPP

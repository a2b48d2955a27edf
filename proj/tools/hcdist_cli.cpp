// Experiment harness: run trials, sweep n, re-verify certificates, dump graphs.
//
// Exit codes: 0 when every trial ran (success or algorithmic failure),
// 1 when verify-cert rejects something, 2 on a config error, 3 on IO errors.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include "hcdist/experiment.hpp"

using namespace hcdist;

namespace {

constexpr int kExitRejected = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Cli {
  ExperimentConfig cfg;
  std::string algo = "dra";
  double p = -1;  // negative: derive from c and delta
  std::string out;
  std::string transcript;
  std::string cert_dir;
  std::vector<std::size_t> ns;
  std::string results;
  std::string cert;
  std::string graph;

  ExperimentConfig config() {
    cfg.algo = parse_algo(algo);
    if (p >= 0) cfg.p = p;
    return cfg;
  }
};

std::unique_ptr<std::ofstream> open_out(const std::string& path, std::ios::openmode mode) {
  auto os = std::make_unique<std::ofstream>(path, mode);
  if (!*os) throw IoError("cannot open " + path);
  return os;
}

/// Appends to a result CSV, writing the header only into a new or empty file.
std::unique_ptr<std::ofstream> open_csv(const std::string& path) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  auto os = open_out(path, std::ios::app);
  if (fresh) *os << kCsvHeader << '\n' << std::flush;
  return os;
}

void summarize(const std::vector<ResultRow>& rows) {
  std::size_t ok = 0;
  for (const auto& r : rows) ok += r.success ? 1 : 0;
  std::cerr << ok << '/' << rows.size() << " trials succeeded\n";
}

std::function<void(const TrialResult&)> certificate_sink(const std::string& dir) {
  if (dir.empty()) return {};
  return [dir](const TrialResult& tr) {
    if (tr.row.success) store_certificate(dir, tr.row, tr.outcome.certificate);
  };
}

int cmd_run(Cli& cli) {
  const ExperimentConfig cfg = cli.config();
  validate(cfg);
  std::unique_ptr<std::ofstream> csv, tr;
  if (!cli.out.empty()) csv = open_csv(cli.out);
  if (!cli.transcript.empty()) tr = open_out(cli.transcript, std::ios::trunc);
  std::ostream* sink = csv ? static_cast<std::ostream*>(csv.get()) : &std::cout;
  if (!csv) std::cout << kCsvHeader << '\n';
  auto rows = run_experiment(cfg, sink, tr.get(), certificate_sink(cli.cert_dir));
  summarize(rows);
  return 0;
}

int cmd_sweep(Cli& cli) {
  ExperimentConfig cfg = cli.config();
  if (cli.ns.size() < 2) throw ConfigError("a sweep needs at least two values of n");
  for (std::size_t n : cli.ns) {
    cfg.n = n;
    validate(cfg);
  }
  std::unique_ptr<std::ofstream> csv, tr;
  if (!cli.out.empty()) csv = open_csv(cli.out);
  if (!cli.transcript.empty()) tr = open_out(cli.transcript, std::ios::trunc);
  auto rep = sweep(cfg, cli.ns, csv.get(), tr.get());
  write_sweep_report(std::cout, rep);
  summarize(rep.rows);
  if (!cli.out.empty()) {
    const std::string script = cli.out + ".plot.py";
    *open_out(script, std::ios::trunc) << plot_script(cli.out);
    std::cerr << "plot script: " << script << '\n';
  }
  return 0;
}

int cmd_verify(Cli& cli) {
  if (!cli.results.empty()) {
    if (cli.cert_dir.empty()) throw ConfigError("verify-cert --results needs --cert-dir");
    std::ifstream is(cli.results);
    if (!is) throw IoError("cannot open " + cli.results);
    auto res = reverify(read_results(is), cli.cert_dir);
    for (const auto& f : res.failures) std::cout << "REJECT " << f << '\n';
    std::cout << res.checked - res.failures.size() << '/' << res.checked << " certificates accepted\n";
    return res.failures.empty() ? 0 : kExitRejected;
  }
  if (cli.cert.empty()) throw ConfigError("verify-cert needs --results or --cert");
  Graph g;
  if (!cli.graph.empty()) {
    std::ifstream gs(cli.graph);
    if (!gs) throw IoError("cannot open " + cli.graph);
    g = read_graph(gs);
  } else {
    const ExperimentConfig cfg = cli.config();
    g = generate_gnp({cfg.n, edge_probability(cfg), cfg.seed});
  }
  std::ifstream cs(cli.cert);
  if (!cs) throw IoError("cannot open " + cli.cert);
  const CheckResult res = check_certificate(g, read_certificate(cs));
  if (res.ok()) {
    std::cout << "ACCEPT\n";
    return 0;
  }
  std::cout << "REJECT " << to_string(res.failure);
  if (res.u != kNoNode) std::cout << ' ' << res.u;
  if (res.v != kNoNode) std::cout << ' ' << res.v;
  std::cout << '\n';
  return kExitRejected;
}

int cmd_dump_graph(Cli& cli) {
  const ExperimentConfig cfg = cli.config();
  const Graph g = generate_gnp({cfg.n, edge_probability(cfg), cfg.seed});
  if (cli.out.empty()) {
    write_graph(std::cout, g);
  } else {
    write_graph(*open_out(cli.out, std::ios::trunc), g);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed Hamiltonian cycle experiments on G(n,p)"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "Read 'key = value' defaults from a file; flags override it");

  Cli cli;
  auto& c = cli.cfg;
  app.add_option("--algo", cli.algo, "dra, dhc1, dhc2 or upcast")->capture_default_str();
  app.add_option("--n", c.n, "Number of nodes");
  app.add_option("--p", cli.p, "Edge probability; overrides --c and --delta");
  app.add_option("--c", c.c, "Constant c in p = c ln n / n^delta")->capture_default_str();
  app.add_option("--delta", c.delta, "Exponent delta in p = c ln n / n^delta")->capture_default_str();
  app.add_option("--cprime", c.cprime, "Upcast samples per node: ceil(cprime ln n)")->capture_default_str();
  app.add_option("--seed", c.seed, "First graph seed; trial t uses seed + t")->capture_default_str();
  app.add_option("--trials", c.trials, "Number of trials")->capture_default_str();
  app.add_option("--retries", c.retries, "Extra attempts per failed trial on the same graph")->capture_default_str();
  app.add_option("--max-steps-mult", c.max_steps_mult, "Scale of the 7 s ln s step budget")->capture_default_str();
  app.add_option("--max-rounds", c.max_rounds, "Round budget; 0 picks the default");
  app.add_option("--num-colors", c.num_colors, "Partition count for dhc1/dhc2; 0 picks the default");
  app.add_option("--out", cli.out, "Result CSV (appended), or graph file for dump-graph");
  app.add_option("--transcript", cli.transcript, "Write the message transcript here");
  app.add_option("--cert-dir", cli.cert_dir, "Directory of per-trial certificates");

  auto* run = app.add_subcommand("run", "Run trials and emit one CSV row each");
  auto* sw = app.add_subcommand("sweep", "Run trials for several n and report round ratios");
  sw->add_option("--ns", cli.ns, "Values of n, at least two")->required()->expected(1, -1);
  auto* ver = app.add_subcommand("verify-cert", "Check certificates against regenerated graphs");
  ver->add_option("--results", cli.results, "Result CSV whose success rows are re-verified");
  ver->add_option("--cert", cli.cert, "A single certificate file");
  ver->add_option("--graph", cli.graph, "Graph file for --cert; else the graph is regenerated");
  auto* dump = app.add_subcommand("dump-graph", "Write the generated graph as an edge list");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(cli);
    if (*sw) return cmd_sweep(cli);
    if (*ver) return cmd_verify(cli);
    if (*dump) return cmd_dump_graph(cli);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return 0;
}

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "hcdist/experiment.hpp"

using namespace hcdist;

namespace {

std::string csv_without_wall(const std::vector<ResultRow>& rows) {
  std::string s;
  for (const auto& r : rows) s += to_csv(r, false) + '\n';
  return s;
}

}  // namespace

TEST(Experiment, AlgoNamesRoundTrip) {
  for (Algo a : {Algo::Dra, Algo::Dhc1, Algo::Dhc2, Algo::Upcast}) EXPECT_EQ(parse_algo(to_string(a)), a);
  EXPECT_THROW(parse_algo("dhc3"), ConfigError);
}

TEST(Experiment, DerivedProbabilityAboveOneIsRejected) {
  ExperimentConfig cfg;
  cfg.algo = Algo::Dhc1;
  cfg.n = 16;
  cfg.c = 86;
  cfg.delta = 0.5;
  try {
    edge_probability(cfg);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("c = 86"), std::string::npos) << msg;
    EXPECT_NE(msg.find("n = 16"), std::string::npos) << msg;
    EXPECT_NE(msg.find("delta = 0.5"), std::string::npos) << msg;
  }
  EXPECT_THROW(run_experiment(cfg), ConfigError);
}

TEST(Experiment, DerivedProbability) {
  ExperimentConfig cfg;
  cfg.n = 4096;
  cfg.c = 3;
  cfg.delta = 0.5;
  EXPECT_DOUBLE_EQ(edge_probability(cfg), 3 * std::log(4096.0) / 64);
  cfg.p = 0.25;
  EXPECT_DOUBLE_EQ(edge_probability(cfg), 0.25);
  cfg.p = 1.5;
  EXPECT_THROW(edge_probability(cfg), ConfigError);
  cfg.p = 0.25;
  cfg.trials = 0;
  EXPECT_THROW(validate(cfg), ConfigError);
}

TEST(Experiment, DraRowsAreDeterministic) {
  ExperimentConfig cfg;
  cfg.algo = Algo::Dra;
  cfg.n = 100;
  cfg.p = 0.5;
  cfg.trials = 3;
  cfg.seed = 1;
  std::ostringstream csv1, csv2, t1, t2;
  auto a = run_experiment(cfg, &csv1, &t1);
  auto b = run_experiment(cfg, &csv2, &t2);
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(csv_without_wall(a), csv_without_wall(b));
  EXPECT_EQ(t1.str(), t2.str());
  for (std::uint32_t t = 0; t < 3; ++t) {
    EXPECT_EQ(a[t].trial, t);
    EXPECT_EQ(a[t].seed, 1u + t);
    EXPECT_FALSE(a[t].c.has_value());
    EXPECT_EQ(a[t].rounds, a[t].phase1_rounds + a[t].phase2_rounds);
  }
}

TEST(Experiment, TrialIsReproducibleInIsolation) {
  ExperimentConfig cfg;
  cfg.algo = Algo::Dra;
  cfg.n = 60;
  cfg.p = 0.4;
  cfg.trials = 3;
  auto all = run_experiment(cfg);
  auto single = run_trial(cfg, 2);
  EXPECT_EQ(to_csv(all[2], false), to_csv(single.row, false));
}

TEST(Experiment, RetriesKeepTheGraphAndReportTheLastAttempt) {
  // A path has no Hamiltonian cycle, so every attempt fails.
  ExperimentConfig cfg;
  cfg.algo = Algo::Upcast;
  cfg.n = 30;
  cfg.p = 0.05;
  cfg.retries = 2;
  auto tr = run_trial(cfg, 0);
  if (!tr.row.success) {
    EXPECT_EQ(tr.attempts, 3u);
  }
  EXPECT_NE(attempt_seed(5, 1), attempt_seed(5, 0));
  EXPECT_NE(attempt_seed(5, 1), attempt_seed(5, 2));
  EXPECT_EQ(attempt_seed(5, 0), 5u);
}

TEST(Experiment, CsvRoundTrip) {
  ResultRow r;
  r.algo = Algo::Dhc2;
  r.n = 4096;
  r.p = 4 * std::log(4096.0) / 64;
  r.c = 4;
  r.delta = 0.5;
  r.seed = 12;
  r.trial = 3;
  r.success = false;
  r.rounds = 5000;
  r.failure_reason = "NoBridgeFound";
  r.wall_ms = 12.5;
  std::stringstream ss;
  ss << kCsvHeader << '\n' << to_csv(r) << '\n';
  auto rows = read_results(ss);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(to_csv(rows[0]), to_csv(r));
  EXPECT_EQ(rows[0].p, r.p);  // exact, so the graph can be regenerated
  EXPECT_EQ(std::count(kCsvHeader.begin(), kCsvHeader.end(), ','), 16);
  std::stringstream bad("algo,n\n");
  EXPECT_THROW(read_results(bad), std::runtime_error);
}

TEST(Experiment, StoredCertificatesReverify) {
  const auto dir = std::filesystem::temp_directory_path() / "hcdist_test_certs";
  std::filesystem::remove_all(dir);
  ExperimentConfig cfg;
  cfg.algo = Algo::Dra;
  cfg.n = 80;
  cfg.c = 2;
  cfg.delta = 0.5;
  cfg.trials = 4;
  auto rows = run_experiment(cfg, nullptr, nullptr, [&](const TrialResult& tr) {
    if (tr.row.success) store_certificate(dir, tr.row, tr.outcome.certificate);
  });
  std::stringstream ss;
  ss << kCsvHeader << '\n';
  for (const auto& r : rows) ss << to_csv(r) << '\n';
  auto loaded = read_results(ss);
  auto res = reverify(loaded, dir);
  EXPECT_GT(res.checked, 0u);
  EXPECT_TRUE(res.failures.empty()) << res.failures.front();
  // A tampered certificate is caught.
  for (const auto& r : loaded) {
    if (!r.success) continue;
    HcCertificate bad(r.n);
    store_certificate(dir, r, bad);
    EXPECT_EQ(reverify(loaded, dir).failures.size(), 1u);
    break;
  }
  std::filesystem::remove_all(dir);
}

TEST(Sweep, SingleNIsAnError) {
  ExperimentConfig cfg;
  cfg.algo = Algo::Dra;
  cfg.p = 0.5;
  EXPECT_THROW(sweep(cfg, {100}), ConfigError);
  EXPECT_THROW(sweep(cfg, {}), ConfigError);
}

TEST(Sweep, ReportsMediansAndPredictedRatios) {
  ExperimentConfig cfg;
  cfg.algo = Algo::Dra;
  cfg.c = 1;
  cfg.delta = 0.5;
  cfg.trials = 3;
  auto rep = sweep(cfg, {64, 128});
  ASSERT_EQ(rep.points.size(), 2u);
  ASSERT_EQ(rep.ratios.size(), 1u);
  EXPECT_EQ(rep.rows.size(), 6u);
  EXPECT_NEAR(rep.ratios[0].predicted, std::sqrt(2.0) * std::pow(std::log(128.0) / std::log(64.0), 2), 1e-12);
  if (rep.points[0].median_rounds && rep.points[1].median_rounds) {
    EXPECT_DOUBLE_EQ(*rep.ratios[0].measured, *rep.points[1].median_rounds / *rep.points[0].median_rounds);
  }
  std::ostringstream os;
  write_sweep_report(os, rep);
  EXPECT_NE(os.str().find("measured_ratio"), std::string::npos);
}

TEST(Sweep, MedianUsesSuccessesOnly) {
  std::vector<ResultRow> rows(4);
  rows[0].success = true, rows[0].rounds = 10;
  rows[1].success = true, rows[1].rounds = 30;
  rows[2].success = false, rows[2].rounds = 1000;
  rows[3].success = true, rows[3].rounds = 20;
  EXPECT_EQ(median_rounds(rows), 20.0);
  rows[3].success = false;
  EXPECT_EQ(median_rounds(rows), 20.0);
  for (auto& r : rows) r.success = false;
  EXPECT_FALSE(median_rounds(rows).has_value());
}

TEST(Experiment, PlotScriptReadsTheCsv) {
  const std::string s = plot_script("out.csv");
  EXPECT_NE(s.find("out.csv"), std::string::npos);
  EXPECT_NE(s.find("matplotlib"), std::string::npos);
}

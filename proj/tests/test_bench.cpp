#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "sgnav/bench.hpp"

using namespace sgnav;
namespace fs = std::filesystem;

namespace {

SuiteSpec small_spec(int n) {
  SuiteSpec s;
  s.count = n;
  s.seed = 500;
  s.sim.width = 9.0;
  s.sim.depth = 8.0;
  s.sim.rooms_per_floor = 4;
  s.episodes.step_budget = 80;
  return s;
}

fs::path temp_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Bench, ZeroEpisodesGiveEmptyReports) {
  BenchConfig cfg;
  cfg.variants = {AgentVariant::A, AgentVariant::E};
  BenchOutput out = run_benchmark({}, cfg);
  ASSERT_EQ(out.reports.size(), 2u);
  for (const auto& r : out.reports) {
    EXPECT_TRUE(r.rows.empty());
    EXPECT_EQ(r.sr, 0.0);
  }
  EXPECT_NE(table_markdown(out.reports).find("| a | 0 |"), std::string::npos);
}

TEST(Bench, SuiteIsDeterministicAndSized) {
  Suite a = make_suite(small_spec(4)), b = make_suite(small_spec(4));
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].episode.to_json().dump(), b[i].episode.to_json().dump());
    EXPECT_EQ(a[i].episode.id, static_cast<int>(i));
  }
}

TEST(Bench, DecoySuitePlantsLookalikesOfTheTarget) {
  SuiteSpec s = small_spec(3);
  s.decoys = 2;
  for (const SuiteEpisode& e : make_suite(s)) {
    int n = 0;
    for (const SceneObject& o : e.scene->objects)
      if (o.decoy) {
        ++n;
        EXPECT_EQ(o.detected_as, e.episode.target);
      }
    EXPECT_EQ(n, 2);
  }
}

TEST(Bench, ParallelMatchesSerialAndAggregatesRecompute) {
  Suite suite = make_suite(small_spec(3));
  BenchConfig cfg;
  cfg.variants = {AgentVariant::A, AgentVariant::D};
  BenchOutput serial = run_benchmark(suite, cfg);
  cfg.workers = 3;
  BenchOutput par = run_benchmark(suite, cfg);
  EXPECT_EQ(reports_csv(serial.reports), reports_csv(par.reports));
  ASSERT_EQ(serial.traces.size(), par.traces.size());
  for (std::size_t v = 0; v < serial.traces.size(); ++v)
    for (std::size_t i = 0; i < suite.size(); ++i) {
      ASSERT_EQ(serial.traces[v][i].size(), par.traces[v][i].size());
      for (std::size_t k = 0; k < serial.traces[v][i].size(); ++k)
        ASSERT_EQ(serial.traces[v][i][k].dump(), par.traces[v][i][k].dump());
    }
  for (MetricsReport r : serial.reports) {
    double sr = r.sr, spl_mean = r.mean_spl;
    r.recompute();
    EXPECT_DOUBLE_EQ(r.sr, sr);
    EXPECT_DOUBLE_EQ(r.mean_spl, spl_mean);
    for (const EpisodeRow& row : r.rows) {
      EXPECT_LE(row.spl, row.success ? 1.0 : 0.0);
      if (row.spl > 0) EXPECT_TRUE(row.success);
    }
  }
}

TEST(Bench, SaveLoadRoundTripAndMissingScenes) {
  Suite suite = make_suite(small_spec(2));
  fs::path dir = temp_dir("sgnav_suite_test");
  save_suite(suite, dir.string());
  Suite back = load_suite((dir / "episodes.jsonl").string());
  ASSERT_EQ(back.size(), suite.size());
  for (std::size_t i = 0; i < suite.size(); ++i) {
    EXPECT_EQ(back[i].episode.to_json().dump(), suite[i].episode.to_json().dump());
    EXPECT_EQ(back[i].scene->to_json().dump(), suite[i].scene->to_json().dump());
  }
  fs::remove(dir / suite[0].episode.scene);
  try {
    load_suite((dir / "episodes.jsonl").string());
    FAIL() << "expected a missing-file error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find(suite[0].episode.scene), std::string::npos);
  }
  fs::remove_all(dir);
}

TEST(Bench, WritesReportFiles) {
  Suite suite = make_suite(small_spec(1));
  BenchConfig cfg;
  cfg.variants = {AgentVariant::A};
  BenchOutput out = run_benchmark(suite, cfg);
  fs::path dir = temp_dir("sgnav_bench_out");
  write_bench_output(out, dir.string());
  for (const char* f : {"report.csv", "table.md", "summary.json", "traces_a.jsonl"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  std::ifstream in(dir / "traces_a.jsonl");
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j["episode_id"], 0);
    ++n;
  }
  EXPECT_EQ(n, out.reports[0].rows[0].steps);
  fs::remove_all(dir);
}

TEST(Bench, SuiteSpecJson) {
  SuiteSpec s = small_spec(7);
  s.decoys = 1;
  EXPECT_EQ(SuiteSpec::from_json(nlohmann::json::parse(s.to_json().dump())).to_json().dump(), s.to_json().dump());
  auto bad = s.to_json();
  bad["episodez"] = 3;
  EXPECT_THROW(SuiteSpec::from_json(bad), ConfigError);
}

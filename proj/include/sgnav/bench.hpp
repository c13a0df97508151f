#pragma once

#include <functional>
#include <memory>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "sgnav/agent.hpp"
#include "sgnav/image.hpp"
#include "sgnav/sim.hpp"

namespace sgnav {

struct EpisodeRow {
  int episode_id = 0;
  std::string scene;
  std::string target;
  bool cross_floor = false;
  bool success = false;
  std::string outcome;
  double spl = 0.0;
  double soft_spl = 0.0;
  int steps = 0;
  int collisions = 0;
  double path_length = 0.0;
  double optimal_length = 0.0;
};

struct MetricsReport {
  std::string variant;  // ablation tag
  std::string config_fingerprint;
  std::vector<EpisodeRow> rows;
  double sr = 0.0;  // percent
  double mean_spl = 0.0;
  double mean_soft_spl = 0.0;
  int false_stops = 0;

  // Aggregates from rows; all zero for an empty report.
  void recompute();
  nlohmann::ordered_json to_json() const;
};

// One scene shared by any number of episodes.
struct SuiteEpisode {
  std::shared_ptr<const Scene> scene;
  Episode episode;
};
using Suite = std::vector<SuiteEpisode>;

struct SuiteSpec {
  int count = 200;
  std::uint64_t seed = 0;  // scene i uses seed + i
  SimConfig sim;
  EpisodeGenOptions episodes;
  // Decoys of the episode's own target are planted in every scene.
  int decoys = 0;
  nlohmann::ordered_json to_json() const;
  static SuiteSpec from_json(const nlohmann::json& j);
};

// Deterministic in the spec. Scenes where no episode can be drawn are skipped.
Suite make_suite(const SuiteSpec& spec);
// Episodes JSONL whose `scene` fields name scene files relative to the
// episodes file. Throws Error listing every missing scene file.
Suite load_suite(const std::string& episodes_path);
// Writes scene_<seed>.json files and episodes.jsonl into dir.
void save_suite(const Suite& suite, const std::string& dir);

struct BenchConfig {
  std::vector<AgentVariant> variants = {AgentVariant::A, AgentVariant::B, AgentVariant::C,
                                        AgentVariant::D, AgentVariant::E, AgentVariant::F};
  AgentConfig agent;  // variant field overridden per run
  int workers = 1;
  bool keep_traces = true;
  // Optional per-episode hook, called from worker threads.
  std::function<void(AgentVariant, const EpisodeResult&)> on_episode;
};

struct BenchOutput {
  std::vector<MetricsReport> reports;  // one per variant, config order
  // traces[v][i]: trajectory of episode i under variant v (empty unless kept)
  std::vector<std::vector<std::vector<nlohmann::ordered_json>>> traces;
};

// Every (variant, episode) pair runs on a pool of `workers` threads; results
// are placed by index, so output does not depend on scheduling.
BenchOutput run_benchmark(const Suite& suite, const BenchConfig& cfg);

EpisodeRow make_row(const SuiteEpisode& e, const EpisodeResult& r);
std::string reports_csv(const std::vector<MetricsReport>& reports);
// Table with one row per variant: SR, SPL, SoftSPL, false stops.
std::string table_markdown(const std::vector<MetricsReport>& reports);
// report.csv, table.md, summary.json, traces_<variant>.jsonl.
void write_bench_output(const BenchOutput& out, const std::string& dir);

// Top-down map of one floor (walls dark, free light, stairs tinted, the
// target category's objects green) with the trace poses on that floor drawn
// as a red polyline. `scale` pixels per cell; row 0 is the top (max y).
Image render_episode_map(const Scene& scene, int floor, const std::vector<nlohmann::json>& trace,
                         const std::string& target = "", int scale = 2);

}  // namespace sgnav

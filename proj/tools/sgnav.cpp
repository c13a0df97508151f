#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "sgnav/bench.hpp"
#include "sgnav/imagination.hpp"
#include "sgnav/llm_client.hpp"

using namespace sgnav;
namespace fs = std::filesystem;

namespace {

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(path + ": " + e.what());
  }
}

AgentConfig load_agent_config(const std::string& path) {
  return path.empty() ? AgentConfig{} : AgentConfig::from_json(read_json(path));
}

std::vector<AgentVariant> parse_variants(const std::string& s) {
  std::vector<AgentVariant> out;
  for (char c : s)
    if (c != ',' && c != ' ') out.push_back(variant_from_name(std::string(1, c)));
  if (out.empty()) throw ConfigError("no variants given");
  return out;
}

// Optional LLM adapters; a missing endpoint leaves the built-in ones in place.
void attach_llm(SGImagineNavAgent& agent) {
  auto cfg = LlmConfig::from_env();
  if (!cfg) {
    std::cerr << "warning: SGNAV_LLM_ENDPOINT unset, using the built-in predictor and verifier\n";
    return;
  }
  auto client = std::make_shared<LlmClient>(*cfg);
  agent.set_predictor(std::make_shared<HttpPredictor>(client));
  agent.set_verifier(std::make_shared<HttpVerifier>(client));
}

int gen_scenes(std::uint64_t seed, int floors, int rooms, int count, int per_scene, int decoys, bool cross,
               const std::string& out) {
  SimConfig cfg;
  cfg.floors = floors;
  cfg.rooms_per_floor = rooms;
  cfg.validate();
  fs::create_directories(out);
  std::vector<Episode> eps;
  for (int i = 0; i < count; ++i) {
    std::uint64_t s = seed + static_cast<std::uint64_t>(i);
    EpisodeGenOptions opt;
    opt.cross_floor_only = cross;
    SimConfig sc = cfg;
    if (decoys > 0) {
      Rng pick(hash_mix(s, 0xdec0));
      std::string q = opt.targets[pick.uniform_int(0, static_cast<int>(opt.targets.size()) - 1)];
      sc.decoy_category = q;
      sc.decoys = decoys;
      opt.targets = {q};
    }
    Scene scene = generate_scene(s, sc);
    std::string name = "scene_" + std::to_string(s) + ".json";
    scene.save((fs::path(out) / name).string());
    for (int k = 0; k < per_scene; ++k) {
      auto e = generate_episode(scene, hash_mix(s, static_cast<std::uint64_t>(k)), opt);
      if (!e) {
        std::cerr << "warning: no episode for " << name << " draw " << k << "\n";
        continue;
      }
      e->id = static_cast<int>(eps.size());
      e->scene = name;
      e->scene_seed = s;
      eps.push_back(*e);
    }
  }
  write_episodes(eps, (fs::path(out) / "episodes.jsonl").string());
  std::cout << "wrote " << count << " scenes and " << eps.size() << " episodes to " << out << "\n";
  return 0;
}

int run_one(const std::string& scene_path, const std::string& episode_path, int index, const std::string& agent_cfg,
            const std::string& variant, bool llm, const std::string& trace_out) {
  Scene scene = Scene::load(scene_path);
  std::vector<Episode> eps = read_episodes(episode_path);
  if (index < 0 || index >= static_cast<int>(eps.size()))
    throw Error("episode index " + std::to_string(index) + " out of range (" + std::to_string(eps.size()) + ")");
  AgentConfig cfg = load_agent_config(agent_cfg);
  if (!variant.empty()) cfg.variant = variant_from_name(variant);
  SGImagineNavAgent agent(cfg);
  if (llm) attach_llm(agent);
  EpisodeResult r = run_episode(scene, eps[index], agent);
  if (!trace_out.empty()) {
    std::ofstream f(trace_out, std::ios::binary);
    if (!f) throw Error("cannot write " + trace_out);
    nlohmann::ordered_json header = {{"header",
                                      {{"scene", fs::absolute(scene_path).string()},
                                       {"episode_id", eps[index].id},
                                       {"target", eps[index].target},
                                       {"variant", variant_name(cfg.variant)}}}};
    f << header.dump() << '\n';
    for (const auto& row : r.trajectory) f << row.dump() << '\n';
  }
  nlohmann::ordered_json j = {{"episode_id", r.episode_id}, {"outcome", r.outcome},   {"success", r.success},
                              {"steps", r.steps},           {"collisions", r.collisions}, {"path_length", r.path_length},
                              {"optimal_length", r.optimal_length}, {"spl", r.spl}, {"soft_spl", r.soft_spl}};
  std::cout << j.dump(2) << "\n";
  return 0;
}

int run_bench(const std::string& suite_path, const std::string& variants, int workers, const std::string& agent_cfg,
              const std::string& out) {
  Suite suite;
  if (fs::path(suite_path).extension() == ".jsonl")
    suite = load_suite(suite_path);
  else
    suite = make_suite(SuiteSpec::from_json(read_json(suite_path)));
  BenchConfig cfg;
  cfg.variants = parse_variants(variants);
  cfg.agent = load_agent_config(agent_cfg);
  cfg.workers = workers;
  BenchOutput res = run_benchmark(suite, cfg);
  write_bench_output(res, out);
  std::cout << table_markdown(res.reports);
  return 0;
}

int dump_maps(const std::string& trace_path, const std::string& out, std::string scene_path, int episode, int scale) {
  std::ifstream in(trace_path);
  if (!in) throw Error("cannot read " + trace_path);
  std::vector<nlohmann::json> rows;
  std::string target, line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    if (j.contains("header")) {
      if (scene_path.empty()) scene_path = j["header"].value("scene", "");
      target = j["header"].value("target", "");
      continue;
    }
    if (episode >= 0 && j.value("episode_id", episode) != episode) continue;
    rows.push_back(std::move(j));
  }
  if (scene_path.empty()) throw Error("no scene: pass --scene or use a trace written by run-episode");
  Scene scene = Scene::load(scene_path);
  fs::create_directories(out);
  std::map<int, int> per_floor;
  for (const auto& r : rows)
    if (r.contains("pose")) ++per_floor[scene.floor_of_z(r["pose"].value("z", 0.0))];
  for (int f = 0; f < scene.config.floors; ++f) {
    std::string path = (fs::path(out) / ("floor_" + std::to_string(f) + ".png")).string();
    write_png(render_episode_map(scene, f, rows, target, scale), path);
    std::cout << path << " (" << per_floor[f] << " poses)\n";
  }
  return 0;
}

int graph_metrics(const std::string& pred, const std::string& truth, int k, double radius) {
  SceneGraph p = SceneGraph::from_json(read_json(pred));
  nlohmann::json tj = read_json(truth);
  SceneGraph t = tj.value("schema", "") == kSceneSchema ? Scene::from_json(tj).ground_truth_graph()
                                                         : SceneGraph::from_json(tj);
  GraphScore s = graph_precision_recall(p, t, k, radius);
  nlohmann::ordered_json j = {{"k", k},
                              {"recall", s.recall},
                              {"precision", s.precision ? nlohmann::json(*s.precision) : nlohmann::json(nullptr)},
                              {"matches", s.matches},
                              {"truth_regions", s.truth_regions},
                              {"predicted_regions", s.predicted_regions}};
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scene-graph object navigation: scenes, episodes, benchmarks"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen-scenes", "Generate scenes and an episodes.jsonl suite");
  std::uint64_t seed = 0;
  int floors = 2, rooms = 6, count = 10, per_scene = 1, decoys = 0;
  bool cross = false;
  std::string out;
  gen->add_option("--seed", seed, "First scene seed")->capture_default_str();
  gen->add_option("--floors", floors, "Floors per scene (1-3)")->capture_default_str();
  gen->add_option("--rooms", rooms, "Rooms per floor (3-10)")->capture_default_str();
  gen->add_option("--count", count, "Number of scenes")->capture_default_str();
  gen->add_option("--episodes-per-scene", per_scene, "Episodes drawn per scene")->capture_default_str();
  gen->add_option("--decoys", decoys, "Lookalike decoys of the target per scene")->capture_default_str();
  gen->add_flag("--cross-floor", cross, "Only episodes whose target is on another floor");
  gen->add_option("--out", out, "Output directory")->required();

  auto* run = app.add_subcommand("run-episode", "Run one episode and print its metrics");
  std::string scene_path, episode_path, agent_cfg, variant, trace_out;
  int index = 0;
  bool llm = false;
  run->add_option("--scene", scene_path, "Scene JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--episode", episode_path, "Episodes JSONL")->required()->check(CLI::ExistingFile);
  run->add_option("--index", index, "Line of the episode file")->capture_default_str();
  run->add_option("--agent-config", agent_cfg, "Agent config JSON")->check(CLI::ExistingFile);
  run->add_option("--variant", variant, "Override the variant (a-f)");
  run->add_flag("--llm", llm, "Use the HTTP predictor and verifier configured by SGNAV_LLM_*");
  run->add_option("--trace-out", trace_out, "Write the trajectory as JSONL");

  auto* bench = app.add_subcommand("run-benchmark", "Run variants over a suite");
  std::string suite, variants = "abcdef";
  int workers = 1;
  bench->add_option("--suite", suite, "episodes.jsonl, or a suite definition JSON")->required()->check(CLI::ExistingFile);
  bench->add_option("--variants", variants, "Variant letters")->capture_default_str();
  bench->add_option("--workers", workers, "Worker threads")->capture_default_str();
  bench->add_option("--agent-config", agent_cfg, "Agent config JSON")->check(CLI::ExistingFile);
  bench->add_option("--out", out, "Output directory")->required();

  auto* dump = app.add_subcommand("dump-maps", "Render per-floor maps with the trajectory");
  std::string trace;
  int episode = -1, scale = 2;
  dump->add_option("--trace", trace, "Trace JSONL")->required()->check(CLI::ExistingFile);
  dump->add_option("--out", out, "Output directory")->required();
  dump->add_option("--scene", scene_path, "Scene JSON (defaults to the trace header)");
  dump->add_option("--episode", episode, "Episode id within a benchmark trace");
  dump->add_option("--scale", scale, "Pixels per cell")->capture_default_str();

  auto* gm = app.add_subcommand("graph-metrics", "Region precision/recall at k");
  std::string pred, truth;
  int k = 1;
  double radius = 2.0;
  gm->add_option("--pred", pred, "Predicted scene graph JSON")->required()->check(CLI::ExistingFile);
  gm->add_option("--truth", truth, "Truth scene graph or scene JSON")->required()->check(CLI::ExistingFile);
  gm->add_option("--k", k, "Top-k captions")->capture_default_str();
  gm->add_option("--radius", radius, "Match radius in meters")->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) return gen_scenes(seed, floors, rooms, count, per_scene, decoys, cross, out);
    if (*run) return run_one(scene_path, episode_path, index, agent_cfg, variant, llm, trace_out);
    if (*bench) return run_bench(suite, variants, workers, agent_cfg, out);
    if (*dump) return dump_maps(trace, out, scene_path, episode, scale);
    if (*gm) return graph_metrics(pred, truth, k, radius);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

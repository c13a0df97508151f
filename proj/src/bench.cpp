#include "sgnav/bench.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "sgnav/metrics.hpp"

namespace sgnav {

namespace fs = std::filesystem;

void MetricsReport::recompute() {
  sr = mean_spl = mean_soft_spl = 0.0;
  false_stops = 0;
  if (rows.empty()) return;
  double s = 0, a = 0, b = 0;
  for (const EpisodeRow& r : rows) {
    s += r.success;
    a += r.spl;
    b += r.soft_spl;
    false_stops += r.outcome == "false_stop";
  }
  double n = static_cast<double>(rows.size());
  sr = 100.0 * s / n;
  mean_spl = 100.0 * a / n;
  mean_soft_spl = 100.0 * b / n;
}

nlohmann::ordered_json MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["variant"] = variant;
  j["config_fingerprint"] = config_fingerprint;
  j["episodes"] = rows.size();
  j["sr"] = sr;
  j["spl"] = mean_spl;
  j["soft_spl"] = mean_soft_spl;
  j["false_stops"] = false_stops;
  return j;
}

nlohmann::ordered_json SuiteSpec::to_json() const {
  return {{"count", count},
          {"seed", seed},
          {"sim", sim.to_json()},
          {"targets", episodes.targets},
          {"cross_floor_only", episodes.cross_floor_only},
          {"min_start_distance", episodes.min_start_distance},
          {"success_distance", episodes.success_distance},
          {"step_budget", episodes.step_budget},
          {"decoys", decoys}};
}

SuiteSpec SuiteSpec::from_json(const nlohmann::json& j) {
  static const std::vector<std::string> known = {"count", "seed", "sim", "targets", "cross_floor_only",
                                                 "min_start_distance", "success_distance", "step_budget", "decoys"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw ConfigError("unknown suite key '" + it.key() + "'");
  SuiteSpec s;
  s.count = j.value("count", s.count);
  s.seed = j.value("seed", s.seed);
  if (j.contains("sim")) s.sim = SimConfig::from_json(j["sim"]);
  s.episodes.targets = j.value("targets", s.episodes.targets);
  s.episodes.cross_floor_only = j.value("cross_floor_only", s.episodes.cross_floor_only);
  s.episodes.min_start_distance = j.value("min_start_distance", s.episodes.min_start_distance);
  s.episodes.success_distance = j.value("success_distance", s.episodes.success_distance);
  s.episodes.step_budget = j.value("step_budget", s.episodes.step_budget);
  s.decoys = j.value("decoys", s.decoys);
  if (s.count < 0) throw ConfigError("count must be >= 0");
  if (s.episodes.targets.empty()) throw ConfigError("targets must not be empty");
  s.sim.validate();
  return s;
}

Suite make_suite(const SuiteSpec& spec) {
  Suite out;
  // a bounded number of scene attempts per requested episode
  const long max_attempts = 20L * spec.count + 20;
  for (long k = 0; static_cast<int>(out.size()) < spec.count && k < max_attempts; ++k) {
    const std::uint64_t scene_seed = spec.seed + static_cast<std::uint64_t>(k);
    SimConfig sim = spec.sim;
    EpisodeGenOptions opt = spec.episodes;
    if (spec.decoys > 0) {
      Rng pick(hash_mix(scene_seed, 0xdec0));
      std::string q = opt.targets[pick.uniform_int(0, static_cast<int>(opt.targets.size()) - 1)];
      sim.decoy_category = q;
      sim.decoys = spec.decoys;
      opt.targets = {q};
    }
    Scene scene;
    try {
      scene = generate_scene(scene_seed, sim);
    } catch (const GenerationError&) {
      continue;
    }
    auto e = generate_episode(scene, hash_mix(scene_seed, 0x5e1ec7), opt);
    if (!e) continue;
    e->id = static_cast<int>(out.size());
    e->scene = "scene_" + std::to_string(scene_seed) + ".json";
    e->scene_seed = scene_seed;
    out.push_back({std::make_shared<const Scene>(std::move(scene)), *e});
  }
  if (static_cast<int>(out.size()) < spec.count)
    throw GenerationError("only " + std::to_string(out.size()) + " of " + std::to_string(spec.count) +
                          " episodes could be generated");
  return out;
}

Suite load_suite(const std::string& episodes_path) {
  std::vector<Episode> eps = read_episodes(episodes_path);
  fs::path dir = fs::path(episodes_path).parent_path();
  std::vector<std::string> missing;
  std::map<std::string, fs::path> files;
  for (const Episode& e : eps) {
    fs::path p = fs::path(e.scene).is_absolute() ? fs::path(e.scene) : dir / e.scene;
    if (files.emplace(e.scene, p).second && !fs::exists(p)) missing.push_back(p.string());
  }
  if (!missing.empty()) {
    std::string msg = "missing scene files:";
    for (const auto& m : missing) msg += "\n  " + m;
    throw Error(msg);
  }
  std::map<std::string, std::shared_ptr<const Scene>> cache;
  Suite out;
  for (const Episode& e : eps) {
    auto& sc = cache[e.scene];
    if (!sc) sc = std::make_shared<const Scene>(Scene::load(files[e.scene].string()));
    out.push_back({sc, e});
  }
  return out;
}

void save_suite(const Suite& suite, const std::string& dir) {
  fs::create_directories(dir);
  std::map<std::string, const Scene*> scenes;
  std::vector<Episode> eps;
  for (const SuiteEpisode& e : suite) {
    scenes.emplace(e.episode.scene, e.scene.get());
    eps.push_back(e.episode);
  }
  for (const auto& [name, s] : scenes) s->save((fs::path(dir) / name).string());
  write_episodes(eps, (fs::path(dir) / "episodes.jsonl").string());
}

EpisodeRow make_row(const SuiteEpisode& e, const EpisodeResult& r) {
  EpisodeRow row;
  row.episode_id = e.episode.id;
  row.scene = e.episode.scene;
  row.target = e.episode.target;
  const int start_floor = e.scene->floor_of_z(e.episode.start.z);
  row.cross_floor = true;
  for (const SceneObject& o : e.scene->objects)
    if (o.category == e.episode.target && o.floor == start_floor) row.cross_floor = false;
  row.success = r.success;
  row.outcome = r.outcome;
  row.spl = r.spl;
  row.soft_spl = r.soft_spl;
  row.steps = r.steps;
  row.collisions = r.collisions;
  row.path_length = r.path_length;
  row.optimal_length = r.optimal_length;
  return row;
}

namespace {

std::string fingerprint(const AgentConfig& c) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << hash_string(c.to_json().dump());
  return os.str();
}

}  // namespace

BenchOutput run_benchmark(const Suite& suite, const BenchConfig& cfg) {
  if (cfg.workers < 1) throw ConfigError("workers must be >= 1");
  const std::size_t nv = cfg.variants.size(), ne = suite.size();
  std::vector<AgentConfig> configs;
  for (AgentVariant v : cfg.variants) {
    AgentConfig c = cfg.agent;
    c.variant = v;
    c.validate();
    configs.push_back(c);
  }
  std::vector<EpisodeRow> rows(nv * ne);
  BenchOutput out;
  out.traces.assign(nv, std::vector<std::vector<nlohmann::ordered_json>>(ne));

  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr err;
  auto work = [&]() {
    for (;;) {
      std::size_t job = next.fetch_add(1);
      if (job >= nv * ne) return;
      const std::size_t v = job / ne, i = job % ne;
      try {
        SGImagineNavAgent agent(configs[v]);
        EpisodeResult r = run_episode(*suite[i].scene, suite[i].episode, agent);
        rows[job] = make_row(suite[i], r);
        if (cfg.on_episode) cfg.on_episode(cfg.variants[v], r);
        if (cfg.keep_traces) out.traces[v][i] = std::move(r.trajectory);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
        next = nv * ne;
      }
    }
  };
  const int n = static_cast<int>(std::min<std::size_t>(cfg.workers, std::max<std::size_t>(1, nv * ne)));
  if (n == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < n; ++k) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (err) std::rethrow_exception(err);

  for (std::size_t v = 0; v < nv; ++v) {
    MetricsReport rep;
    rep.variant = variant_name(cfg.variants[v]);
    rep.config_fingerprint = fingerprint(configs[v]);
    rep.rows.assign(rows.begin() + v * ne, rows.begin() + (v + 1) * ne);
    rep.recompute();
    out.reports.push_back(std::move(rep));
  }
  if (!cfg.keep_traces) out.traces.clear();
  return out;
}

std::string reports_csv(const std::vector<MetricsReport>& reports) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "variant,episode_id,scene,target,cross_floor,success,outcome,spl,soft_spl,steps,collisions,path_length,"
        "optimal_length\n";
  for (const MetricsReport& rep : reports)
    for (const EpisodeRow& r : rep.rows)
      os << rep.variant << ',' << r.episode_id << ',' << r.scene << ',' << r.target << ',' << r.cross_floor << ','
         << r.success << ',' << r.outcome << ',' << r.spl << ',' << r.soft_spl << ',' << r.steps << ','
         << r.collisions << ',' << r.path_length << ',' << r.optimal_length << '\n';
  return os.str();
}

std::string table_markdown(const std::vector<MetricsReport>& reports) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "| variant | episodes | SR (%) | SPL (%) | SoftSPL (%) | false stops |\n";
  os << "|---|---:|---:|---:|---:|---:|\n";
  for (const MetricsReport& r : reports)
    os << "| " << r.variant << " | " << r.rows.size() << " | " << r.sr << " | " << r.mean_spl << " | "
       << r.mean_soft_spl << " | " << r.false_stops << " |\n";
  return os.str();
}

void write_bench_output(const BenchOutput& out, const std::string& dir) {
  fs::create_directories(dir);
  auto put = [&](const std::string& name, const std::string& text) {
    std::ofstream f(fs::path(dir) / name, std::ios::binary);
    if (!f) throw Error("cannot write " + (fs::path(dir) / name).string());
    f << text;
  };
  put("report.csv", reports_csv(out.reports));
  put("table.md", table_markdown(out.reports));
  nlohmann::ordered_json summary = nlohmann::ordered_json::array();
  for (const MetricsReport& r : out.reports) summary.push_back(r.to_json());
  put("summary.json", summary.dump(2) + "\n");
  for (std::size_t v = 0; v < out.traces.size(); ++v) {
    std::ofstream f(fs::path(dir) / ("traces_" + out.reports[v].variant + ".jsonl"), std::ios::binary);
    for (std::size_t i = 0; i < out.traces[v].size(); ++i)
      for (const auto& row : out.traces[v][i]) {
        nlohmann::ordered_json line;
        line["episode_id"] = out.reports[v].rows[i].episode_id;
        for (auto it = row.begin(); it != row.end(); ++it) line[it.key()] = it.value();
        f << line.dump() << '\n';
      }
  }
}

Image render_episode_map(const Scene& scene, int floor, const std::vector<nlohmann::json>& trace,
                         const std::string& target, int scale) {
  if (floor < 0 || floor >= static_cast<int>(scene.floors.size())) throw Error("no floor " + std::to_string(floor));
  if (scale < 1) throw ConfigError("scale must be >= 1");
  const FloorRaster& fr = scene.floors[floor];
  const int W = scene.grid_width(), H = scene.grid_height();
  Image img(W * scale, H * scale, Rgb{255, 255, 255});
  auto fill = [&](Cell k, Rgb c) {
    const int r0 = (H - 1 - k.r) * scale, c0 = k.c * scale;
    for (int dr = 0; dr < scale; ++dr)
      for (int dc = 0; dc < scale; ++dc) img.set(r0 + dr, c0 + dc, c);
  };
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c) {
      Cell k{r, c};
      Rgb col{235, 235, 235};
      if (fr.clear[k]) col = Rgb{255, 255, 255};
      if (fr.stair[k] >= 0) col = Rgb{200, 200, 255};
      if (fr.solid[k]) col = Rgb{60, 60, 60};
      fill(k, col);
    }
  for (const SceneObject& o : scene.objects) {
    if (o.floor != floor || o.category != target) continue;
    Cell a = scene.cell_of(o.position - Vec2{o.half_x, o.half_y});
    Cell b = scene.cell_of(o.position + Vec2{o.half_x, o.half_y});
    for (int r = a.r; r <= b.r; ++r)
      for (int c = a.c; c <= b.c; ++c)
        if (r >= 0 && c >= 0 && r < H && c < W) fill({r, c}, Rgb{40, 170, 60});
  }
  auto px = [&](const nlohmann::json& pose) {
    Cell k = scene.cell_of({pose.at("x").get<double>(), pose.at("y").get<double>()});
    return std::pair<int, int>{(H - 1 - k.r) * scale + scale / 2, k.c * scale + scale / 2};
  };
  std::optional<std::pair<int, int>> prev, first, last;
  for (const auto& row : trace) {
    if (!row.contains("pose")) continue;
    const auto& pose = row["pose"];
    if (scene.floor_of_z(pose.value("z", 0.0)) != floor) {
      prev.reset();
      continue;
    }
    auto p = px(pose);
    if (prev) img.line(prev->first, prev->second, p.first, p.second, Rgb{220, 30, 30});
    if (!first) first = p;
    prev = last = p;
  }
  if (first) img.disk(first->first, first->second, 2 * scale, Rgb{30, 90, 220});
  if (last) img.disk(last->first, last->second, 2 * scale, Rgb{220, 30, 30});
  return img;
}

}  // namespace sgnav

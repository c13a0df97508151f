#include <gtest/gtest.h>

#include "sgnav/imagination.hpp"

using namespace sgnav;

namespace {

OccupancyGrid all_free(int w, int h) {
  OccupancyGrid g(w, h, 0.05);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) g.set({r, c}, CellState::Free, 0.0f);
  return g;
}

// Grid that is Free except for a Unknown block [r0,r1) x [c0,c1).
OccupancyGrid with_hole(int w, int h, int r0, int r1, int c0, int c1) {
  OccupancyGrid g(w, h, 0.05);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      if (!(r >= r0 && r < r1 && c >= c0 && c < c1)) g.set({r, c}, CellState::Free, 0.0f);
  return g;
}

RegionNode region(int id, Caption cap, Vec2 center, std::vector<int> members = {}) {
  RegionNode r;
  r.id = id;
  r.caption = std::move(cap);
  r.center = center;
  r.members = std::move(members);
  return r;
}

ObjectNode object(int id, const std::string& cat, Vec2 p, int reg) {
  ObjectNode o;
  o.id = id;
  o.category = cat;
  o.position = p;
  o.confidence = 0.9;
  o.observation_count = 1;
  o.region = reg;
  return o;
}

const char* kTwoRegions =
    "some reasoning first\n# Start\n```json\n"
    "{\"regions\":[{\"id\":\"pred_0\",\"caption\":{\"bedroom\":0.7,\"bathroom\":0.3},\"reasoning\":\"next to a "
    "hallway\",\"center\":[20,15],\"objects\":[{\"caption\":\"bed\",\"center\":[21,16],\"confidence\":0.8,"
    "\"corr_score\":0.9}]},"
    "{\"id\":\"pred_1\",\"caption\":{\"kitchen\":0.6,\"dining room\":0.4},\"reasoning\":\"near living "
    "room\",\"center\":[30,35],\"objects\":[]}]}\n```\n# End\n";

}  // namespace

TEST(UnknownRegions, FullyKnownGridHasNone) {
  auto g = all_free(30, 30);
  EXPECT_TRUE(identify_unknown_regions(g).empty());
}

TEST(UnknownRegions, SingleBlockAdjacentToFree) {
  auto g = with_hole(40, 40, 10, 20, 15, 25);
  auto u = identify_unknown_regions(g);
  ASSERT_EQ(u.size(), 1u);
  EXPECT_EQ(u[0].cells.size(), 100u);
  EXPECT_EQ(u[0].id, 0);
  // centroid of rows 10..19, cols 15..24 is (14.5, 19.5)
  EXPECT_NEAR(u[0].center.x, 20.0 * 0.05, 1e-12);
  EXPECT_NEAR(u[0].center.y, 15.0 * 0.05, 1e-12);
}

TEST(UnknownRegions, SmallBlocksIgnored) {
  auto g = with_hole(40, 40, 10, 15, 10, 15);  // 25 cells
  EXPECT_TRUE(identify_unknown_regions(g).empty());
}

TEST(UnknownRegions, EnclosedByOccupiedExcluded) {
  auto g = with_hole(40, 40, 10, 20, 10, 20);
  for (int k = 9; k <= 20; ++k)
    for (Cell c : {Cell{9, k}, Cell{20, k}, Cell{k, 9}, Cell{k, 20}}) g.set(c, CellState::Occupied, 2.0f);
  // brute-force check that no unknown cell touches Free
  bool touches = false;
  for (int r = 10; r < 20; ++r)
    for (int c = 10; c < 20; ++c)
      for (Cell n : {Cell{r - 1, c}, Cell{r + 1, c}, Cell{r, c - 1}, Cell{r, c + 1}})
        touches |= g.state(n) == CellState::Free;
  ASSERT_FALSE(touches);
  EXPECT_TRUE(identify_unknown_regions(g).empty());
}

TEST(UnknownRegions, LargeComponentsAreTiled) {
  // known strip in the middle of an otherwise unknown 200x200 map
  OccupancyGrid g(200, 200, 0.05);
  for (int r = 95; r < 105; ++r)
    for (int c = 0; c < 200; ++c) g.set({r, c}, CellState::Free, 0.0f);
  UnknownParams p;
  p.search_margin = 200;
  auto u = identify_unknown_regions(g, nullptr, p);
  ASSERT_GT(u.size(), 2u);
  std::size_t total = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    EXPECT_EQ(u[i].id, static_cast<int>(i));
    BBox b;
    for (Cell k : u[i].cells) b.add(k);
    EXPECT_LE(b.r1 - b.r0 + 1, 80);
    EXPECT_LE(b.c1 - b.c0 + 1, 80);
    total += u[i].cells.size();
    if (i) EXPECT_LE(u[i - 1].center.y, u[i].center.y);
  }
  // only tiles touching the strip qualify
  EXPECT_LE(total, 200u * 200u - 2000u);
}

TEST(UnknownRegions, NearbyRegionsWithinRadius) {
  auto g = with_hole(200, 200, 90, 110, 90, 110);
  SceneGraph sg;
  sg.add_region(region(3, {{"bedroom", 1.0}}, {5.0, 6.0}));
  sg.add_region(region(4, {{"kitchen", 1.0}}, {9.9, 9.9}));
  auto u = identify_unknown_regions(g, &sg);
  ASSERT_EQ(u.size(), 1u);
  ASSERT_EQ(u[0].nearby_regions.size(), 1u);
  EXPECT_EQ(u[0].nearby_regions[0].first, 3);
  EXPECT_NEAR(u[0].nearby_regions[0].second, 1.0, 1e-9);
}

TEST(Bev, EmptyGraphOneUnknown) {
  auto g = with_hole(40, 40, 10, 20, 15, 25);
  SceneGraph sg;
  auto u = identify_unknown_regions(g, &sg);
  auto bev = build_bev(sg, g, u);
  ASSERT_EQ(bev.markers.size(), 1u);
  EXPECT_EQ(bev.markers[0].kind, BevMarker::Unknown);
  // centroid (14.5, 19.5) rounds half away from zero
  EXPECT_EQ(bev.text, "Unknown region 0, center: [15 20], nearby regions:\nNone \n----------\n");
}

TEST(Bev, NearbyRegionsListed) {
  auto g = with_hole(200, 200, 90, 110, 90, 110);
  SceneGraph sg;
  sg.add_object(object(0, "bed", {5.0, 6.0}, 6));
  sg.add_object(object(1, "tv", {5.1, 6.0}, 6));
  sg.add_object(object(2, "picture", {4.0, 5.0}, 20));
  sg.add_region(region(6, {{"bedroom", 0.5}, {"laundry room", 0.25}}, {5.025, 6.025}, {0, 1}));
  sg.add_region(region(20, {{"bedroom", 0.5}, {"hallway", 0.5}}, {4.025, 4.025}, {2}));
  auto u = identify_unknown_regions(g, &sg);
  auto bev = build_bev(sg, g, u);
  EXPECT_EQ(bev.text,
            "Unknown region 0, center: [100 100], nearby regions:\n"
            "Region 6: {'bedroom': 0.5, 'laundry room': 0.25} center: [120.0, 100.0] contained objects: ['bed', "
            "'tv'] \n"
            "Region 20: {'bedroom': 0.5, 'hallway': 0.5} center: [80.0, 80.0] contained objects: ['picture'] \n"
            "----------\n");
  int unknown = 0, regions = 0, objects = 0;
  for (const auto& m : bev.markers) {
    EXPECT_TRUE(g.in_bounds(m.px));
    unknown += m.kind == BevMarker::Unknown;
    regions += m.kind == BevMarker::Region;
    objects += m.kind == BevMarker::Object;
  }
  EXPECT_EQ(unknown, 1);
  EXPECT_EQ(regions, 2);
  EXPECT_EQ(objects, 3);
}

TEST(Bev, NoUnknownsNoUnknownMarkers) {
  auto g = all_free(20, 20);
  SceneGraph sg;
  auto bev = build_bev(sg, g, {});
  EXPECT_TRUE(bev.markers.empty());
  EXPECT_TRUE(bev.text.empty());
  std::string png = encode_png(render_bev(bev, 2));
  EXPECT_EQ(png.substr(0, 8), std::string("\x89PNG\r\n\x1a\n", 8));
}

TEST(Bev, PromptCarriesTargetAndBlock) {
  auto g = with_hole(40, 40, 10, 20, 15, 25);
  SceneGraph sg;
  auto bev = build_bev(sg, g, identify_unknown_regions(g, &sg));
  std::string p = build_prompt("bed", bev);
  EXPECT_NE(p.find("help find **bed**."), std::string::npos);
  EXPECT_NE(p.find("**Unknown regions locations and nearby regions**:\n" + bev.text + "Output Requirements:"),
            std::string::npos);
}

TEST(Base64, KnownVectors) {
  EXPECT_EQ(base64_encode("Man"), "TWFu");
  EXPECT_EQ(base64_encode("Ma"), "TWE=");
  EXPECT_EQ(base64_encode("M"), "TQ==");
  EXPECT_EQ(base64_encode(""), "");
}

TEST(Parse, TwoRegionPayload) {
  auto r = parse_prediction(kTwoRegions);
  ASSERT_EQ(r.regions.size(), 2u);
  EXPECT_TRUE(r.warnings.empty());
  EXPECT_EQ(r.regions[0].target_unknown_region_id, 0);
  EXPECT_EQ(r.regions[0].caption, (Caption{{"bedroom", 0.7}, {"bathroom", 0.3}}));
  EXPECT_EQ(r.regions[0].objects.size(), 1u);
  EXPECT_EQ(r.regions[0].objects[0].category, "bed");
  EXPECT_EQ(r.regions[1].target_unknown_region_id, 1);
  EXPECT_EQ(r.regions[1].center, (std::pair<double, double>{30, 35}));
}

TEST(Parse, MissingFlags) {
  EXPECT_THROW(parse_prediction("{\"regions\":[]}"), MissingFlagsError);
  EXPECT_THROW(parse_prediction("# Start\n{\"regions\":[]}"), MissingFlagsError);
}

TEST(Parse, RenormalizesWithWarning) {
  auto r = parse_prediction(
      "# Start\n{\"regions\":[{\"id\":\"pred_2\",\"caption\":{\"kitchen\":0.6,\"bathroom\":0.6},\"center\":[1,2]}]}\n# "
      "End");
  ASSERT_EQ(r.regions.size(), 1u);
  EXPECT_DOUBLE_EQ(r.regions[0].caption[0].second, 0.5);
  EXPECT_DOUBLE_EQ(r.regions[0].caption[1].second, 0.5);
  EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(Parse, SmallDriftRenormalizedSilently) {
  auto r = parse_prediction(
      "# Start\n{\"regions\":[{\"id\":3,\"caption\":{\"kitchen\":0.51,\"bathroom\":0.51},\"center\":[1,2]}]}\n# End");
  EXPECT_TRUE(r.warnings.empty());
  EXPECT_DOUBLE_EQ(r.regions[0].caption[0].second, 0.5);
}

TEST(Parse, OutOfVocabularyBecomesUnknown) {
  auto r = parse_prediction(
      "# Start\n{\"regions\":[{\"id\":\"pred_0\",\"caption\":{\"garage\":0.8,\"kitchen\":0.2},\"center\":[1,2]}]}\n# "
      "End");
  EXPECT_EQ(r.regions[0].caption, (Caption{{"unknown", 0.8}, {"kitchen", 0.2}}));
  EXPECT_EQ(r.warnings.size(), 1u);
  ParseOptions full;
  full.full_vocabulary = true;
  r = parse_prediction(
      "# Start\n{\"regions\":[{\"id\":\"pred_0\",\"caption\":{\"garage\":0.8,\"kitchen\":0.2},\"center\":[1,2]}]}\n# "
      "End",
      full);
  EXPECT_EQ(r.regions[0].caption[0].first, "garage");
}

TEST(Parse, SchemaErrorNamesField) {
  auto field = [](const std::string& body) {
    try {
      parse_prediction("# Start\n" + body + "\n# End");
    } catch (const SchemaError& e) {
      return e.field;
    }
    return std::string("none");
  };
  EXPECT_EQ(field("{\"nope\":1}"), "regions");
  EXPECT_EQ(field("not json"), "json");
  EXPECT_EQ(field("{\"regions\":[{\"id\":\"x\",\"caption\":{\"kitchen\":1},\"center\":[1,2]}]}"), "regions[0].id");
  EXPECT_EQ(field("{\"regions\":[{\"id\":\"pred_0\",\"caption\":{\"kitchen\":1},\"center\":[1]}]}"),
            "regions[0].center");
  EXPECT_EQ(field("{\"regions\":[{\"id\":\"pred_0\",\"center\":[1,2]}]}"), "regions[0].caption");
  EXPECT_EQ(field("{\"regions\":[{\"id\":0,\"caption\":{\"kitchen\":1},\"center\":[1,2],\"objects\":[{\"caption\":"
                  "\"bed\",\"center\":[1,2]}]}]}"),
            "regions[0].objects[0].confidence");
}

TEST(Parse, LongReasoningTruncated) {
  std::string words;
  for (int i = 0; i < 25; ++i) words += "w" + std::to_string(i) + " ";
  auto r = parse_prediction("# Start\n{\"regions\":[{\"id\":0,\"caption\":{\"kitchen\":1},\"reasoning\":\"" + words +
                            "\",\"center\":[1,2]}]}\n# End");
  EXPECT_EQ(r.regions[0].reasoning.substr(r.regions[0].reasoning.rfind(' ') + 1), "w19");
  EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(Parse, SerializeRoundTrip) {
  Rng rng(9);
  const auto& choices = prediction_choices();
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<PredictedRegion> regions;
    int n = rng.uniform_int(0, 4);
    for (int i = 0; i < n; ++i) {
      PredictedRegion pr;
      pr.target_unknown_region_id = i * 3 + trial % 3;
      double a = rng.uniform();
      std::string l1 = choices[rng.uniform_int(0, 6)], l2 = choices[rng.uniform_int(0, 6)];
      if (l1 == l2 || a == 0.5) {
        pr.caption = {{l1, 1.0}};
      } else {
        double hi = std::max(a, 1 - a);
        pr.caption = {{l1, hi}, {l2, 1 - hi}};
      }
      if (std::abs(pr.caption[0].second + (pr.caption.size() > 1 ? pr.caption[1].second : 0) - 1) > 1e-6) continue;
      pr.reasoning = rng.bernoulli(0.5) ? "" : "near the hallway";
      pr.center = {rng.uniform() * 480, rng.uniform() * 480};
      for (int k = rng.uniform_int(0, 3); k > 0; --k)
        pr.objects.push_back({"chair", {rng.uniform() * 480, rng.uniform() * 480}, rng.uniform(), rng.uniform()});
      regions.push_back(pr);
    }
    auto back = parse_prediction(serialize_prediction(regions));
    EXPECT_EQ(back.regions, regions);
    EXPECT_TRUE(back.warnings.empty());
  }
}

TEST(Predict, NoUnknownsLeavesGraphUnchanged) {
  auto g = all_free(20, 20);
  SceneGraph sg;
  AdjacencyPriorPredictor pred;
  std::vector<UnknownRegion> none;
  auto bev = build_bev(sg, g, none);
  PredictionContext ctx{&sg, &bev, &none, "bed"};
  auto out = predict_scene_graph(sg, g, 0, pred, ctx);
  EXPECT_EQ(out.regions_added, 0);
  EXPECT_TRUE(sg.regions.empty());
}

TEST(Predict, AdjacencyPriorNextToBedroom) {
  auto g = with_hole(200, 200, 90, 110, 90, 110);
  SceneGraph sg;
  sg.add_object(object(0, "bed", {5.0, 6.5}, 0));
  sg.add_region(region(0, {{"bedroom", 1.0}}, {5.0, 6.5}, {0}));
  auto u = identify_unknown_regions(g, &sg);
  auto bev = build_bev(sg, g, u);
  AdjacencyPriorPredictor pred;
  PredictionContext ctx{&sg, &bev, &u, "bed"};
  auto out = predict_scene_graph(sg, g, 0, pred, ctx);
  ASSERT_EQ(out.regions_added, 1);
  const RegionNode* r = nullptr;
  for (const auto& x : sg.regions)
    if (x.provenance == Provenance::Imagined) r = &x;
  ASSERT_NE(r, nullptr);
  // adjacency table: bedroom-bathroom 0.9, bedroom-living room 0.5 are the two largest among the choices
  ASSERT_EQ(r->caption.size(), 2u);
  EXPECT_EQ(r->caption[0].first, "bathroom");
  EXPECT_EQ(r->caption[1].first, "living room");
  EXPECT_NEAR(r->caption[0].second, 0.9 / 1.4, 1e-12);
  EXPECT_NEAR(r->caption[1].second, 0.5 / 1.4, 1e-12);
  EXPECT_NEAR(r->center.x, 5.0, 1e-9);
  EXPECT_NEAR(r->center.y, 5.0, 1e-9);
  EXPECT_EQ(r->members.size(), 3u);
  EXPECT_NO_THROW(sg.check_tree());
}

TEST(Predict, FloorPriorWithoutContext) {
  AdjacencyPriorPredictor pred;
  UnknownRegion u;
  SceneGraph sg;
  Caption c = pred.score(u, sg, "upper");
  // upper floor prior restricted to the choices: bedroom 0.32, bathroom 0.20
  EXPECT_EQ(c, (Caption{{"bedroom", 0.32 / 0.52}, {"bathroom", 0.20 / 0.52}}));
}

TEST(Predict, ScriptedMatchesParsedRegions) {
  auto g = with_hole(60, 60, 5, 25, 5, 25);
  for (int r = 30; r < 45; ++r)
    for (int c = 30; c < 45; ++c) g.set({r, c}, CellState::Free, 0.0f);
  SceneGraph sg;
  std::vector<UnknownRegion> u(2);
  u[0].id = 0;
  u[1].id = 1;
  auto bev = build_bev(sg, g, {});
  ScriptedPredictor pred({kTwoRegions});
  PredictionContext ctx{&sg, &bev, &u, "bed"};
  auto out = predict_scene_graph(sg, g, 0, pred, ctx);
  ASSERT_EQ(out.regions_added, 2);
  auto parsed = parse_prediction(kTwoRegions).regions;
  ASSERT_EQ(sg.regions.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(sg.regions[i].caption, parsed[i].caption);
    EXPECT_EQ(sg.regions[i].reasoning, parsed[i].reasoning);
    EXPECT_EQ(sg.regions[i].unknown_region, parsed[i].target_unknown_region_id);
    Vec2 c = pixel_to_world(g, parsed[i].center.first, parsed[i].center.second);
    EXPECT_EQ(sg.regions[i].center, c);
    EXPECT_EQ(sg.regions[i].members.size(), parsed[i].objects.size());
  }
  EXPECT_EQ(sg.objects.size(), 1u);
  EXPECT_EQ(sg.objects[0].observation_count, 0);
  EXPECT_NO_THROW(sg.check_tree());
}

TEST(Predict, FailuresLeaveGraphUnchanged) {
  auto g = with_hole(40, 40, 10, 20, 15, 25);
  SceneGraph sg;
  sg.add_object(object(0, "bed", {1, 1}, -1));
  auto u = identify_unknown_regions(g, &sg);
  auto bev = build_bev(sg, g, u);
  PredictionContext ctx{&sg, &bev, &u, "bed"};
  std::string before = sg.to_json().dump();

  ScriptedPredictor empty({});
  auto out = predict_scene_graph(sg, g, 0, empty, ctx);
  EXPECT_TRUE(out.transport_failed);
  EXPECT_EQ(sg.to_json().dump(), before);

  ScriptedPredictor bad({"no flags here"});
  out = predict_scene_graph(sg, g, 0, bad, ctx);
  EXPECT_FALSE(out.transport_failed);
  EXPECT_FALSE(out.error.empty());
  EXPECT_EQ(sg.to_json().dump(), before);
}

TEST(Predict, ObservedNodesUntouchedAndOverride) {
  auto g = with_hole(200, 200, 90, 110, 90, 110);
  SceneGraph sg;
  PriorCaptioner cap;
  update_graph(sg, {{"bed", {5.0, 6.5}, 0, 0.9, 0}, {"lamp", {5.3, 6.5}, 0, 0.9, 0}, {"pillow", {5.0, 6.8}, 0, 0.9, 0}},
               {}, cap);
  auto observed = [](const SceneGraph& s) {
    SceneGraph o = s;
    o.remove_imagined(0);
    return o.to_json().dump();
  };
  std::string before = observed(sg);
  AdjacencyPriorPredictor pred;
  for (int pass = 0; pass < 2; ++pass) {
    auto u = identify_unknown_regions(g, &sg);
    auto bev = build_bev(sg, g, u);
    PredictionContext ctx{&sg, &bev, &u, "bed"};
    predict_scene_graph(sg, g, 0, pred, ctx);
    EXPECT_EQ(observed(sg), before);
  }
  int imagined = 0;
  for (const auto& r : sg.regions) imagined += r.provenance == Provenance::Imagined;
  EXPECT_EQ(imagined, 1);  // second pass replaced the first
  for (int r = 90; r < 110; ++r)
    for (int c = 90; c < 110; ++c) g.set({r, c}, CellState::Free, 0.0f);
  EXPECT_EQ(prune_observed_imagined(sg, g, 0), 1);
  for (const auto& o : sg.objects) EXPECT_EQ(o.provenance, Provenance::Observed);
  EXPECT_EQ(observed(sg), before);
}

TEST(GraphMetrics, IdenticalGraphsScoreOne) {
  SceneGraph t;
  t.add_region(region(0, {{"bathroom", 1.0}}, {0, 0}));
  t.add_region(region(1, {{"bedroom", 1.0}}, {5, 0}));
  auto s = graph_precision_recall(t, t, 1);
  EXPECT_DOUBLE_EQ(s.recall, 1.0);
  EXPECT_DOUBLE_EQ(*s.precision, 1.0);
}

TEST(GraphMetrics, ThreeByTwoCase) {
  SceneGraph t, p;
  t.add_region(region(0, {{"bathroom", 1.0}}, {0, 0}));
  t.add_region(region(1, {{"bedroom", 1.0}}, {5, 0}));
  t.add_region(region(2, {{"kitchen", 1.0}}, {10, 0}));
  p.add_region(region(0, {{"bedroom", 0.8}, {"bathroom", 0.2}}, {5.5, 0}));
  p.add_region(region(1, {{"living room", 1.0}}, {20, 20}));
  auto s = graph_precision_recall(p, t, 1);
  EXPECT_DOUBLE_EQ(s.recall, 1.0 / 3);
  EXPECT_DOUBLE_EQ(*s.precision, 1.0 / 2);
}

TEST(GraphMetrics, EmptyCases) {
  SceneGraph t, p;
  EXPECT_THROW(graph_precision_recall(p, t, 1), ValidationError);
  t.add_region(region(0, {{"bathroom", 1.0}}, {0, 0}));
  auto s = graph_precision_recall(p, t, 3);
  EXPECT_EQ(s.recall, 0.0);
  EXPECT_FALSE(s.precision.has_value());
}

TEST(GraphMetrics, MatchingIsMaximum) {
  // greedy would pair truth 0 with pred 0 and strand truth 1
  SceneGraph t, p;
  t.add_region(region(0, {{"bedroom", 1.0}}, {0, 0}));
  t.add_region(region(1, {{"bedroom", 1.0}}, {3, 0}));
  p.add_region(region(0, {{"bedroom", 1.0}}, {1.5, 0}));
  p.add_region(region(1, {{"bedroom", 1.0}}, {-1, 0}));
  EXPECT_DOUBLE_EQ(graph_precision_recall(p, t, 1).recall, 1.0);
}

TEST(GraphMetrics, AddingPredictionsNeverLowersRecall) {
  Rng rng(17);
  const auto& vocab = prediction_choices();
  for (int trial = 0; trial < 30; ++trial) {
    SceneGraph t, p;
    for (int i = 0; i < 6; ++i)
      t.add_region(region(i, {{vocab[rng.uniform_int(0, 5)], 1.0}}, {rng.uniform() * 10, rng.uniform() * 10}));
    double last = 0;
    for (int i = 0; i < 10; ++i) {
      p.add_region(region(i, {{vocab[rng.uniform_int(0, 5)], 0.6}, {vocab[rng.uniform_int(0, 5)], 0.4}},
                          {rng.uniform() * 10, rng.uniform() * 10}));
      for (int k : {1, 3}) {
        double r = graph_precision_recall(p, t, k).recall;
        if (k == 1) {
          EXPECT_GE(r, last);
          last = r;
        }
      }
    }
  }
}

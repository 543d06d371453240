#include <gtest/gtest.h>

#include "test_support.hpp"
#include "xtc/clients.hpp"
#include "xtc/error.hpp"
#include "xtc/refine.hpp"

using namespace xtc;
using namespace xtc::testing;

namespace {

RawRelationPrediction raw(std::string s, std::string t, std::map<std::string, double> scores) {
  return {std::move(s), std::move(t), std::move(scores)};
}

SceneGraph boxes(std::vector<Node> nodes) { return SceneGraph("m", 200, 200, std::move(nodes), {}); }

}  // namespace

TEST(RefineConfig, Defaults) {
  const RefineConfig c;
  EXPECT_EQ(c.nr_threshold, 0.5);
  EXPECT_EQ(c.predicate_threshold, 0.4);
  EXPECT_EQ(c.merge_min_group, 3);
  EXPECT_TRUE(c.exclusive_predicates.contains("eating"));
  RefineConfig bad;
  bad.merge_min_group = 2;
  EXPECT_THROW(bad.validate(), InputError);
  bad = {};
  bad.nr_threshold = 1.5;
  EXPECT_THROW(bad.validate(), InputError);
}

TEST(Filter, ThresholdsAreInclusiveWhereStated) {
  const RefineConfig cfg;
  const auto out = filter_relations(
      {raw("a", "b", {{"NR", 0.49}, {"on", 0.4}, {"under", 0.39}}), raw("b", "a", {{"NR", 0.5}, {"on", 0.9}})}, cfg);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].describe(), "a -[on]-> b");
  EXPECT_DOUBLE_EQ(out[0].score, 0.4);
}

TEST(Filter, InvalidPredictionsRejected) {
  EXPECT_THROW(filter_relations({raw("a", "b", {{"on", 0.9}})}, RefineConfig{}), InvariantError);
  EXPECT_THROW(filter_relations({raw("a", "b", {{"NR", 0.1}, {"on", 1.2}})}, RefineConfig{}), InvariantError);
}

TEST(Exclusive, TopSubjectKeptTiesToSmallestId) {
  const RefineConfig cfg;
  std::vector<RelationCandidate> c{{"p2", "pizza", "eating", 0.7},
                                   {"p1", "pizza", "eating", 0.7},
                                   {"p3", "pizza", "eating", 0.6},
                                   {"p3", "pizza", "looking at", 0.9},
                                   {"p2", "cake", "eating", 0.5}};
  const auto out = enforce_exclusive_predicates(c, cfg);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].source, "p1");
  EXPECT_EQ(out[1].predicate, "looking at");
  EXPECT_EQ(out[2].target, "cake");
}

TEST(Attach, GroupsPredicatesPerPair) {
  const auto g = SceneGraph("a", 10, 10, {node("x", "dog"), node("y", "cat")}, {edge("x", "y", {"near"})});
  const auto out = attach_relations(g, {{"x", "y", "chasing", 0.8}, {"y", "x", "looking at", 0.6}});
  ASSERT_EQ(out.edges().size(), 2u);
  EXPECT_EQ(out.find_edge("x", "y")->predicate_names(), (std::vector<std::string>{"near", "chasing"}));
  EXPECT_EQ(out.find_edge("y", "x")->predicates[0].score, 0.6);
}

TEST(Merge, ClusterOfThreeBecomesMetaNode) {
  RefineConfig cfg;
  cfg.bbox_pad_fraction = 0.0;
  const auto g = SceneGraph("m", 200, 200,
                            {node("s1", "sheep", {{"primary color", "white"}}, BBox{0, 0, 20, 20}),
                             node("s2", "sheep", {{"primary color", "white"}}, BBox{10, 10, 20, 20}),
                             node("s3", "sheep", {{"primary color", "white"}, {"body position", "lying"}},
                                  BBox{25, 25, 20, 20}),
                             node("s4", "sheep", {}, BBox{150, 150, 10, 10}), node("g", "grass-merged", {}, BBox{0, 0, 200, 200})},
                            {edge("s2", "g", {"on"}), edge("s3", "g", {"on", "lying on"}), edge("s1", "s2", {"next to"})});
  const auto out = merge_overlapping_instances(g, cfg);
  ASSERT_EQ(out.nodes().size(), 3u);
  const Node* meta = out.find_node("s1");
  ASSERT_NE(meta, nullptr);
  EXPECT_EQ(meta->merged_count, 3);
  EXPECT_EQ(meta->bbox, (BBox{0, 0, 45, 45}));
  EXPECT_EQ(meta->attributes, (std::map<std::string, std::string>{{"primary color", "white"}}));
  EXPECT_NE(out.find_node("s4"), nullptr);
  ASSERT_EQ(out.edges().size(), 1u);
  EXPECT_EQ(out.edges()[0].predicate_names(), (std::vector<std::string>{"on", "lying on"}));
  EXPECT_EQ(merge_overlapping_instances(out, cfg), out);
}

TEST(Merge, PairsAndSeparatedGroupsStay) {
  RefineConfig cfg;
  cfg.bbox_pad_fraction = 0.0;
  const auto g = boxes({node("a", "cow", {}, BBox{0, 0, 10, 10}), node("b", "cow", {}, BBox{5, 5, 10, 10}),
                        node("c", "cow", {}, BBox{100, 100, 10, 10})});
  EXPECT_EQ(merge_overlapping_instances(g, cfg), g);
  // padding bridges the gap: 5% of 200 = 10px on each side
  cfg.bbox_pad_fraction = 0.05;
  const auto chain = boxes({node("a", "cow", {}, BBox{0, 0, 10, 10}), node("b", "cow", {}, BBox{25, 0, 10, 10}),
                            node("c", "cow", {}, BBox{50, 0, 10, 10})});
  EXPECT_EQ(merge_overlapping_instances(chain, cfg).nodes().size(), 1u);
  EXPECT_THROW(merge_overlapping_instances(boxes({node("a", "cow"), node("b", "cow"), node("c", "cow")}), cfg),
               InputError);
}

TEST(Verification, RequestAndParsing) {
  const auto g = SceneGraph("v", 100, 100, {node("a", "dog", {}, BBox{1, 2, 3, 4}), node("b", "ball", {}, BBox{5, 6, 7, 8})}, {});
  const auto req = build_relation_verification_request("img:v", g, {"a", "b", "chasing", 0.9});
  EXPECT_EQ(req.to_json().dump(),
            R"({"image":"img:v","object_bbox":[5,6,7,8],"predicate":"chasing","subject_bbox":[1,2,3,4]})");
  EXPECT_EQ(req.prompt, kRelationVerificationPrompt);
  EXPECT_EQ(parse_verification_answer(R"({"answer":"Yes"})"), VerificationAnswer::yes);
  EXPECT_EQ(parse_verification_answer("Looking closely... {\"answer\": \"no\"}"), VerificationAnswer::no);
  EXPECT_THROW(parse_verification_answer(R"({"answer":"maybe"})"), ParseError);
  EXPECT_THROW(parse_verification_answer("yes"), ParseError);
  const auto no_box = SceneGraph("v", 100, 100, {node("a", "dog"), node("b", "ball")}, {});
  EXPECT_THROW(build_relation_verification_request("i", no_box, {"a", "b", "on", 0.5}), InputError);

  const std::vector<RelationCandidate> cands{{"a", "b", "chasing", 0.9}, {"a", "b", "on", 0.5}};
  const auto kept = apply_verification(cands, {{cands[0], VerificationAnswer::yes}, {cands[1], VerificationAnswer::no}});
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_THROW(apply_verification(cands, {{cands[0], VerificationAnswer::yes}}), InputError);
}

TEST(RawScene, FixtureRefinesAsExpected) {
  const auto doc = nlohmann::json::parse(fixture_text("raw/yard.raw.json"));
  const RawScene raw_scene = raw_scene_from_json(doc);
  EXPECT_EQ(raw_scene.relations.size(), 5u);
  const SceneGraph out = refine_scene(raw_scene, RefineConfig{});
  // NR 0.6 drops d2 -> s2; sheep s1..s3 collapse; s1 keeps its grass edge
  EXPECT_EQ(out.nodes().size(), 4u);
  EXPECT_EQ(out.find_node("s1")->merged_count, 3);
  EXPECT_EQ(out.find_edge("d1", "g1")->predicate_names(), (std::vector<std::string>{"running on", "standing on"}));
  EXPECT_EQ(out.find_edge("d2", "s2"), nullptr);
  EXPECT_NE(out.find_edge("s1", "g1"), nullptr);

  auto bad = doc;
  bad["extra"] = 1;
  EXPECT_THROW(raw_scene_from_json(bad), SchemaError);
  bad = doc;
  bad["relations"][0]["source"] = "nobody";
  EXPECT_THROW(raw_scene_from_json(bad), Error);
}

TEST(RawScene, VerifierDropsRejectedCandidates) {
  const RawScene raw_scene = raw_scene_from_json(nlohmann::json::parse(fixture_text("raw/yard.raw.json")));
  std::vector<std::string> asked;
  const auto out = refine_scene(raw_scene, RefineConfig{}, [&](const RelationCandidate& c) {
    asked.push_back(c.describe());
    return c.predicate == "chasing" ? VerificationAnswer::no : VerificationAnswer::yes;
  });
  EXPECT_EQ(out.find_edge("d1", "s1"), nullptr);
  EXPECT_EQ(asked.size(), 5u);

  MockChatClient chat({}, false);
  chat.set_fallback([](const ChatRequest& r) {
    return r.prompt.find("\"chasing\"") != std::string::npos ? R"({"answer":"No"})" : R"({"answer":"Yes"})";
  });
  const auto via_chat = refine_scene(raw_scene, RefineConfig{}, chat_relation_verifier(chat, "img:yard", raw_scene.graph));
  EXPECT_EQ(via_chat, out);
  EXPECT_EQ(chat.calls(), 5u);
}

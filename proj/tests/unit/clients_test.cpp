#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <thread>

#include "test_support.hpp"
#include "xtc/clients.hpp"
#include "xtc/error.hpp"
#include "xtc/graph_match.hpp"
#include "xtc/hash.hpp"
#include "xtc/qa_gen.hpp"

using namespace xtc;
using namespace xtc::testing;

namespace {

class CountingEmbedder : public Embedder {
 public:
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override {
    ++calls;
    batches.push_back(texts);
    return inner.embed(texts);
  }
  HashingEmbedder inner;
  int calls = 0;
  std::vector<std::vector<std::string>> batches;
};

class FlakyChat : public ChatClient {
 public:
  FlakyChat(int failures, bool transient) : failures_(failures), transient_(transient) {}
  std::string chat(const ChatRequest&) override {
    ++calls;
    if (calls <= failures_) throw ClientError("boom", transient_);
    return "ok";
  }
  int calls = 0;

 private:
  int failures_;
  bool transient_;
};

}  // namespace

TEST(HashingEmbedder, NormalizedTokenBins) {
  HashingEmbedder e;
  const auto v = e.embed({"red car", "Red  CAR!", "", "dark red"});
  ASSERT_EQ(v.size(), 4u);
  double n = 0;
  for (double x : v[0]) n += x * x;
  EXPECT_NEAR(n, 1.0, 1e-12);
  EXPECT_EQ(v[0], v[1]);
  EXPECT_DOUBLE_EQ(clamped_cosine(v[0], v[1]), 1.0);
  EXPECT_EQ(v[2], EmbeddingVector(kHashingEmbedderDim, 0.0));
  EXPECT_EQ(HashingEmbedder::bin_of("red"), fnv1a64("red") % 384);
  // disjoint bins give cosine 0; the pair is chosen so the check is real
  ASSERT_NE(HashingEmbedder::bin_of("cat"), HashingEmbedder::bin_of("dog"));
  const auto cd = e.embed({"cat", "dog"});
  EXPECT_DOUBLE_EQ(clamped_cosine(cd[0], cd[1]), 0.0);
}

TEST(CachingEmbedder, MemoAndDisk) {
  TempDir dir;
  ContentCache disk(dir.path());
  CountingEmbedder inner;
  {
    CachingEmbedder c(inner, "hashing-384", &disk);
    const auto a = c.embed({"red", "blue", "red"});
    EXPECT_EQ(a[0], a[2]);
    EXPECT_EQ(inner.calls, 1);
    EXPECT_EQ(inner.batches[0], (std::vector<std::string>{"red", "blue"}));
    c.embed({"blue", "green"});
    EXPECT_EQ(inner.batches[1], std::vector<std::string>{"green"});
    c.embed({"red"});
    EXPECT_EQ(c.inner_calls(), 2u);
    EXPECT_EQ(c.inner_texts(), 3u);
    EXPECT_THROW(c.embed({}), InputError);
  }
  // a fresh instance is served from disk
  CachingEmbedder warm(inner, "hashing-384", &disk);
  warm.embed({"red", "green"});
  EXPECT_EQ(inner.calls, 2);
  CachingEmbedder other_model(inner, "other", &disk);
  other_model.embed({"red"});
  EXPECT_EQ(inner.calls, 3);
}

TEST(Chat, MockStrictAndFallback) {
  MockChatClient strict(std::map<std::string, std::string>{{"hi", "hello"}});
  EXPECT_EQ(strict.chat({"hi", {}, true}), "hello");
  try {
    strict.chat({"bye", {}, true});
    FAIL();
  } catch (const ClientError& e) {
    EXPECT_FALSE(e.transient());
  }
  EXPECT_EQ(strict.calls(), 2u);
  MockChatClient loose({}, false);
  EXPECT_EQ(loose.chat({"x", {}, true}), "");
  EchoChatClient echo;
  EXPECT_EQ(echo.chat({"no marker", {}, true}), "no marker");
  EXPECT_EQ(echo.chat({"rewrite" + std::string(kRefinePayloadMarker) + "a cat.", {}, true}), "a cat.");
}

TEST(Chat, RetriesTransientOnly) {
  FlakyChat two(2, true);
  RetryingChatClient r(two, 2);
  EXPECT_EQ(r.chat({"p", {}, true}), "ok");
  EXPECT_EQ(two.calls, 3);
  EXPECT_EQ(r.retries(), 2u);
  FlakyChat three(3, true);
  RetryingChatClient r2(three, 2);
  EXPECT_THROW(r2.chat({"p", {}, true}), ClientError);
  EXPECT_EQ(three.calls, 3);
  FlakyChat fatal(1, false);
  RetryingChatClient r3(fatal, 5);
  EXPECT_THROW(r3.chat({"p", {}, true}), ClientError);
  EXPECT_EQ(fatal.calls, 1);
  EXPECT_THROW(RetryingChatClient(fatal, -1), InputError);
}

TEST(Chat, CachingDeterministicOnly) {
  TempDir dir;
  ContentCache cache(dir.path());
  MockChatClient inner({}, false);
  int n = 0;
  inner.set_fallback([&](const ChatRequest&) { return "reply " + std::to_string(++n); });
  CachingChatClient c(inner, cache, "m");
  EXPECT_EQ(c.chat({"p", {"img"}, true}), "reply 1");
  EXPECT_EQ(c.chat({"p", {"img"}, true}), "reply 1");
  EXPECT_EQ(c.chat({"p", {}, true}), "reply 2");
  EXPECT_EQ(c.chat({"p", {"img"}, false}), "reply 3");
  EXPECT_EQ(inner.calls(), 3u);

  const auto req = CachingChatClient::canonical_request({"p", {"img"}, true}, "m");
  const std::string key = ContentCache::key_for(req);
  EXPECT_EQ(key, sha256_hex(req.dump()));
  const auto path = cache.path_for(key);
  EXPECT_EQ(path, dir.path() / key.substr(0, 2) / (key + ".json"));
  ASSERT_TRUE(std::filesystem::exists(path));
  const auto entry = nlohmann::json::parse(read_file(path));
  EXPECT_EQ(entry["hash"], key);
  EXPECT_EQ(entry["request"], req);
  EXPECT_EQ(entry["response"], "reply 1");
  EXPECT_TRUE(entry["timestamp"].is_number_integer());

  // a corrupt entry is a miss
  write_file_atomic(path, "{not json");
  EXPECT_EQ(c.chat({"p", {"img"}, true}), "reply 4");
  EXPECT_EQ(c.chat({"p", {"img"}, true}), "reply 4");
}

TEST(Limiter, PeakNeverExceedsLimit) {
  ConcurrencyLimiter lim(2);
  std::atomic<int> live{0}, worst{0};
  std::vector<std::thread> ts;
  for (int i = 0; i < 8; ++i)
    ts.emplace_back([&] {
      for (int k = 0; k < 20; ++k) {
        ConcurrencyLimiter::Slot s(lim);
        const int now = ++live;
        int w = worst.load();
        while (now > w && !worst.compare_exchange_weak(w, now)) {
        }
        std::this_thread::sleep_for(std::chrono::microseconds(50));
        --live;
      }
    });
  for (auto& t : ts) t.join();
  EXPECT_LE(lim.peak(), 2u);
  EXPECT_LE(worst.load(), 2);
  EXPECT_GE(lim.peak(), 1u);
  EXPECT_THROW(ConcurrencyLimiter(0), InputError);
}

TEST(MockModel, GenerationAndAnswers) {
  TempDir dir;
  ImageStore store(dir / "images");
  MockUnifiedModel m(store);
  const auto a = m.generate_image("a cat.");
  const auto b = m.generate_image("a cat.");
  const auto c = m.generate_image("a dog.");
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  EXPECT_EQ(a.size(), 64u + 4u);
  EXPECT_EQ(a.substr(64), ".ppm");
  EXPECT_TRUE(store.contains(a));
  EXPECT_EQ(sha256_hex(store.read(a)), a.substr(0, 64));
  EXPECT_EQ(m.generate_calls(), 3u);
  m.set_answer(a, "What?", "cat");
  EXPECT_EQ(m.answer_question(a, "What?"), "cat");
  EXPECT_EQ(m.answer_question(a, "Who?"), "");

  MockUnifiedModel gen_only(store, {true, false});
  EXPECT_THROW(gen_only.answer_question(a, "What?"), ClientError);
  MockUnifiedModel und_only(store, {false, true});
  EXPECT_THROW(und_only.generate_image("x"), ClientError);

  ContentCache cache(dir / "cache");
  CachingUnifiedModel cached(m, cache, "mock");
  EXPECT_EQ(cached.generate_image("a bird."), cached.generate_image("a bird."));
  EXPECT_EQ(m.generate_calls(), 4u);
}

TEST(ImageStore, RejectsPathTricks) {
  TempDir dir;
  ImageStore s(dir.path());
  EXPECT_THROW(s.path_for("../x.png"), InputError);
  EXPECT_THROW(s.path_for("a/b.png"), InputError);
  EXPECT_THROW(s.path_for(""), InputError);
  const auto ref = s.put("bytes", "bin");
  EXPECT_EQ(s.read(ref), "bytes");
  EXPECT_EQ(s.put("bytes", "bin"), ref);
}

TEST(Extractors, IdentityFixtureAndVlm) {
  const auto g = parse_scene_graph(fixture_text("graphs/kitchen.json"));
  IdentityExtractor id;
  id.add(g);
  EXPECT_EQ(id.extract("anything", {"kitchen", 640, 480}), g);
  EXPECT_THROW(id.extract("x", {"nope", 1, 1}), InputError);

  FixtureExtractor fx(fixtures_dir() / "pred");
  EXPECT_EQ(fx.extract("x", {"kitchen", 640, 480}).nodes().size(), 4u);

  MockChatClient vlm({}, false);
  vlm.set_fallback([](const ChatRequest& r) {
    EXPECT_EQ(r.image_refs, std::vector<std::string>{"ref.png"});
    return std::string(R"(Sure: {"nodes":[{"id":"a","label":"cat"}],"edges":[]})");
  });
  VlmPromptExtractor ve(vlm);
  const auto out = ve.extract("ref.png", {"img7", 100, 80});
  EXPECT_EQ(out.image_id(), "img7");
  EXPECT_EQ(out.width(), 100);
  EXPECT_EQ(out.nodes()[0].label, "cat");

  MockChatClient dangling({}, false);
  dangling.set_fallback([](const ChatRequest&) {
    return std::string(R"({"nodes":[{"id":"a","label":"cat"}],"edges":[{"source":"a","target":"zz","predicates":[{"name":"on"}]}]})");
  });
  VlmPromptExtractor bad(dangling);
  try {
    bad.extract("r", {"i", 10, 10});
    FAIL();
  } catch (const InvariantError& e) {
    EXPECT_NE(e.element().find("zz"), std::string::npos);
  }
  MockChatClient prose({}, false);
  prose.set_fallback([](const ChatRequest&) { return std::string("a cat on a mat"); });
  VlmPromptExtractor none(prose);
  EXPECT_THROW(none.extract("r", {"i", 10, 10}), ParseError);
}

#pragma once

#include <condition_variable>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "xtc/content_cache.hpp"
#include "xtc/model_client.hpp"

namespace xtc {

// ---- embedders -----------------------------------------------------------------

inline constexpr std::size_t kHashingEmbedderDim = 384;

/// Token counts hashed into 384 bins (fnv1a64 mod 384), L2-normalized. A text
/// without tokens maps to the zero vector.
class HashingEmbedder : public Embedder {
 public:
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;
  static std::size_t bin_of(std::string_view token);
};

/// Memoizes by text in memory and, when given a cache, on disk. Misses are sent
/// to the inner embedder as one batch.
class CachingEmbedder : public Embedder {
 public:
  CachingEmbedder(Embedder& inner, std::string model_id, ContentCache* disk = nullptr);
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;
  std::size_t inner_calls() const;
  std::size_t inner_texts() const;

 private:
  Embedder& inner_;
  std::string model_id_;
  ContentCache* disk_;
  mutable std::mutex mu_;
  std::map<std::string, EmbeddingVector> memo_;
  std::size_t inner_calls_ = 0;
  std::size_t inner_texts_ = 0;
};

// ---- chat ----------------------------------------------------------------------

/// Canned replies keyed by prompt. In strict mode an unmapped prompt is an error;
/// otherwise `fallback` answers it.
class MockChatClient : public ChatClient {
 public:
  explicit MockChatClient(std::map<std::string, std::string> replies = {}, bool strict = true);
  void set_reply(std::string prompt, std::string reply);
  void set_fallback(std::function<std::string(const ChatRequest&)> fallback);
  std::string chat(const ChatRequest& request) override;
  std::size_t calls() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::string> replies_;
  bool strict_;
  std::function<std::string(const ChatRequest&)> fallback_;
  std::size_t calls_ = 0;
};

/// Returns the payload of a refinement prompt unchanged (text after the last
/// payload marker, or the whole prompt).
class EchoChatClient : public ChatClient {
 public:
  std::string chat(const ChatRequest& request) override;
};

/// Retries transient ClientErrors up to `max_retries` times.
class RetryingChatClient : public ChatClient {
 public:
  RetryingChatClient(ChatClient& inner, int max_retries, int backoff_ms = 0);
  std::string chat(const ChatRequest& request) override;
  std::size_t retries() const;

 private:
  ChatClient& inner_;
  int max_retries_;
  int backoff_ms_;
  mutable std::mutex mu_;
  std::size_t retries_ = 0;
};

/// Serves deterministic requests from the content cache.
class CachingChatClient : public ChatClient {
 public:
  CachingChatClient(ChatClient& inner, ContentCache& cache, std::string model_id);
  std::string chat(const ChatRequest& request) override;
  static nlohmann::json canonical_request(const ChatRequest& request, const std::string& model_id);

 private:
  ChatClient& inner_;
  ContentCache& cache_;
  std::string model_id_;
};

/// Counting gate bounding in-flight calls.
class ConcurrencyLimiter {
 public:
  explicit ConcurrencyLimiter(std::size_t limit);
  void acquire();
  void release();
  std::size_t peak() const;
  std::size_t limit() const noexcept { return limit_; }

  class Slot {
   public:
    explicit Slot(ConcurrencyLimiter& l) : l_(l) { l_.acquire(); }
    ~Slot() { l_.release(); }
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;

   private:
    ConcurrencyLimiter& l_;
  };

 private:
  std::size_t limit_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::size_t in_flight_ = 0;
  std::size_t peak_ = 0;
};

class LimitedChatClient : public ChatClient {
 public:
  LimitedChatClient(ChatClient& inner, ConcurrencyLimiter& limiter) : inner_(inner), limiter_(limiter) {}
  std::string chat(const ChatRequest& request) override {
    ConcurrencyLimiter::Slot slot(limiter_);
    return inner_.chat(request);
  }

 private:
  ChatClient& inner_;
  ConcurrencyLimiter& limiter_;
};

// ---- model under test ----------------------------------------------------------

/// Deterministic stand-in for a unified model. Generation writes a small PPM
/// derived from the prompt hash into the image store; understanding answers from
/// a (image ref, question) table and returns "" for unknown questions.
class MockUnifiedModel : public UnifiedModel {
 public:
  MockUnifiedModel(ImageStore& images, ModelCapabilities caps = {});
  ModelCapabilities capabilities() const override { return caps_; }
  std::string generate_image(const std::string& prompt) override;
  std::string answer_question(const std::string& image_ref, const std::string& question) override;
  void set_answer(const std::string& image_ref, const std::string& question, std::string answer);
  std::size_t generate_calls() const;

 private:
  ImageStore& images_;
  ModelCapabilities caps_;
  mutable std::mutex mu_;
  std::map<std::pair<std::string, std::string>, std::string> answers_;
  std::size_t generate_calls_ = 0;
};

/// Serves repeated generations (by prompt) and answers (by image and question)
/// from the content cache.
class CachingUnifiedModel : public UnifiedModel {
 public:
  CachingUnifiedModel(UnifiedModel& inner, ContentCache& cache, std::string model_id)
      : inner_(inner), cache_(cache), model_id_(std::move(model_id)) {}
  ModelCapabilities capabilities() const override { return inner_.capabilities(); }
  std::string generate_image(const std::string& prompt) override;
  std::string answer_question(const std::string& image_ref, const std::string& question) override;

 private:
  std::string cached(const nlohmann::json& request, const std::function<std::string()>& call);

  UnifiedModel& inner_;
  ContentCache& cache_;
  std::string model_id_;
};

// ---- extractors ----------------------------------------------------------------

/// Returns the reference graph of the image the generation was prompted from.
class IdentityExtractor : public GraphExtractor {
 public:
  void add(const SceneGraph& g);
  SceneGraph extract(const std::string& image_ref, const ExtractionContext& ctx) override;

 private:
  std::mutex mu_;
  std::map<std::string, SceneGraph> graphs_;
};

/// Loads `<dir>/<image_id>.json` and validates it.
class FixtureExtractor : public GraphExtractor {
 public:
  explicit FixtureExtractor(std::filesystem::path dir) : dir_(std::move(dir)) {}
  SceneGraph extract(const std::string& image_ref, const ExtractionContext& ctx) override;

 private:
  std::filesystem::path dir_;
};

inline constexpr std::string_view kGraphExtractionPrompt =
    "List every object in the image as a scene graph. Return only JSON with keys `image_id`, "
    "`width`, `height`, `nodes` (each with `id`, `label`, optional `bbox` [x, y, w, h] and "
    "`attributes`) and `edges` (each with `source`, `target` and `predicates`).";

/// Reference adapter: a chat VLM is asked to emit the scene-graph schema, the reply
/// is parsed and validated. Image id and size are taken from the context.
class VlmPromptExtractor : public GraphExtractor {
 public:
  explicit VlmPromptExtractor(ChatClient& chat) : chat_(chat) {}
  SceneGraph extract(const std::string& image_ref, const ExtractionContext& ctx) override;

 private:
  ChatClient& chat_;
};

}  // namespace xtc

#include "xtc/clients.hpp"

#include <chrono>
#include <cmath>
#include <spdlog/spdlog.h>
#include <thread>

#include "xtc/error.hpp"
#include "xtc/hash.hpp"
#include "xtc/qa_gen.hpp"
#include "xtc/raster.hpp"
#include "xtc/text.hpp"

namespace xtc {

// ---- embedders -----------------------------------------------------------------

std::size_t HashingEmbedder::bin_of(std::string_view token) { return fnv1a64(token) % kHashingEmbedderDim; }

std::vector<EmbeddingVector> HashingEmbedder::embed(const std::vector<std::string>& texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    EmbeddingVector v(kHashingEmbedderDim, 0.0);
    for (const auto& tok : tokenize(t)) v[bin_of(tok)] += 1.0;
    double n = 0.0;
    for (double x : v) n += x * x;
    if (n > 0.0) {
      n = std::sqrt(n);
      for (double& x : v) x /= n;
    }
    out.push_back(std::move(v));
  }
  return out;
}

CachingEmbedder::CachingEmbedder(Embedder& inner, std::string model_id, ContentCache* disk)
    : inner_(inner), model_id_(std::move(model_id)), disk_(disk) {}

std::vector<EmbeddingVector> CachingEmbedder::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) throw InputError("embed: empty batch");
  auto request_for = [&](const std::string& t) {
    return nlohmann::json{{"kind", "embed"}, {"model", model_id_}, {"text", t}};
  };
  std::vector<std::string> missing;
  {
    std::lock_guard lock(mu_);
    for (const auto& t : texts) {
      if (memo_.contains(t) || std::find(missing.begin(), missing.end(), t) != missing.end()) continue;
      if (disk_) {
        if (auto hit = disk_->get(ContentCache::key_for(request_for(t)))) {
          memo_.emplace(t, hit->get<EmbeddingVector>());
          continue;
        }
      }
      missing.push_back(t);
    }
  }
  if (!missing.empty()) {
    auto vecs = inner_.embed(missing);
    if (vecs.size() != missing.size()) throw ClientError("embedder returned a wrong number of vectors", false);
    std::lock_guard lock(mu_);
    ++inner_calls_;
    inner_texts_ += missing.size();
    for (std::size_t i = 0; i < missing.size(); ++i) {
      if (disk_) {
        const auto req = request_for(missing[i]);
        disk_->put(ContentCache::key_for(req), req, vecs[i]);
      }
      memo_.emplace(missing[i], std::move(vecs[i]));
    }
  }
  std::lock_guard lock(mu_);
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    out.push_back(memo_.at(t));
    if (out.back().size() != out.front().size()) throw ClientError("embedding dimension mismatch in batch", false);
  }
  return out;
}

std::size_t CachingEmbedder::inner_calls() const {
  std::lock_guard lock(mu_);
  return inner_calls_;
}

std::size_t CachingEmbedder::inner_texts() const {
  std::lock_guard lock(mu_);
  return inner_texts_;
}

// ---- chat ----------------------------------------------------------------------

MockChatClient::MockChatClient(std::map<std::string, std::string> replies, bool strict)
    : replies_(std::move(replies)), strict_(strict) {}

void MockChatClient::set_reply(std::string prompt, std::string reply) {
  std::lock_guard lock(mu_);
  replies_[std::move(prompt)] = std::move(reply);
}

void MockChatClient::set_fallback(std::function<std::string(const ChatRequest&)> fallback) {
  std::lock_guard lock(mu_);
  fallback_ = std::move(fallback);
}

std::string MockChatClient::chat(const ChatRequest& request) {
  std::function<std::string(const ChatRequest&)> fallback;
  {
    std::lock_guard lock(mu_);
    ++calls_;
    if (auto it = replies_.find(request.prompt); it != replies_.end()) return it->second;
    if (strict_) {
      throw ClientError("mock chat: no reply configured for prompt '" + request.prompt.substr(0, 80) + "'", false);
    }
    fallback = fallback_;
  }
  return fallback ? fallback(request) : std::string();
}

std::size_t MockChatClient::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::string EchoChatClient::chat(const ChatRequest& request) {
  const auto pos = request.prompt.rfind(kRefinePayloadMarker);
  if (pos == std::string::npos) return request.prompt;
  return request.prompt.substr(pos + kRefinePayloadMarker.size());
}

RetryingChatClient::RetryingChatClient(ChatClient& inner, int max_retries, int backoff_ms)
    : inner_(inner), max_retries_(max_retries), backoff_ms_(backoff_ms) {
  if (max_retries < 0) throw InputError("max retries must be >= 0");
}

std::string RetryingChatClient::chat(const ChatRequest& request) {
  for (int attempt = 0;; ++attempt) {
    try {
      std::string reply = inner_.chat(request);
      if (attempt > 0) spdlog::info("chat succeeded after {} retries", attempt);
      return reply;
    } catch (const ClientError& e) {
      if (!e.transient() || attempt >= max_retries_) throw;
      {
        std::lock_guard lock(mu_);
        ++retries_;
      }
      spdlog::warn("transient chat failure (retry {}/{}): {}", attempt + 1, max_retries_, e.what());
      if (backoff_ms_ > 0) std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms_ << attempt));
    }
  }
}

std::size_t RetryingChatClient::retries() const {
  std::lock_guard lock(mu_);
  return retries_;
}

CachingChatClient::CachingChatClient(ChatClient& inner, ContentCache& cache, std::string model_id)
    : inner_(inner), cache_(cache), model_id_(std::move(model_id)) {}

nlohmann::json CachingChatClient::canonical_request(const ChatRequest& request, const std::string& model_id) {
  return {{"kind", "chat"}, {"model", model_id}, {"prompt", request.prompt}, {"image_refs", request.image_refs}};
}

std::string CachingChatClient::chat(const ChatRequest& request) {
  if (!request.deterministic) return inner_.chat(request);
  const auto req = canonical_request(request, model_id_);
  const auto key = ContentCache::key_for(req);
  if (auto hit = cache_.get(key); hit && hit->is_string()) return hit->get<std::string>();
  std::string reply = inner_.chat(request);
  cache_.put(key, req, reply);
  return reply;
}

ConcurrencyLimiter::ConcurrencyLimiter(std::size_t limit) : limit_(limit) {
  if (limit == 0) throw InputError("concurrency limit must be positive");
}

void ConcurrencyLimiter::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return in_flight_ < limit_; });
  ++in_flight_;
  peak_ = std::max(peak_, in_flight_);
}

void ConcurrencyLimiter::release() {
  {
    std::lock_guard lock(mu_);
    --in_flight_;
  }
  cv_.notify_one();
}

std::size_t ConcurrencyLimiter::peak() const {
  std::lock_guard lock(mu_);
  return peak_;
}

// ---- model under test ----------------------------------------------------------

MockUnifiedModel::MockUnifiedModel(ImageStore& images, ModelCapabilities caps) : images_(images), caps_(caps) {}

std::string MockUnifiedModel::generate_image(const std::string& prompt) {
  if (!caps_.generation) throw ClientError("model declares no generation capability", false);
  {
    std::lock_guard lock(mu_);
    ++generate_calls_;
  }
  const std::uint64_t h = fnv1a64(prompt);
  RgbImage img(32, 32);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      std::uint8_t* px = img.at(x, y);
      const bool light = ((x / 4) + (y / 4) + static_cast<int>(h >> 24)) % 2 == 0;
      for (int c = 0; c < 3; ++c) px[c] = light ? 255 : static_cast<std::uint8_t>(h >> (8 * c));
    }
  }
  return images_.put(encode_ppm(img), "ppm");
}

std::string MockUnifiedModel::answer_question(const std::string& image_ref, const std::string& question) {
  if (!caps_.understanding) throw ClientError("model declares no understanding capability", false);
  std::lock_guard lock(mu_);
  auto it = answers_.find({image_ref, question});
  return it == answers_.end() ? std::string() : it->second;
}

void MockUnifiedModel::set_answer(const std::string& image_ref, const std::string& question, std::string answer) {
  std::lock_guard lock(mu_);
  answers_[{image_ref, question}] = std::move(answer);
}

std::size_t MockUnifiedModel::generate_calls() const {
  std::lock_guard lock(mu_);
  return generate_calls_;
}

std::string CachingUnifiedModel::cached(const nlohmann::json& request, const std::function<std::string()>& call) {
  const auto key = ContentCache::key_for(request);
  if (auto hit = cache_.get(key); hit && hit->is_string()) return hit->get<std::string>();
  std::string out = call();
  cache_.put(key, request, out);
  return out;
}

std::string CachingUnifiedModel::generate_image(const std::string& prompt) {
  return cached({{"kind", "generate"}, {"model", model_id_}, {"prompt", prompt}},
                [&] { return inner_.generate_image(prompt); });
}

std::string CachingUnifiedModel::answer_question(const std::string& image_ref, const std::string& question) {
  return cached({{"kind", "answer"}, {"model", model_id_}, {"image", image_ref}, {"question", question}},
                [&] { return inner_.answer_question(image_ref, question); });
}

// ---- extractors ----------------------------------------------------------------

void IdentityExtractor::add(const SceneGraph& g) {
  std::lock_guard lock(mu_);
  graphs_.insert_or_assign(g.image_id(), g);
}

SceneGraph IdentityExtractor::extract(const std::string&, const ExtractionContext& ctx) {
  std::lock_guard lock(mu_);
  auto it = graphs_.find(ctx.image_id);
  if (it == graphs_.end()) throw InputError("identity extractor: no reference graph for '" + ctx.image_id + "'");
  return it->second;
}

SceneGraph FixtureExtractor::extract(const std::string&, const ExtractionContext& ctx) {
  return parse_scene_graph(read_file(dir_ / (ctx.image_id + ".json")));
}

SceneGraph VlmPromptExtractor::extract(const std::string& image_ref, const ExtractionContext& ctx) {
  const std::string reply = chat_.chat({std::string(kGraphExtractionPrompt), {image_ref}, true});
  auto doc = extract_trailing_json(reply);
  if (!doc || !doc->is_object()) throw ParseError("extractor reply holds no scene-graph JSON object");
  (*doc)["image_id"] = ctx.image_id;
  (*doc)["width"] = ctx.width;
  (*doc)["height"] = ctx.height;
  return scene_graph_from_json(*doc);
}

}  // namespace xtc

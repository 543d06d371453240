#pragma once

#include <functional>
#include <memory>
#include <nlohmann/json.hpp>
#include <string>

#include "xtc/clients.hpp"
#include "xtc/content_cache.hpp"
#include "xtc/model_client.hpp"

namespace xtc {

struct ClientConfig {
  std::string endpoint;   // base URL, e.g. "https://host/v1"
  std::string model;
  std::string token_env;  // name of the variable holding the bearer token
  double timeout_s = 60.0;
  int max_retries = 2;
  int max_in_flight = 4;

  void validate() const;
  /// Bearer token from the environment, "" when unset.
  std::string token() const;
};

ClientConfig client_config_from_json(const nlohmann::json& j, const std::string& default_token_env);
nlohmann::ordered_json to_json(const ClientConfig& c);

inline constexpr std::string_view kJudgeTokenEnv = "XTC_JUDGE_TOKEN";
inline constexpr std::string_view kEmbedTokenEnv = "XTC_EMBED_TOKEN";
inline constexpr std::string_view kUmmTokenEnv = "XTC_UMM_TOKEN";

struct Url {
  std::string scheme_host_port;  // "https://host:443"
  std::string path;              // "/v1"
};

Url parse_url(const std::string& url);

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

/// Maps an image reference to something the wire accepts (URL or data URL).
using ImageResolver = std::function<std::string(const std::string&)>;

/// Data URL for a stored image reference; http(s) and data URLs pass through.
ImageResolver store_resolver(const ImageStore& store);

/// Wire body of a chat-completions request.
nlohmann::json chat_completions_body(const std::string& model, const ChatRequest& request,
                                     const ImageResolver& resolve);
/// Assistant text of a chat-completions response.
std::string chat_completions_text(const nlohmann::json& response);

/// POSTs JSON and returns the parsed body. 429, 5xx and transport errors are
/// transient and retried up to cfg.max_retries times; other non-2xx statuses fail at once.
nlohmann::json post_json(const ClientConfig& cfg, const std::string& path_suffix, const nlohmann::json& body,
                         ConcurrencyLimiter* limiter = nullptr);

class HttpChatClient : public ChatClient {
 public:
  explicit HttpChatClient(ClientConfig cfg, ImageResolver resolve = {});
  std::string chat(const ChatRequest& request) override;

 private:
  ClientConfig cfg_;
  ImageResolver resolve_;
  ConcurrencyLimiter limiter_;
};

/// Embeddings wire format: {"model", "input": [...]} -> {"data": [{"index", "embedding"}]}.
class HttpEmbedder : public Embedder {
 public:
  explicit HttpEmbedder(ClientConfig cfg);
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;

 private:
  ClientConfig cfg_;
  ConcurrencyLimiter limiter_;
};

/// Images via "/images/generations" (b64_json), answers via "/chat/completions".
class HttpUnifiedModel : public UnifiedModel {
 public:
  HttpUnifiedModel(ClientConfig cfg, ImageStore& images, ModelCapabilities caps = {});
  ModelCapabilities capabilities() const override { return caps_; }
  std::string generate_image(const std::string& prompt) override;
  std::string answer_question(const std::string& image_ref, const std::string& question) override;

 private:
  ClientConfig cfg_;
  ImageStore& images_;
  ModelCapabilities caps_;
  ConcurrencyLimiter limiter_;
};

/// External extraction service: POST {image, image_id, width, height} returns a
/// scene-graph document.
class ServiceExtractor : public GraphExtractor {
 public:
  ServiceExtractor(ClientConfig cfg, ImageResolver resolve);
  SceneGraph extract(const std::string& image_ref, const ExtractionContext& ctx) override;

 private:
  ClientConfig cfg_;
  ImageResolver resolve_;
  ConcurrencyLimiter limiter_;
};

}  // namespace xtc

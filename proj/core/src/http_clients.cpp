#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <openssl/evp.h>

#include <cmath>
#include <cstdlib>
#include <spdlog/spdlog.h>

#include "xtc/error.hpp"
#include "xtc/http_clients.hpp"

namespace xtc {

void ClientConfig::validate() const {
  if (endpoint.empty()) throw InputError("client config: endpoint is empty");
  parse_url(endpoint);
  if (!(timeout_s > 0.0)) throw InputError("client config: timeout must be positive");
  if (max_retries < 0) throw InputError("client config: retries must be >= 0");
  if (max_in_flight < 1) throw InputError("client config: max in-flight must be >= 1");
}

std::string ClientConfig::token() const {
  if (token_env.empty()) return {};
  const char* v = std::getenv(token_env.c_str());
  return v ? std::string(v) : std::string();
}

ClientConfig client_config_from_json(const nlohmann::json& j, const std::string& default_token_env) {
  ClientConfig c;
  try {
    c.endpoint = j.at("endpoint").get<std::string>();
    c.model = j.value("model", "");
    c.token_env = j.value("token_env", default_token_env);
    c.timeout_s = j.value("timeout_s", 60.0);
    c.max_retries = j.value("max_retries", 2);
    c.max_in_flight = j.value("max_in_flight", 4);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("client config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::ordered_json to_json(const ClientConfig& c) {
  nlohmann::ordered_json j;
  j["endpoint"] = c.endpoint;
  j["model"] = c.model;
  j["token_env"] = c.token_env;
  j["timeout_s"] = c.timeout_s;
  j["max_retries"] = c.max_retries;
  j["max_in_flight"] = c.max_in_flight;
  return j;
}

Url parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw InputError("url '" + url + "' has no scheme");
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw InputError("url '" + url + "': unsupported scheme");
  const auto path_start = url.find('/', scheme_end + 3);
  Url u;
  u.scheme_host_port = url.substr(0, path_start);
  u.path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!u.path.empty() && u.path.back() == '/') u.path.pop_back();
  if (u.scheme_host_port.size() == scheme_end + 3) throw InputError("url '" + url + "' has no host");
  return u;
}

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string base64_decode(std::string_view text) {
  std::string in;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) in += c;
  }
  if (in.size() % 4 != 0) throw ParseError("base64 length is not a multiple of 4");
  std::string out(3 * in.size() / 4, '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(in.data()), static_cast<int>(in.size()));
  if (n < 0) throw ParseError("invalid base64");
  std::size_t len = static_cast<std::size_t>(n);
  if (!in.empty() && in.back() == '=') --len;
  if (in.size() > 1 && in[in.size() - 2] == '=') --len;
  out.resize(len);
  return out;
}

ImageResolver store_resolver(const ImageStore& store) {
  return [&store](const std::string& ref) -> std::string {
    if (ref.starts_with("http://") || ref.starts_with("https://") || ref.starts_with("data:")) return ref;
    std::string mime = "application/octet-stream";
    if (ref.ends_with(".png")) mime = "image/png";
    if (ref.ends_with(".jpg") || ref.ends_with(".jpeg")) mime = "image/jpeg";
    if (ref.ends_with(".ppm")) mime = "image/x-portable-pixmap";
    return "data:" + mime + ";base64," + base64_encode(store.read(ref));
  };
}

nlohmann::json chat_completions_body(const std::string& model, const ChatRequest& request,
                                     const ImageResolver& resolve) {
  nlohmann::json content = nlohmann::json::array();
  content.push_back({{"type", "text"}, {"text", request.prompt}});
  for (const auto& ref : request.image_refs) {
    content.push_back({{"type", "image_url"}, {"image_url", {{"url", resolve ? resolve(ref) : ref}}}});
  }
  nlohmann::json body{{"model", model}, {"messages", {{{"role", "user"}, {"content", content}}}}};
  if (request.deterministic) body["temperature"] = 0;
  return body;
}

std::string chat_completions_text(const nlohmann::json& response) {
  try {
    const auto& msg = response.at("choices").at(0).at("message");
    const auto& c = msg.at("content");
    if (c.is_string()) return c.get<std::string>();
    std::string out;
    for (const auto& part : c) {
      if (part.value("type", "") == "text") out += part.at("text").get<std::string>();
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ClientError(std::string("malformed chat-completions response: ") + e.what(), false);
  }
}

namespace {

nlohmann::json post_once(const ClientConfig& cfg, const std::string& path_suffix, const std::string& body) {
  const Url url = parse_url(cfg.endpoint);
  httplib::Client cli(url.scheme_host_port);
  const auto secs = static_cast<time_t>(cfg.timeout_s);
  const auto usecs = static_cast<time_t>((cfg.timeout_s - static_cast<double>(secs)) * 1e6);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (const auto tok = cfg.token(); !tok.empty()) headers.emplace("Authorization", "Bearer " + tok);
  auto res = cli.Post(url.path + path_suffix, headers, body, "application/json");
  if (!res) {
    throw ClientError("POST " + cfg.endpoint + path_suffix + ": " + httplib::to_string(res.error()), true);
  }
  if (res->status < 200 || res->status >= 300) {
    const bool transient = res->status == 429 || res->status >= 500;
    throw ClientError("POST " + cfg.endpoint + path_suffix + ": status " + std::to_string(res->status), transient);
  }
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ClientError("POST " + cfg.endpoint + path_suffix + ": response is not JSON: " + e.what(), false);
  }
}

}  // namespace

nlohmann::json post_json(const ClientConfig& cfg, const std::string& path_suffix, const nlohmann::json& body,
                         ConcurrencyLimiter* limiter) {
  const std::string text = body.dump();
  for (int attempt = 0;; ++attempt) {
    try {
      if (!limiter) return post_once(cfg, path_suffix, text);
      ConcurrencyLimiter::Slot slot(*limiter);
      return post_once(cfg, path_suffix, text);
    } catch (const ClientError& e) {
      if (!e.transient() || attempt >= cfg.max_retries) throw;
      spdlog::warn("{} (retry {}/{})", e.what(), attempt + 1, cfg.max_retries);
    }
  }
}

HttpChatClient::HttpChatClient(ClientConfig cfg, ImageResolver resolve)
    : cfg_(std::move(cfg)), resolve_(std::move(resolve)), limiter_(static_cast<std::size_t>(std::max(1, cfg_.max_in_flight))) {
  cfg_.validate();
}

std::string HttpChatClient::chat(const ChatRequest& request) {
  return chat_completions_text(post_json(cfg_, "/chat/completions", chat_completions_body(cfg_.model, request, resolve_), &limiter_));
}

HttpEmbedder::HttpEmbedder(ClientConfig cfg)
    : cfg_(std::move(cfg)), limiter_(static_cast<std::size_t>(std::max(1, cfg_.max_in_flight))) {
  cfg_.validate();
}

std::vector<EmbeddingVector> HttpEmbedder::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) throw InputError("embed: empty batch");
  const auto res = post_json(cfg_, "/embeddings", {{"model", cfg_.model}, {"input", texts}}, &limiter_);
  std::vector<EmbeddingVector> out(texts.size());
  try {
    const auto& data = res.at("data");
    if (data.size() != texts.size()) throw ClientError("embeddings response has a wrong number of vectors", false);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto idx = data[i].value("index", i);
      if (idx >= out.size()) throw ClientError("embeddings response index out of range", false);
      out[idx] = data[i].at("embedding").get<EmbeddingVector>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ClientError(std::string("malformed embeddings response: ") + e.what(), false);
  }
  for (auto& v : out) {
    if (v.size() != out.front().size() || v.empty()) throw ClientError("embedding dimension mismatch in batch", false);
    double n = 0.0;
    for (double x : v) n += x * x;
    if (n > 0.0) {
      n = std::sqrt(n);
      for (double& x : v) x /= n;
    }
  }
  return out;
}

HttpUnifiedModel::HttpUnifiedModel(ClientConfig cfg, ImageStore& images, ModelCapabilities caps)
    : cfg_(std::move(cfg)), images_(images), caps_(caps), limiter_(static_cast<std::size_t>(std::max(1, cfg_.max_in_flight))) {
  cfg_.validate();
}

std::string HttpUnifiedModel::generate_image(const std::string& prompt) {
  if (!caps_.generation) throw ClientError("model declares no generation capability", false);
  const auto res = post_json(cfg_, "/images/generations",
                             {{"model", cfg_.model}, {"prompt", prompt}, {"n", 1}, {"response_format", "b64_json"}},
                             &limiter_);
  std::string b64;
  try {
    b64 = res.at("data").at(0).at("b64_json").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ClientError(std::string("malformed image response: ") + e.what(), false);
  }
  const std::string bytes = base64_decode(b64);
  std::string ext = "bin";
  if (bytes.starts_with("\x89PNG")) ext = "png";
  if (bytes.starts_with("\xff\xd8")) ext = "jpg";
  if (bytes.starts_with("P6")) ext = "ppm";
  return images_.put(bytes, ext);
}

std::string HttpUnifiedModel::answer_question(const std::string& image_ref, const std::string& question) {
  if (!caps_.understanding) throw ClientError("model declares no understanding capability", false);
  const ChatRequest req{question, {image_ref}, true};
  return chat_completions_text(post_json(cfg_, "/chat/completions", chat_completions_body(cfg_.model, req, store_resolver(images_)), &limiter_));
}

ServiceExtractor::ServiceExtractor(ClientConfig cfg, ImageResolver resolve)
    : cfg_(std::move(cfg)), resolve_(std::move(resolve)), limiter_(static_cast<std::size_t>(std::max(1, cfg_.max_in_flight))) {
  cfg_.validate();
}

SceneGraph ServiceExtractor::extract(const std::string& image_ref, const ExtractionContext& ctx) {
  const auto res = post_json(cfg_, "", {{"image", resolve_ ? resolve_(image_ref) : image_ref},
                                        {"image_id", ctx.image_id},
                                        {"width", ctx.width},
                                        {"height", ctx.height}},
                            &limiter_);
  return scene_graph_from_json(res);
}

}  // namespace xtc

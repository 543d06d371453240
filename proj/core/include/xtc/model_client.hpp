#pragma once

#include <string>
#include <vector>

#include "xtc/scene_graph.hpp"

namespace xtc {

using EmbeddingVector = std::vector<double>;

/// Text embedding provider. Implementations return one L2-normalized vector per text.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) = 0;
};

struct ChatRequest {
  std::string prompt;
  std::vector<std::string> image_refs;
  bool deterministic = true;  // eligible for response caching
};

/// Chat/VLM endpoint carrying judge, refinement, verification and understanding traffic.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string chat(const ChatRequest& request) = 0;
};

struct ModelCapabilities {
  bool generation = true;
  bool understanding = true;
};

/// The unified model under test.
class UnifiedModel {
 public:
  virtual ~UnifiedModel() = default;
  virtual ModelCapabilities capabilities() const { return {}; }
  /// Returns a content-addressed image reference.
  virtual std::string generate_image(const std::string& prompt) = 0;
  virtual std::string answer_question(const std::string& image_ref, const std::string& question) = 0;
};

struct ExtractionContext {
  std::string image_id;  // the reference image the generation was prompted from
  int width = 0;
  int height = 0;
};

/// Parses a generated image into a predicted scene graph.
class GraphExtractor {
 public:
  virtual ~GraphExtractor() = default;
  virtual SceneGraph extract(const std::string& image_ref, const ExtractionContext& ctx) = 0;
};

}  // namespace xtc

#pragma once

#include <cstdint>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "xtc/scene_graph.hpp"

namespace xtc {

struct MetaClass {
  std::string name;
  std::set<std::string> member_labels;
  std::vector<std::string> keys;  // ordered; composite keys such as "upper clothing type/color" are kept whole

  bool operator==(const MetaClass&) const = default;
};

/// Meta-class taxonomy: each class label maps to at most one meta-class.
class MetaClassSchema {
 public:
  explicit MetaClassSchema(std::vector<MetaClass> meta_classes);

  const std::vector<MetaClass>& meta_classes() const noexcept { return meta_classes_; }
  /// nullptr when the label is not mapped.
  const MetaClass* meta_class_for(std::string_view label) const;
  /// Empty when the label is not mapped.
  const std::vector<std::string>& keys_for(std::string_view label) const;

  bool operator==(const MetaClassSchema& o) const { return meta_classes_ == o.meta_classes_; }

 private:
  std::vector<MetaClass> meta_classes_;
  std::map<std::string, std::size_t, std::less<>> label_index_;
};

/// The bundled 30-meta-class table (also shipped as schemas/metaclasses-v1.json).
const MetaClassSchema& default_metaclass_schema();

MetaClassSchema metaclass_schema_from_json(const nlohmann::json& doc);
MetaClassSchema load_metaclass_schema(const std::string& path);
nlohmann::ordered_json to_json(const MetaClassSchema& schema);

/// Convenience wrapper over schema.keys_for that logs unmapped labels.
std::vector<std::string> keys_for(std::string_view label, const MetaClassSchema& schema);

// ---- dual-view request ---------------------------------------------------------

struct PixelRect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  bool operator==(const PixelRect&) const = default;
};

/// Geometry for the two views handed to the attribute VLM.
struct ViewSpec {
  // Semantic Spotlight: whole image blurred except `target`, with `target` outlined.
  PixelRect target;
  int blur_radius = 0;
  // Detail Crop: `crop` cut out; everything outside `target` filled with `background`.
  PixelRect crop;
  std::uint8_t background = 128;

  nlohmann::json to_json() const;
};

inline constexpr double kBlurRadiusFraction = 0.02;  // of max image dimension
inline constexpr double kCropMarginFraction = 0.10;  // of max bbox side
inline constexpr std::uint8_t kNeutralGray = 128;

ViewSpec make_view_spec(const BBox& bbox, int image_width, int image_height);

inline constexpr std::string_view kAttributePromptTemplate =
    "Given the Detail Crop image and the Semantic Spotlight image, identify the following "
    "attribute keys for the target object: {key_set}. Provide reasoning steps before outputting "
    "a JSON object.";

struct AttributeRequest {
  std::string image_ref;
  std::string node_id;
  std::vector<std::string> keys;
  ViewSpec views;
  std::string prompt;

  nlohmann::json to_json() const;
};

/// Throws InputError when the node has no bbox or its label maps to no keys.
AttributeRequest build_attribute_request(const Node& node, const std::string& image_ref,
                                         int image_width, int image_height,
                                         const MetaClassSchema& schema);

struct ParsedAttributes {
  std::map<std::string, std::string> values;  // trimmed, lowercased
  std::vector<std::string> warnings;
};

/// Reads the JSON object the response ends with, keeping only `expected_keys`.
/// Throws ParseError when there is no JSON value or it is not an object.
ParsedAttributes parse_attribute_response(std::string_view text,
                                          const std::vector<std::string>& expected_keys);

}  // namespace xtc

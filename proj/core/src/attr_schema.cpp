#include "xtc/attr_schema.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "xtc/error.hpp"
#include "xtc/text.hpp"

namespace xtc {

MetaClassSchema::MetaClassSchema(std::vector<MetaClass> meta_classes)
    : meta_classes_(std::move(meta_classes)) {
  for (std::size_t i = 0; i < meta_classes_.size(); ++i) {
    const auto& mc = meta_classes_[i];
    if (mc.name.empty()) throw InvariantError("", "meta-class with empty name");
    if (mc.keys.empty()) throw InvariantError(mc.name, "meta-class '" + mc.name + "' has no attribute keys");
    for (const auto& label : mc.member_labels) {
      auto [it, inserted] = label_index_.emplace(label, i);
      if (!inserted) {
        throw InvariantError(label, "label '" + label + "' belongs to both '" +
                                        meta_classes_[it->second].name + "' and '" + mc.name + "'");
      }
    }
  }
}

const MetaClass* MetaClassSchema::meta_class_for(std::string_view label) const {
  auto it = label_index_.find(label);
  return it == label_index_.end() ? nullptr : &meta_classes_[it->second];
}

const std::vector<std::string>& MetaClassSchema::keys_for(std::string_view label) const {
  static const std::vector<std::string> kEmpty;
  const MetaClass* mc = meta_class_for(label);
  return mc ? mc->keys : kEmpty;
}

std::vector<std::string> keys_for(std::string_view label, const MetaClassSchema& schema) {
  const auto& keys = schema.keys_for(label);
  if (keys.empty()) spdlog::debug("attr-schema: label '{}' maps to no meta-class", label);
  return keys;
}

MetaClassSchema metaclass_schema_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("meta_classes") || !doc["meta_classes"].is_array()) {
    throw SchemaError("meta-class schema: expected {\"meta_classes\": [...]}");
  }
  std::vector<MetaClass> out;
  for (const auto& j : doc["meta_classes"]) {
    try {
      MetaClass mc;
      mc.name = j.at("name").get<std::string>();
      for (const auto& l : j.at("labels")) mc.member_labels.insert(l.get<std::string>());
      for (const auto& k : j.at("keys")) mc.keys.push_back(k.get<std::string>());
      out.push_back(std::move(mc));
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(std::string("meta-class schema: ") + e.what());
    }
  }
  return MetaClassSchema(std::move(out));
}

MetaClassSchema load_metaclass_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open meta-class schema '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  auto doc = nlohmann::json::parse(ss.str(), nullptr, false);
  if (doc.is_discarded()) throw SchemaError("meta-class schema '" + path + "' is not valid JSON");
  return metaclass_schema_from_json(doc);
}

nlohmann::ordered_json to_json(const MetaClassSchema& schema) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& mc : schema.meta_classes()) {
    nlohmann::ordered_json j;
    j["name"] = mc.name;
    j["labels"] = mc.member_labels;
    j["keys"] = mc.keys;
    arr.push_back(std::move(j));
  }
  nlohmann::ordered_json doc;
  doc["schema"] = "xtc-metaclasses/1";
  doc["meta_classes"] = std::move(arr);
  return doc;
}

// ---- views ---------------------------------------------------------------------

namespace {

nlohmann::json rect_json(const PixelRect& r) { return nlohmann::json::array({r.x, r.y, r.w, r.h}); }

PixelRect clamp_rect(int x1, int y1, int x2, int y2, int width, int height) {
  x1 = std::clamp(x1, 0, width);
  y1 = std::clamp(y1, 0, height);
  x2 = std::clamp(x2, 0, width);
  y2 = std::clamp(y2, 0, height);
  return {x1, y1, std::max(0, x2 - x1), std::max(0, y2 - y1)};
}

}  // namespace

nlohmann::json ViewSpec::to_json() const {
  return {{"spotlight", {{"target", rect_json(target)}, {"blur_radius", blur_radius}, {"overlay", rect_json(target)}}},
          {"detail_crop", {{"crop", rect_json(crop)}, {"background", {background, background, background}}}}};
}

ViewSpec make_view_spec(const BBox& bbox, int image_width, int image_height) {
  ViewSpec v;
  const int x1 = static_cast<int>(std::floor(bbox.x));
  const int y1 = static_cast<int>(std::floor(bbox.y));
  const int x2 = static_cast<int>(std::ceil(bbox.right()));
  const int y2 = static_cast<int>(std::ceil(bbox.bottom()));
  v.target = clamp_rect(x1, y1, x2, y2, image_width, image_height);
  const int margin = static_cast<int>(std::lround(kCropMarginFraction * std::max(bbox.w, bbox.h)));
  v.crop = clamp_rect(x1 - margin, y1 - margin, x2 + margin, y2 + margin, image_width, image_height);
  v.blur_radius = std::max(1, static_cast<int>(std::lround(kBlurRadiusFraction * std::max(image_width, image_height))));
  v.background = kNeutralGray;
  return v;
}

nlohmann::json AttributeRequest::to_json() const {
  return {{"image", image_ref}, {"node_id", node_id}, {"keys", keys}, {"views", views.to_json()}, {"prompt", prompt}};
}

AttributeRequest build_attribute_request(const Node& node, const std::string& image_ref,
                                         int image_width, int image_height,
                                         const MetaClassSchema& schema) {
  if (!node.bbox) throw InputError("attribute request: node '" + node.id + "' has no bbox");
  auto keys = keys_for(node.label, schema);
  if (keys.empty()) {
    throw InputError("attribute request: label '" + node.label + "' has no attribute keys");
  }
  AttributeRequest req;
  req.image_ref = image_ref;
  req.node_id = node.id;
  req.views = make_view_spec(*node.bbox, image_width, image_height);
  std::string prompt(kAttributePromptTemplate);
  prompt.replace(prompt.find("{key_set}"), 9, join(keys, ", "));
  req.prompt = std::move(prompt);
  req.keys = std::move(keys);
  return req;
}

ParsedAttributes parse_attribute_response(std::string_view text,
                                          const std::vector<std::string>& expected_keys) {
  auto doc = extract_trailing_json(text);
  if (!doc) throw ParseError("attribute response contains no trailing JSON object");
  if (!doc->is_object()) throw ParseError("attribute response JSON is not an object");

  ParsedAttributes out;
  for (const auto& [k, v] : doc->items()) {
    if (std::find(expected_keys.begin(), expected_keys.end(), k) == expected_keys.end()) {
      out.warnings.push_back("dropped unexpected attribute key '" + k + "'");
      continue;
    }
    if (v.is_null()) {
      out.warnings.push_back("attribute key '" + k + "' is null");
      continue;
    }
    std::string value = v.is_string() ? v.get<std::string>() : v.dump();
    value = to_lower(trim(value));
    if (value.empty()) {
      out.warnings.push_back("attribute key '" + k + "' is empty");
      continue;
    }
    out.values.emplace(k, std::move(value));
  }
  for (const auto& w : out.warnings) spdlog::warn("attr-schema: {}", w);
  return out;
}

}  // namespace xtc

#include "xtc/taxonomy.hpp"

#include <map>

namespace xtc {

std::string_view to_string(RelationCategory c) noexcept {
  switch (c) {
    case RelationCategory::spatial: return "Spatial";
    case RelationCategory::posture: return "Posture";
    case RelationCategory::locomotion: return "Locomotion";
    case RelationCategory::social: return "Social";
    case RelationCategory::other: return "Other";
  }
  return "Other";
}

RelationCategory relation_category(std::string_view predicate) {
  using enum RelationCategory;
  static const std::map<std::string, RelationCategory, std::less<>> table = {
      {"above", spatial},        {"over", spatial},          {"in", spatial},
      {"on", spatial},           {"next to", spatial},       {"beside", spatial},
      {"under", spatial},        {"behind", spatial},        {"in front of", spatial},
      {"attached to", spatial},  {"hanging from", spatial},  {"on back of", spatial},
      {"painted on", spatial},   {"parked on", spatial},     {"enclosing", spatial},
      {"standing on", posture},  {"sitting on", posture},    {"lying on", posture},
      {"leaning on", posture},   {"leaning against", posture},
      {"walking on", locomotion}, {"running on", locomotion}, {"riding", locomotion},
      {"flying over", locomotion}, {"moving towards", locomotion}, {"crossing", locomotion},
      {"jumping over", locomotion}, {"jumping from", locomotion}, {"going down", locomotion},
      {"falling off", locomotion}, {"driving on", locomotion}, {"climbing", locomotion},
      {"entering", locomotion},  {"exiting", locomotion},    {"chasing", locomotion},
      {"looking at", social},    {"holding", social},        {"talking to", social},
      {"playing with", social},  {"following", social},      {"guiding", social},
      {"kissing", social},       {"feeding", social},        {"carrying", social},
  };
  auto it = table.find(predicate);
  return it == table.end() ? other : it->second;
}

RelationCategory relation_category(const std::vector<std::string>& predicates) {
  if (predicates.empty()) return RelationCategory::other;
  const RelationCategory first = relation_category(predicates.front());
  for (const auto& p : predicates) {
    if (relation_category(p) != first) return RelationCategory::other;
  }
  return first;
}

std::string_view to_string(AttributeDimension d) noexcept {
  switch (d) {
    case AttributeDimension::color_material: return "Color & Material";
    case AttributeDimension::environment: return "Environment";
    case AttributeDimension::state_functionality: return "State & Functionality";
    case AttributeDimension::type_parts: return "Type & Parts";
    case AttributeDimension::text_symbols_counts: return "Text, Symbols & Counts";
    case AttributeDimension::pose_view_placement: return "Pose, View & Placement";
    case AttributeDimension::other: return "Other";
  }
  return "Other";
}

AttributeDimension attribute_dimension(std::string_view key) {
  using enum AttributeDimension;
  static const std::map<std::string, AttributeDimension, std::less<>> table = {
      {"primary color", color_material},     {"material type", color_material},
      {"surface material", color_material},  {"light color state", state_functionality},
      {"weather type", environment},         {"wave/cloud visible", environment},
      {"wet/dry state", environment},        {"screen on/off", state_functionality},
      {"door open/closed", state_functionality}, {"open/closed state", state_functionality},
      {"content visible", state_functionality},
      {"upper clothing type/color", type_parts}, {"lower clothing type/color", type_parts},
      {"held object type", type_parts},      {"headwear/eyewear", type_parts},
      {"topping type", type_parts},          {"container type", type_parts},
      {"pattern type", type_parts},          {"marking type", type_parts},
      {"text/number visible", text_symbols_counts}, {"brand/text visible", text_symbols_counts},
      {"text on sign", text_symbols_counts}, {"text visible", text_symbols_counts},
      {"window count", text_symbols_counts}, {"drawer count", text_symbols_counts},
      {"viewpoint angle", pose_view_placement}, {"body position", pose_view_placement},
      {"mounted position", pose_view_placement},
  };
  auto it = table.find(key);
  return it == table.end() ? other : it->second;
}

}  // namespace xtc

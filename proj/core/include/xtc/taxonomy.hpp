#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace xtc {

/// Four-part predicate taxonomy; `other` collects predicates outside it.
enum class RelationCategory { spatial, posture, locomotion, social, other };

std::string_view to_string(RelationCategory c) noexcept;
RelationCategory relation_category(std::string_view predicate);
/// `other` when the predicates of one edge span several categories.
RelationCategory relation_category(const std::vector<std::string>& predicates);

/// Six semantic dimensions used to aggregate attribute keys; `other` for unknown keys.
enum class AttributeDimension {
  color_material,
  environment,
  state_functionality,
  type_parts,
  text_symbols_counts,
  pose_view_placement,
  other,
};

std::string_view to_string(AttributeDimension d) noexcept;
AttributeDimension attribute_dimension(std::string_view key);

}  // namespace xtc

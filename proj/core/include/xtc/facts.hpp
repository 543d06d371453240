#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "xtc/scene_graph.hpp"

namespace xtc {

enum class FactKind { object, attribute, relation };

std::string_view to_string(FactKind k) noexcept;
FactKind fact_kind_from_string(std::string_view s);

/// One atomic assertion about a graph.
///
/// object:    key = "",             value = node label
/// attribute: key = attribute key,  value = attribute value
/// relation:  key = "p1|p2|...",    value = "p1 and p2 ...", object = target id
struct Fact {
  std::string fact_id;
  FactKind kind = FactKind::object;
  std::string subject;
  std::string key;
  std::string value;
  std::string object;

  bool operator==(const Fact&) const = default;
};

/// Content hash over (image, kind, subject, key, object). Predicate order inside a
/// relation key does not change the id.
std::string make_fact_id(std::string_view image_id, FactKind kind, std::string_view subject,
                         std::string_view key, std::string_view object);

/// Separator used for aggregated relation keys ("on|beside").
inline constexpr std::string_view kPredicateKeySeparator = "|";

std::string relation_key(const Edge& e);
std::string relation_value(const Edge& e);

/// Ordered by subject id, then kind (object, attribute, relation), then key and object.
std::vector<Fact> enumerate_facts(const SceneGraph& g);

}  // namespace xtc

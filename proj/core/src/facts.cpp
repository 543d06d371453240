#include "xtc/facts.hpp"

#include <algorithm>
#include <tuple>

#include "xtc/error.hpp"
#include "xtc/hash.hpp"

namespace xtc {

std::string_view to_string(FactKind k) noexcept {
  switch (k) {
    case FactKind::object: return "object";
    case FactKind::attribute: return "attribute";
    case FactKind::relation: return "relation";
  }
  return "object";
}

FactKind fact_kind_from_string(std::string_view s) {
  if (s == "object") return FactKind::object;
  if (s == "attribute") return FactKind::attribute;
  if (s == "relation") return FactKind::relation;
  throw SchemaError("unknown fact kind '" + std::string(s) + "'");
}

namespace {

std::vector<std::string> split_key(std::string_view key) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = key.find(kPredicateKeySeparator, start);
    parts.emplace_back(key.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + kPredicateKeySeparator.size();
  }
  return parts;
}

}  // namespace

std::string make_fact_id(std::string_view image_id, FactKind kind, std::string_view subject,
                         std::string_view key, std::string_view object) {
  std::string normalized_key(key);
  if (kind == FactKind::relation) {
    auto parts = split_key(key);
    std::sort(parts.begin(), parts.end());
    normalized_key.clear();
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (i) normalized_key += kPredicateKeySeparator;
      normalized_key += parts[i];
    }
  }
  std::string content;
  for (std::string_view part : {image_id, to_string(kind), subject, std::string_view(normalized_key), object}) {
    content += part;
    content.push_back('\x1f');
  }
  return sha256_hex(content).substr(0, 16);
}

std::string relation_key(const Edge& e) {
  std::string key;
  for (std::size_t i = 0; i < e.predicates.size(); ++i) {
    if (i) key += kPredicateKeySeparator;
    key += e.predicates[i].name;
  }
  return key;
}

std::string relation_value(const Edge& e) {
  std::string value;
  for (std::size_t i = 0; i < e.predicates.size(); ++i) {
    if (i) value += " and ";
    value += e.predicates[i].name;
  }
  return value;
}

std::vector<Fact> enumerate_facts(const SceneGraph& g) {
  std::vector<Fact> facts;
  facts.reserve(g.nodes().size() + g.attribute_count() + g.edges().size());
  const auto& img = g.image_id();
  for (const auto& n : g.nodes()) {
    facts.push_back({make_fact_id(img, FactKind::object, n.id, "", ""), FactKind::object, n.id, "",
                     n.label, ""});
    for (const auto& [k, v] : n.attributes) {
      facts.push_back({make_fact_id(img, FactKind::attribute, n.id, k, ""), FactKind::attribute,
                       n.id, k, v, ""});
    }
  }
  for (const auto& e : g.edges()) {
    const std::string key = relation_key(e);
    facts.push_back({make_fact_id(img, FactKind::relation, e.source, key, e.target),
                     FactKind::relation, e.source, key, relation_value(e), e.target});
  }
  std::stable_sort(facts.begin(), facts.end(), [](const Fact& a, const Fact& b) {
    return std::tie(a.subject, a.kind, a.key, a.object) < std::tie(b.subject, b.kind, b.key, b.object);
  });
  return facts;
}

}  // namespace xtc

#include "xtc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>

#include "xtc/error.hpp"
#include "xtc/judge.hpp"
#include "xtc/taxonomy.hpp"

namespace xtc {

namespace {

void check_pair(const FactScorePair& p) {
  auto unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
  if (!unit(p.g_norm) || !unit(p.u_norm)) throw InvariantError(p.fact_id, "normalized score outside [0,1]");
  if (!std::isfinite(p.weight) || p.weight < 0.0) throw InvariantError(p.fact_id, "negative fact weight");
}

double weighted(std::span<const FactScorePair> pairs, const std::function<double(const FactScorePair&)>& term,
                const char* what) {
  double num = 0.0, den = 0.0;
  for (const auto& p : pairs) {
    check_pair(p);
    num += p.weight * term(p);
    den += p.weight;
  }
  if (den <= 0.0) throw InputError(std::string(what) + ": total fact weight is zero");
  return num / den;
}

}  // namespace

double generation_score(std::span<const FactScorePair> pairs, bool matched_only) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& p : pairs) {
    check_pair(p);
    if (matched_only && !p.matched) continue;
    sum += p.g_norm;
    ++n;
  }
  if (n == 0) throw InputError("generation score: no facts selected");
  return sum / static_cast<double>(n);
}

double understanding_score(std::span<const FactScorePair> pairs) {
  if (pairs.empty()) throw InputError("understanding score: no facts selected");
  double sum = 0.0;
  for (const auto& p : pairs) {
    check_pair(p);
    sum += p.u_norm;
  }
  return sum / static_cast<double>(pairs.size());
}

double ccta(std::span<const FactScorePair> pairs) {
  return weighted(pairs, [](const FactScorePair& p) { return 1.0 - std::fabs(p.g_norm - p.u_norm); }, "ccta");
}

double aw_ccta(std::span<const FactScorePair> pairs) {
  return weighted(
      pairs,
      [](const FactScorePair& p) { return (1.0 - std::fabs(p.g_norm - p.u_norm)) * (p.g_norm + p.u_norm) / 2.0; },
      "aw-ccta");
}

std::optional<double> DimensionRow::imbalance() const {
  if (!g || !u) return std::nullopt;
  return *g - *u;
}

std::optional<double> FamilyRow::gap() const {
  if (!mean_g || !mean_u) return std::nullopt;
  return *mean_g - *mean_u;
}

namespace {

double norm(int raw) { return static_cast<double>(raw) / kJudgeScaleMax; }

FactScorePair to_pair(const FactRecord& r) {
  return {r.fact_id, r.kind, r.g_raw ? norm(*r.g_raw) : 0.0, r.u_raw ? norm(*r.u_raw) : 0.0, r.weight,
          r.matched};
}

using Pred = std::function<bool(const FactRecord&)>;

std::vector<FactScorePair> select(std::span<const FactRecord> records, const Pred& keep) {
  std::vector<FactScorePair> out;
  for (const auto& r : records) {
    if (keep(r)) out.push_back(to_pair(r));
  }
  return out;
}

std::optional<double> mean_g(std::span<const FactRecord> rs, const Pred& keep) {
  auto sel = select(rs, [&](const FactRecord& r) { return r.g_raw && keep(r); });
  if (sel.empty()) return std::nullopt;
  return generation_score(sel, false);
}

std::optional<double> mean_u(std::span<const FactRecord> rs, const Pred& keep) {
  auto sel = select(rs, [&](const FactRecord& r) { return r.u_raw && keep(r); });
  if (sel.empty()) return std::nullopt;
  return understanding_score(sel);
}

std::optional<double> agreement(std::span<const FactRecord> rs, const Pred& keep, bool accuracy_weighted) {
  auto sel = select(rs, [&](const FactRecord& r) { return r.g_raw && r.u_raw && r.weight > 0.0 && keep(r); });
  if (sel.empty()) return std::nullopt;
  return accuracy_weighted ? aw_ccta(sel) : ccta(sel);
}

std::vector<std::string> split_key(const std::string& key) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = key.find(kPredicateKeySeparator, start);
    out.push_back(key.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + kPredicateKeySeparator.size();
  }
  return out;
}

}  // namespace

MetricsReport build_report(std::span<const FactRecord> records, std::span<const MatchResult> matches,
                           const std::string& model_id, const std::string& family) {
  std::map<std::string, const MatchResult*> by_image;
  for (const auto& m : matches) {
    if (!by_image.emplace(m.gt_image_id, &m).second) {
      throw InputError("two match results for image '" + m.gt_image_id + "'");
    }
  }
  std::set<std::string> ids;
  for (const auto& r : records) {
    if (!ids.insert(r.fact_id).second) throw InputError("fact id '" + r.fact_id + "' appears twice");
    auto it = by_image.find(r.image_id);
    if (it == by_image.end()) {
      throw InputError("fact '" + r.fact_id + "' belongs to image '" + r.image_id + "' which has no match result");
    }
    bool matched = it->second->pred_for(r.subject).has_value();
    if (r.kind == FactKind::relation) matched = matched && it->second->pred_for(r.object).has_value();
    if (matched != r.matched) throw InputError("fact '" + r.fact_id + "' matched flag contradicts the match result");
    if (r.g_raw && !r.matched && *r.g_raw != 0) {
      throw InputError("unmatched fact '" + r.fact_id + "' carries a nonzero generation score");
    }
  }

  MetricsReport rep;
  rep.model_id = model_id;
  rep.family = family;
  rep.image_count = by_image.size();
  for (const auto& m : matches) {
    rep.gt_node_count += m.gt_node_count;
    rep.matched_node_count += m.node_pairs.size();
  }
  rep.matched_node_fraction =
      rep.gt_node_count == 0 ? 1.0 : static_cast<double>(rep.matched_node_count) / static_cast<double>(rep.gt_node_count);

  const Pred attr = [](const FactRecord& r) { return r.kind == FactKind::attribute; };
  const Pred rel = [](const FactRecord& r) { return r.kind == FactKind::relation; };
  const Pred obj = [](const FactRecord& r) { return r.kind == FactKind::object; };
  const Pred shared = [&](const FactRecord& r) { return attr(r) || rel(r); };
  auto and_matched = [](const Pred& p) { return Pred([p](const FactRecord& r) { return r.matched && p(r); }); };
  const Pred any = [](const FactRecord&) { return true; };

  rep.generation.overall = mean_g(records, shared);
  rep.generation.matched = mean_g(records, and_matched(shared));
  rep.generation.attr = mean_g(records, attr);
  rep.generation.rel = mean_g(records, rel);
  rep.generation.matched_attr = mean_g(records, and_matched(attr));
  rep.generation.matched_rel = mean_g(records, and_matched(rel));

  rep.understanding.overall = mean_u(records, any);
  rep.understanding.object_retrieval = mean_u(records, obj);
  rep.understanding.attr = mean_u(records, attr);
  rep.understanding.rel = mean_u(records, rel);
  rep.understanding.matched_attr = mean_u(records, and_matched(attr));
  rep.understanding.matched_rel = mean_u(records, and_matched(rel));

  rep.ccta = {agreement(records, shared, false), agreement(records, attr, false), agreement(records, rel, false)};
  rep.aw_ccta = {agreement(records, shared, true), agreement(records, attr, true), agreement(records, rel, true)};
  for (const auto& r : records) {
    if (shared(r) && r.g_raw && r.u_raw && r.weight > 0.0) ++rep.shared_fact_count;
  }

  std::map<AttributeDimension, std::vector<FactRecord>> attr_dims;
  std::map<RelationCategory, std::vector<FactRecord>> rel_dims;
  for (const auto& r : records) {
    if (r.kind == FactKind::attribute) attr_dims[attribute_dimension(r.key)].push_back(r);
    if (r.kind == FactKind::relation) rel_dims[relation_category(split_key(r.key))].push_back(r);
  }
  auto row = [&](std::string group, std::string_view name, const std::vector<FactRecord>& rs) {
    DimensionRow d;
    d.group = std::move(group);
    d.dimension = std::string(name);
    d.facts = rs.size();
    d.g = mean_g(rs, any);
    d.u = mean_u(rs, any);
    rep.dimensions.push_back(std::move(d));
  };
  for (const auto& [dim, rs] : attr_dims) row("attribute", to_string(dim), rs);
  for (const auto& [cat, rs] : rel_dims) row("relation", to_string(cat), rs);
  return rep;
}

std::vector<FamilyRow> aggregate_families(std::span<const MetricsReport> reports) {
  std::map<std::string, std::vector<const MetricsReport*>> groups;
  for (const auto& r : reports) groups[r.family].push_back(&r);
  std::vector<FamilyRow> out;
  for (const auto& [family, rs] : groups) {
    auto mean = [&](auto field) -> std::optional<double> {
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto* r : rs) {
        if (auto v = field(*r)) {
          sum += *v;
          ++n;
        }
      }
      if (n == 0) return std::nullopt;
      return sum / static_cast<double>(n);
    };
    FamilyRow row;
    row.family = family;
    row.models = rs.size();
    row.mean_g = mean([](const MetricsReport& r) { return r.generation.overall; });
    row.mean_u = mean([](const MetricsReport& r) { return r.understanding.overall; });
    row.mean_ccta = mean([](const MetricsReport& r) { return r.ccta.overall; });
    row.mean_aw_ccta = mean([](const MetricsReport& r) { return r.aw_ccta.overall; });
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace xtc

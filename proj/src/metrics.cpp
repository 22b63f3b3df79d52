#include "tpsl/metrics.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include <fmt/format.h>
#include <json.hpp>

#include "tpsl/rules.hpp"

namespace tpsl {
namespace {

struct Fact {
  std::string source;
  std::string target;
  Label label;
};

class ClosureBuilder {
 public:
  explicit ClosureBuilder(RelationSet& out) : out_(out) {}

  void derive(const std::string& a, const std::string& b, Label label) {
    if (a == b) {
      if (label != Label::Overlap) contradictions_.emplace(a, b);
      return;
    }
    if (auto existing = out_.find(a, b)) {
      if (*existing != label) contradictions_.emplace(a, b);
      return;
    }
    out_.insert(a, b, label);
    out_edges_[a].push_back({b, label});
    in_edges_[b].push_back({a, label});
    queue_.push_back(Fact{a, b, label});
  }

  void run() {
    while (!queue_.empty()) {
      const Fact f = queue_.front();
      queue_.pop_front();
      if (auto inverse = flip(f.label)) derive(f.target, f.source, *inverse);
      // f as the first body atom: f(x,y) & g(y,z).
      for (std::size_t i = 0; i < out_edges_[f.target].size(); ++i) {
        const auto [z, l2] = out_edges_[f.target][i];
        if (auto head = transitive_head(rules_, f.label, l2)) derive(f.source, z, *head);
      }
      // f as the second body atom: g(w,x) & f(x,y).
      for (std::size_t i = 0; i < in_edges_[f.source].size(); ++i) {
        const auto [w, l0] = in_edges_[f.source][i];
        if (auto head = transitive_head(rules_, l0, f.label)) derive(w, f.target, *head);
      }
    }
  }

  std::vector<OrderedPair> contradictions() const {
    return {contradictions_.begin(), contradictions_.end()};
  }

 private:
  struct Edge {
    std::string node;
    Label label;
  };
  RelationSet& out_;
  std::vector<PslRule> rules_ = default_rule_set(Scheme::Clinical3);
  std::unordered_map<std::string, std::vector<Edge>> out_edges_;
  std::unordered_map<std::string, std::vector<Edge>> in_edges_;
  std::deque<Fact> queue_;
  std::set<OrderedPair> contradictions_;
};

const RelationSet* find_document(std::span<const RelationSet> sets,
                                 const std::string& id) {
  for (const RelationSet& s : sets) {
    if (s.document_id() == id) return &s;
  }
  return nullptr;
}

// Document ids in first-seen order across both sides.
std::vector<std::string> document_ids(std::span<const RelationSet> a,
                                      std::span<const RelationSet> b) {
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (auto side : {a, b}) {
    for (const RelationSet& s : side) {
      if (seen.insert(s.document_id()).second) ids.push_back(s.document_id());
    }
  }
  return ids;
}

void finalize(EvalReport& report) {
  report.overall = report.counts.scores();
  for (const auto& [label, counts] : report.per_label_counts) {
    report.per_label[label] = counts.scores();
  }
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

RelationSet RelationSet::from_document(const Document& doc) {
  RelationSet set(doc.id);
  for (const Relation& r : doc.relations) {
    if (!set.insert(r.source, r.target, r.label)) {
      throw std::invalid_argument(fmt::format(
          "document {}: pair ({}, {}) is annotated with two labels", doc.id,
          r.source, r.target));
    }
  }
  return set;
}

bool RelationSet::insert(const std::string& source, const std::string& target,
                         Label label) {
  auto [it, inserted] = items_.emplace(OrderedPair{source, target}, label);
  return inserted || it->second == label;
}

std::optional<Label> RelationSet::find(const std::string& source,
                                       const std::string& target) const {
  auto it = items_.find(OrderedPair{source, target});
  if (it == items_.end()) return std::nullopt;
  return it->second;
}

bool RelationSet::contains(const std::string& source, const std::string& target,
                           Label label) const {
  auto found = find(source, target);
  return found && *found == label;
}

ClosureResult temporal_closure(const RelationSet& relations) {
  ClosureResult result{RelationSet(relations.document_id()), {}};
  ClosureBuilder builder(result.closure);
  for (const auto& [pair, label] : relations.items()) {
    builder.derive(pair.first, pair.second, label);
  }
  builder.run();
  result.contradictions = builder.contradictions();
  return result;
}

double f1_score(double precision, double recall) {
  // The harmonic mean of equal values is that value; the general formula
  // can round away from it.
  if (precision == recall) return precision;
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall)
                                  : 0.0;
}

Prf EvalCounts::scores() const {
  Prf s;
  s.precision = ratio(predicted_verified, predicted_total);
  s.recall = ratio(gold_verified, gold_total);
  s.f1 = f1_score(s.precision, s.recall);
  return s;
}

EvalCounts& EvalCounts::operator+=(const EvalCounts& other) {
  predicted_verified += other.predicted_verified;
  predicted_total += other.predicted_total;
  gold_verified += other.gold_verified;
  gold_total += other.gold_total;
  return *this;
}

EvalReport tempeval_scores(std::span<const RelationSet> predictions,
                           std::span<const RelationSet> gold) {
  EvalReport report;
  report.metric = "tempeval";
  const RelationSet empty;
  for (const std::string& id : document_ids(predictions, gold)) {
    const RelationSet* pred = find_document(predictions, id);
    const RelationSet* ref = find_document(gold, id);
    if (pred == nullptr) pred = &empty;
    if (ref == nullptr) ref = &empty;

    const ClosureResult gold_closure = temporal_closure(*ref);
    const ClosureResult pred_closure = temporal_closure(*pred);

    DocumentScore doc;
    doc.document_id = id;
    doc.gold_contradictions = gold_closure.contradictions;
    doc.prediction_contradictions = pred_closure.contradictions;
    for (const auto& [pair, label] : pred->items()) {
      const bool ok = gold_closure.closure.contains(pair.first, pair.second, label);
      ++doc.counts.predicted_total;
      ++report.per_label_counts[label].predicted_total;
      if (ok) {
        ++doc.counts.predicted_verified;
        ++report.per_label_counts[label].predicted_verified;
      }
    }
    for (const auto& [pair, label] : ref->items()) {
      const bool ok = pred_closure.closure.contains(pair.first, pair.second, label);
      ++doc.counts.gold_total;
      ++report.per_label_counts[label].gold_total;
      if (ok) {
        ++doc.counts.gold_verified;
        ++report.per_label_counts[label].gold_verified;
      }
    }
    doc.scores = doc.counts.scores();
    report.counts += doc.counts;
    report.documents.push_back(std::move(doc));
  }
  finalize(report);
  return report;
}

EvalReport micro_f1(std::span<const RelationSet> predictions,
                    std::span<const RelationSet> gold, const PairFilter& filter) {
  EvalReport report;
  report.metric = "micro";
  const RelationSet empty;
  for (const std::string& id : document_ids(predictions, gold)) {
    const RelationSet* pred = find_document(predictions, id);
    const RelationSet* ref = find_document(gold, id);
    if (pred == nullptr) pred = &empty;
    if (ref == nullptr) ref = &empty;
    auto keep = [&](const OrderedPair& p) {
      return !filter || filter(id, p.first, p.second);
    };

    DocumentScore doc;
    doc.document_id = id;
    for (const auto& [pair, label] : ref->items()) {
      if (!keep(pair)) continue;
      auto predicted = pred->find(pair.first, pair.second);
      if (!predicted) {
        throw std::invalid_argument(fmt::format(
            "document {}: gold pair ({}, {}) has no prediction", id, pair.first,
            pair.second));
      }
      const bool ok = *predicted == label;
      ++doc.counts.gold_total;
      ++doc.counts.predicted_total;
      ++report.per_label_counts[label].gold_total;
      ++report.per_label_counts[*predicted].predicted_total;
      if (ok) {
        ++doc.counts.gold_verified;
        ++doc.counts.predicted_verified;
        ++report.per_label_counts[label].gold_verified;
        ++report.per_label_counts[label].predicted_verified;
      }
    }
    for (const auto& [pair, label] : pred->items()) {
      if (keep(pair) && !ref->find(pair.first, pair.second)) {
        throw std::invalid_argument(fmt::format(
            "document {}: predicted pair ({}, {}) is not a gold pair", id,
            pair.first, pair.second));
      }
    }
    doc.scores = doc.counts.scores();
    report.counts += doc.counts;
    report.documents.push_back(std::move(doc));
  }
  finalize(report);
  return report;
}

PairFilter event_event_filter(std::span<const Document> documents) {
  // Copy the kinds so the filter outlives the documents.
  std::map<std::pair<std::string, std::string>, EntityKind> kinds;
  for (const Document& d : documents) {
    for (const Entity& e : d.entities) kinds[{d.id, e.id}] = e.kind;
  }
  return [kinds = std::move(kinds)](const std::string& doc, const std::string& s,
                                    const std::string& t) {
    auto a = kinds.find({doc, s});
    auto b = kinds.find({doc, t});
    return a != kinds.end() && b != kinds.end() && a->second == EntityKind::Event &&
           b->second == EntityKind::Event;
  };
}

std::string report_to_json(const EvalReport& report) {
  using nlohmann::ordered_json;
  auto prf = [](const Prf& s) {
    return ordered_json{{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
  };
  auto counts = [](const EvalCounts& c) {
    return ordered_json{{"predicted_verified", c.predicted_verified},
                        {"predicted_total", c.predicted_total},
                        {"gold_verified", c.gold_verified},
                        {"gold_total", c.gold_total}};
  };
  auto pairs = [](const std::vector<OrderedPair>& ps) {
    ordered_json arr = ordered_json::array();
    for (const auto& p : ps) arr.push_back({p.first, p.second});
    return arr;
  };

  ordered_json j;
  j["metric"] = report.metric;
  j["overall"] = prf(report.overall);
  j["overall"]["counts"] = counts(report.counts);
  ordered_json labels = ordered_json::object();
  for (const auto& [label, s] : report.per_label) {
    auto entry = prf(s);
    entry["counts"] = counts(report.per_label_counts.at(label));
    labels[std::string(to_string(label))] = entry;
  }
  j["per_label"] = labels;
  ordered_json docs = ordered_json::array();
  for (const DocumentScore& d : report.documents) {
    ordered_json entry = {{"document", d.document_id}};
    entry.update(prf(d.scores));
    entry["counts"] = counts(d.counts);
    if (!d.gold_contradictions.empty()) {
      entry["gold_contradictions"] = pairs(d.gold_contradictions);
    }
    if (!d.prediction_contradictions.empty()) {
      entry["prediction_contradictions"] = pairs(d.prediction_contradictions);
    }
    docs.push_back(entry);
  }
  j["per_document"] = docs;
  return j.dump(2);
}

std::string report_to_table(const EvalReport& report, const std::string& name) {
  const std::string rule = "+----------------+----------+----------+----------+\n";
  std::string out = rule;
  out += fmt::format("| {:<14} | {:>8} | {:>8} | {:>8} |\n", "Model", "P", "R", "F1");
  out += rule;
  auto row = [&](const std::string& label, const Prf& s) {
    out += fmt::format("| {:<14} | {:>8.2f} | {:>8.2f} | {:>8.2f} |\n", label,
                       100.0 * s.precision, 100.0 * s.recall, 100.0 * s.f1);
  };
  row(name, report.overall);
  if (!report.per_label.empty()) {
    out += rule;
    for (const auto& [label, s] : report.per_label) row(std::string(to_string(label)), s);
  }
  out += rule;
  return out;
}

}  // namespace tpsl

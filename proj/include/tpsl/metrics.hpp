#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tpsl/labels.hpp"
#include "tpsl/types.hpp"

namespace tpsl {

using OrderedPair = std::pair<std::string, std::string>;

// Relations of one document keyed by directed pair. Triples are kept exactly
// as given; Before(a,b) and After(b,a) are distinct entries.
class RelationSet {
 public:
  RelationSet() = default;
  explicit RelationSet(std::string document_id) : document_id_(std::move(document_id)) {}

  // Builds from a document's relation lines. Throws std::invalid_argument if
  // one pair carries two different labels.
  static RelationSet from_document(const Document& doc);

  const std::string& document_id() const { return document_id_; }

  // False (and no change) if the pair already carries a different label.
  bool insert(const std::string& source, const std::string& target, Label label);

  std::optional<Label> find(const std::string& source, const std::string& target) const;
  bool contains(const std::string& source, const std::string& target, Label label) const;

  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const std::map<OrderedPair, Label>& items() const { return items_; }

  friend bool operator==(const RelationSet&, const RelationSet&) = default;

 private:
  std::string document_id_;
  std::map<OrderedPair, Label> items_;
};

struct ClosureResult {
  RelationSet closure;
  // Pairs for which two distinct labels were derivable. Sorted, unique.
  std::vector<OrderedPair> contradictions;

  bool consistent() const { return contradictions.empty(); }
};

// Least fixed point of the clinical transitivity and symmetry rules over
// distinct entity pairs. A derivation that disagrees with an existing label
// is reported in `contradictions` and not propagated further.
ClosureResult temporal_closure(const RelationSet& relations);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// 2PR/(P+R), or 0 when P+R = 0.
double f1_score(double precision, double recall);

struct EvalCounts {
  std::size_t predicted_verified = 0;
  std::size_t predicted_total = 0;
  std::size_t gold_verified = 0;
  std::size_t gold_total = 0;

  Prf scores() const;
  EvalCounts& operator+=(const EvalCounts& other);
};

struct DocumentScore {
  std::string document_id;
  EvalCounts counts;
  Prf scores;
  std::vector<OrderedPair> gold_contradictions;
  std::vector<OrderedPair> prediction_contradictions;
};

struct EvalReport {
  std::string metric;  // "tempeval" or "micro"
  Prf overall;
  EvalCounts counts;
  std::map<Label, Prf> per_label;
  std::map<Label, EvalCounts> per_label_counts;
  std::vector<DocumentScore> documents;
};

// Closure-based scoring, micro-aggregated over documents: a prediction counts
// for precision when it is in the closure of the gold relations, a gold
// relation counts for recall when it is in the closure of the predictions.
// Documents are matched by id; a document missing on one side contributes
// only to the other side's totals.
EvalReport tempeval_scores(std::span<const RelationSet> predictions,
                           std::span<const RelationSet> gold);

// Selects which pairs a micro score covers: (document id, source, target).
using PairFilter =
    std::function<bool(const std::string&, const std::string&, const std::string&)>;

// Standard micro-averaged multi-class scores over the pairs accepted by
// `filter` (all pairs when empty). Predictions must cover exactly the gold
// pairs, otherwise std::invalid_argument; P = R = F1 then.
EvalReport micro_f1(std::span<const RelationSet> predictions,
                    std::span<const RelationSet> gold,
                    const PairFilter& filter = {});

// Filter keeping event-event pairs of the given documents.
PairFilter event_event_filter(std::span<const Document> documents);

// Nested JSON: overall, per-label and per-document sections.
std::string report_to_json(const EvalReport& report);

// Plain-text P/R/F1 table (percentages), one overall row followed by
// per-label rows.
std::string report_to_table(const EvalReport& report, const std::string& name);

}  // namespace tpsl

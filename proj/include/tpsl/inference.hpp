#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tpsl/metrics.hpp"
#include "tpsl/timegraph.hpp"
#include "tpsl/types.hpp"

namespace tpsl {

struct RankingStrategy {
  enum class Kind : std::uint8_t { Random, Confidence, ConfidenceTimeAnchor };

  Kind kind = Kind::ConfidenceTimeAnchor;
  std::uint64_t seed = 0;  // Random only

  static RankingStrategy random(std::uint64_t seed) { return {Kind::Random, seed}; }
  static RankingStrategy confidence() { return {Kind::Confidence, 0}; }
  static RankingStrategy time_anchor() { return {Kind::ConfidenceTimeAnchor, 0}; }
};

// "random", "confidence", "confidence-time-anchor".
std::optional<RankingStrategy> parse_strategy(std::string_view name,
                                              std::uint64_t seed);
std::string_view to_string(RankingStrategy::Kind kind);

// Processing order as indices into `predictions`.
//   random:     seeded uniform shuffle
//   confidence: stable sort by confidence, descending
//   confidence_time_anchor: T-T predictions first (sorted), then the E-E and
//               E-T predictions (sorted); ties keep input order
std::vector<std::size_t> rank_order(std::span<const Prediction> predictions,
                                    const RankingStrategy& strategy);

std::vector<Prediction> rank(std::span<const Prediction> predictions,
                             const RankingStrategy& strategy);

struct DropRecord {
  Prediction prediction;
  TemporalAnswer graph_answer;  // what the graph already implied
};

struct InferenceOutcome {
  std::vector<Prediction> accepted;  // in insertion order
  std::vector<Prediction> dropped;
  std::vector<DropRecord> drop_log;
  TimeGraph graph;
};

// Greedy check-and-add: predictions are offered to a time graph in ranked
// order and dropped when they conflict with it. Requires a single document
// and the clinical scheme (std::invalid_argument otherwise).
InferenceOutcome global_infer(std::span<const Prediction> predictions,
                              const RankingStrategy& strategy);

// Final labels for every input pair: the graph's answer when it is definite,
// otherwise the prediction's own argmax.
RelationSet resolve_labels(const InferenceOutcome& outcome,
                           std::span<const Prediction> predictions);

// Tab-separated drop log: document, source, target, label, confidence,
// graph answer.
void write_drop_log(std::ostream& out, std::span<const DropRecord> drops);

// Runs global inference on each document's prediction block. Documents are
// independent and processed in parallel; results keep document order.
std::vector<InferenceOutcome> infer_documents(std::span<const Document> documents,
                                              const RankingStrategy& strategy);

}  // namespace tpsl

#include "tpsl/inference.hpp"

#include <algorithm>
#include <exception>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

namespace tpsl {
namespace {

void sort_by_confidence(std::vector<std::size_t>& order,
                        std::span<const Prediction> predictions) {
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return predictions[a].confidence > predictions[b].confidence;
  });
}

std::optional<Label> as_label(TemporalAnswer answer) {
  switch (answer) {
    case TemporalAnswer::Before: return Label::Before;
    case TemporalAnswer::After: return Label::After;
    case TemporalAnswer::Overlap: return Label::Overlap;
    case TemporalAnswer::Unknown: return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

std::optional<RankingStrategy> parse_strategy(std::string_view name,
                                              std::uint64_t seed) {
  if (name == "random") return RankingStrategy::random(seed);
  if (name == "confidence") return RankingStrategy::confidence();
  if (name == "confidence-time-anchor" || name == "time-anchor") {
    return RankingStrategy::time_anchor();
  }
  return std::nullopt;
}

std::string_view to_string(RankingStrategy::Kind kind) {
  switch (kind) {
    case RankingStrategy::Kind::Random: return "random";
    case RankingStrategy::Kind::Confidence: return "confidence";
    case RankingStrategy::Kind::ConfidenceTimeAnchor: return "confidence-time-anchor";
  }
  return "?";
}

std::vector<std::size_t> rank_order(std::span<const Prediction> predictions,
                                    const RankingStrategy& strategy) {
  std::vector<std::size_t> order(predictions.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  switch (strategy.kind) {
    case RankingStrategy::Kind::Random: {
      std::mt19937_64 rng(strategy.seed);
      std::shuffle(order.begin(), order.end(), rng);
      break;
    }
    case RankingStrategy::Kind::Confidence:
      sort_by_confidence(order, predictions);
      break;
    case RankingStrategy::Kind::ConfidenceTimeAnchor: {
      std::vector<std::size_t> anchors, rest;
      for (std::size_t i : order) {
        (predictions[i].pair.kind() == PairKind::TimeTime ? anchors : rest).push_back(i);
      }
      sort_by_confidence(anchors, predictions);
      sort_by_confidence(rest, predictions);
      order = std::move(anchors);
      order.insert(order.end(), rest.begin(), rest.end());
      break;
    }
  }
  return order;
}

std::vector<Prediction> rank(std::span<const Prediction> predictions,
                             const RankingStrategy& strategy) {
  std::vector<Prediction> out;
  out.reserve(predictions.size());
  for (std::size_t i : rank_order(predictions, strategy)) out.push_back(predictions[i]);
  return out;
}

InferenceOutcome global_infer(std::span<const Prediction> predictions,
                              const RankingStrategy& strategy) {
  InferenceOutcome outcome;
  if (predictions.empty()) return outcome;
  const std::string& doc = predictions.front().document_id;
  for (const Prediction& p : predictions) {
    if (p.document_id != doc) {
      throw std::invalid_argument("global inference got predictions from documents " +
                                  doc + " and " + p.document_id);
    }
    if (p.scheme != Scheme::Clinical3) {
      throw std::invalid_argument("global inference supports the clinical3 scheme only");
    }
    outcome.graph.add_node(p.pair.source);
    outcome.graph.add_node(p.pair.target);
  }

  for (std::size_t i : rank_order(predictions, strategy)) {
    const Prediction& p = predictions[i];
    const TemporalAnswer before = outcome.graph.query(p.pair.source, p.pair.target);
    if (outcome.graph.add(p.pair.source, p.pair.target, p.predicted) ==
        AddResult::Accepted) {
      outcome.accepted.push_back(p);
    } else {
      outcome.dropped.push_back(p);
      outcome.drop_log.push_back(DropRecord{p, before});
    }
  }
  return outcome;
}

RelationSet resolve_labels(const InferenceOutcome& outcome,
                           std::span<const Prediction> predictions) {
  RelationSet out(predictions.empty() ? std::string() : predictions.front().document_id);
  for (const Prediction& p : predictions) {
    Label label = p.predicted;
    if (outcome.graph.contains(p.pair.source) && outcome.graph.contains(p.pair.target)) {
      if (auto derived = as_label(outcome.graph.query(p.pair.source, p.pair.target))) {
        label = *derived;
      }
    }
    out.insert(p.pair.source, p.pair.target, label);
  }
  return out;
}

void write_drop_log(std::ostream& out, std::span<const DropRecord> drops) {
  for (const DropRecord& d : drops) {
    out << fmt::format("{}\t{}\t{}\t{}\t{:.17g}\t{}\n", d.prediction.document_id,
                       d.prediction.pair.source, d.prediction.pair.target,
                       to_string(d.prediction.predicted), d.prediction.confidence,
                       to_string(d.graph_answer));
  }
}

std::vector<InferenceOutcome> infer_documents(std::span<const Document> documents,
                                              const RankingStrategy& strategy) {
  std::vector<InferenceOutcome> out(documents.size());
  std::vector<std::exception_ptr> errors(documents.size());
  const auto n = static_cast<std::ptrdiff_t>(documents.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = global_infer(documents[i].predictions, strategy);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace tpsl

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tpsl/metrics.hpp"
#include "tpsl/model.hpp"
#include "tpsl/rules.hpp"
#include "tpsl/types.hpp"

namespace tpsl {

// Symmetry augmentation, triplet packing and featurization of gold
// documents, ready for train().
std::vector<FeaturedTriplet> prepare_training_set(std::span<const Document> documents,
                                                  std::span<const PslRule> rules,
                                                  std::uint64_t feature_seed);

// Copies of `documents` whose prediction blocks hold the model's output for
// every annotated pair.
std::vector<Document> predict_documents(const ClassifierParams& params,
                                        std::span<const Document> documents,
                                        std::uint64_t feature_seed);

struct HeldoutEval {
  double micro_f1 = 0.0;       // event-event pairs, argmax labels
  double mean_distance = 0.0;  // over grounded triplets, predicted gate
  std::size_t grounded_triplets = 0;
};

HeldoutEval evaluate_classifier(const ClassifierParams& params,
                                std::span<const Document> heldout,
                                std::span<const PslRule> rules,
                                std::uint64_t feature_seed);

// Relation set per document built from the prediction argmaxes.
std::vector<RelationSet> argmax_relations(std::span<const Document> documents);

}  // namespace tpsl

#include "tpsl/pipeline.hpp"

namespace tpsl {

std::vector<FeaturedTriplet> prepare_training_set(std::span<const Document> documents,
                                                  std::span<const PslRule> rules,
                                                  std::uint64_t feature_seed) {
  const std::vector<Document> augmented = augment_symmetry(documents);
  const std::vector<TripletInstance> instances = pack_triplets(augmented, rules);
  return featurize_triplets(instances, augmented, feature_seed);
}

std::vector<Document> predict_documents(const ClassifierParams& params,
                                        std::span<const Document> documents,
                                        std::uint64_t feature_seed) {
  std::vector<Document> out(documents.begin(), documents.end());
  for (Document& doc : out) {
    doc.predictions.clear();
    for (const Relation& r : doc.relations) {
      doc.predictions.push_back(
          predict(params, doc, doc.make_pair(r.source, r.target), feature_seed));
    }
  }
  return out;
}

std::vector<RelationSet> argmax_relations(std::span<const Document> documents) {
  std::vector<RelationSet> out;
  out.reserve(documents.size());
  for (const Document& doc : documents) {
    RelationSet set(doc.id);
    for (const Prediction& p : doc.predictions) {
      set.insert(p.pair.source, p.pair.target, p.predicted);
    }
    out.push_back(std::move(set));
  }
  return out;
}

HeldoutEval evaluate_classifier(const ClassifierParams& params,
                                std::span<const Document> heldout,
                                std::span<const PslRule> rules,
                                std::uint64_t feature_seed) {
  HeldoutEval eval;

  const std::vector<Document> predicted = predict_documents(params, heldout, feature_seed);
  std::vector<RelationSet> gold;
  for (const Document& doc : heldout) gold.push_back(RelationSet::from_document(doc));
  const std::vector<RelationSet> preds = argmax_relations(predicted);
  eval.micro_f1 = micro_f1(preds, gold, event_event_filter(heldout)).overall.f1;

  const std::vector<FeaturedTriplet> triplets =
      prepare_training_set(heldout, rules, feature_seed);
  double total = 0.0;
  for (const FeaturedTriplet& t : triplets) {
    if (!t.instance.grounded || !t.instance.is_chain()) continue;
    std::array<std::vector<double>, 3> probs;
    LabelTriple labels{};
    for (std::size_t i = 0; i < 3; ++i) {
      probs[i] = predict_proba(params, t.features[i]);
      labels[i] = label_at(params.scheme, argmax(probs[i]));
    }
    total += ground_and_distance(params.scheme, {probs[0], probs[1], probs[2]}, labels,
                                 rules)
                 .distance;
    ++eval.grounded_triplets;
  }
  if (eval.grounded_triplets > 0) {
    eval.mean_distance = total / static_cast<double>(eval.grounded_triplets);
  }
  return eval;
}

}  // namespace tpsl

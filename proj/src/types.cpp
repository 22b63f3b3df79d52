#include "tpsl/types.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace tpsl {

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

Prediction Prediction::from_probs(std::string document_id, EntityPair pair,
                                  Scheme scheme, std::vector<double> probs) {
  if (probs.size() != label_count(scheme)) {
    throw std::invalid_argument(
        "probability vector has " + std::to_string(probs.size()) +
        " entries, scheme " + std::string(to_string(scheme)) + " needs " +
        std::to_string(label_count(scheme)));
  }
  const double sum = std::accumulate(probs.begin(), probs.end(), 0.0);
  if (!std::isfinite(sum) || std::abs(sum - 1.0) > 1e-6) {
    throw std::invalid_argument("probabilities for " + pair.source + " -> " +
                                pair.target + " do not sum to 1");
  }
  Prediction p;
  p.document_id = std::move(document_id);
  p.pair = std::move(pair);
  p.scheme = scheme;
  const std::size_t best = argmax(probs);
  p.predicted = label_at(scheme, best);
  p.confidence = probs[best];
  p.probs = std::move(probs);
  return p;
}

const Entity* Document::find_entity(std::string_view entity_id) const {
  for (const Entity& e : entities) {
    if (e.id == entity_id) return &e;
  }
  return nullptr;
}

EntityPair Document::make_pair(std::string_view source,
                               std::string_view target) const {
  const Entity* s = find_entity(source);
  const Entity* t = find_entity(target);
  if (s == nullptr || t == nullptr) {
    throw std::invalid_argument("document " + id +
                                " references unknown entity " +
                                std::string(s == nullptr ? source : target));
  }
  return EntityPair{s->id, t->id, s->kind, t->kind};
}

void Document::validate() const {
  std::unordered_set<std::string> ids;
  for (const Entity& e : entities) {
    if (!ids.insert(e.id).second) {
      throw std::invalid_argument("document " + id + " has duplicate entity " +
                                  e.id);
    }
  }
  auto check = [&](const std::string& entity) {
    if (!ids.count(entity)) {
      throw std::invalid_argument("document " + id +
                                  " references unknown entity " + entity);
    }
  };
  for (const Relation& r : relations) {
    check(r.source);
    check(r.target);
  }
  for (const Prediction& p : predictions) {
    check(p.pair.source);
    check(p.pair.target);
  }
}

}  // namespace tpsl

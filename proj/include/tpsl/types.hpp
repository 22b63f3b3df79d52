#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tpsl/labels.hpp"

namespace tpsl {

struct Entity {
  std::string id;
  EntityKind kind = EntityKind::Event;
  int position = 0;                    // token index in the document
  std::optional<double> timestamp;     // time expressions only

  friend bool operator==(const Entity&, const Entity&) = default;
};

// A directed relation label(source, target).
struct Relation {
  std::string source;
  std::string target;
  Label label = Label::Before;

  friend bool operator==(const Relation&, const Relation&) = default;
};

struct EntityPair {
  std::string source;
  std::string target;
  EntityKind source_kind = EntityKind::Event;
  EntityKind target_kind = EntityKind::Event;

  PairKind kind() const { return pair_kind(source_kind, target_kind); }

  friend bool operator==(const EntityPair&, const EntityPair&) = default;
};

// Classifier output for one ordered pair. `predicted` is the argmax of
// `probs` (first index wins ties) and `confidence` its probability.
struct Prediction {
  std::string document_id;
  EntityPair pair;
  Scheme scheme = Scheme::Clinical3;
  std::vector<double> probs;
  Label predicted = Label::Before;
  double confidence = 0.0;

  // Validates the vector length and normalization (1e-6) and fills in the
  // argmax fields.
  static Prediction from_probs(std::string document_id, EntityPair pair,
                               Scheme scheme, std::vector<double> probs);

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

// Index of the largest entry; the first one wins ties.
std::size_t argmax(std::span<const double> values);

struct Document {
  std::string id;
  std::vector<Entity> entities;
  std::vector<Relation> relations;      // gold, or final labels after inference
  std::vector<Prediction> predictions;  // optional probability blocks

  const Entity* find_entity(std::string_view entity_id) const;

  // Entity pair with kinds resolved; throws std::invalid_argument naming the
  // missing entity.
  EntityPair make_pair(std::string_view source, std::string_view target) const;

  // Unique entity ids; every relation and prediction references existing
  // entities. Throws std::invalid_argument on the first violation.
  void validate() const;

  friend bool operator==(const Document&, const Document&) = default;
};

struct Corpus {
  Scheme scheme = Scheme::Clinical3;
  std::vector<Document> documents;

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

}  // namespace tpsl

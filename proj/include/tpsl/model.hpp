#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tpsl/labels.hpp"
#include "tpsl/rules.hpp"
#include "tpsl/types.hpp"

namespace tpsl {

using FeatureVector = std::vector<double>;

// Affine softmax classifier parameters. `weights` is row-major,
// label_count(scheme) rows of `dim` columns.
struct ClassifierParams {
  Scheme scheme = Scheme::Clinical3;
  std::size_t dim = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  static ClassifierParams zeros(Scheme scheme, std::size_t dim);

  std::size_t rows() const { return label_count(scheme); }
  double& weight(std::size_t label, std::size_t feature) {
    return weights[label * dim + feature];
  }
  double weight(std::size_t label, std::size_t feature) const {
    return weights[label * dim + feature];
  }

  // Throws std::invalid_argument when the shapes disagree with scheme/dim.
  void validate() const;

  friend bool operator==(const ClassifierParams&, const ClassifierParams&) = default;
};

// softmax(W x + b). Throws std::invalid_argument on a dimension mismatch.
std::vector<double> predict_proba(const ClassifierParams& params,
                                  std::span<const double> features);

// Numerically stable softmax of a logit vector.
std::vector<double> softmax(std::span<const double> logits);

// Sum over the three pairs of -log P_i(gold_i). Absent gold labels
// (placeholder slots) contribute nothing; probabilities are clamped at 1e-12
// before the log.
double cross_entropy(Scheme scheme, const ProbTriple& probs,
                     const std::array<std::optional<Label>, 3>& gold);

// Whether PSL grounding during training matches rule bodies against the
// model's argmax labels or the gold labels.
enum class GroundingGate : std::uint8_t { Predicted, Gold };

// A packed triplet with one feature vector per slot (placeholders carry an
// empty vector).
struct FeaturedTriplet {
  TripletInstance instance;
  std::array<FeatureVector, 3> features;
};

struct LossResult {
  double loss = 0.0;           // cross_entropy + lambda * psl
  double cross_entropy = 0.0;
  double psl = 0.0;            // distance to satisfaction, 0 when ungrounded
  ClassifierParams gradient;   // d loss / d params
};

// Joint objective for one instance and its gradient. The PSL term is only
// evaluated for grounded chain instances.
LossResult total_loss(const FeaturedTriplet& example,
                      const ClassifierParams& params, double lambda,
                      std::span<const PslRule> rules,
                      GroundingGate gate = GroundingGate::Predicted);

enum class OptimizerKind : std::uint8_t { Adam, Sgd };

struct TrainConfig {
  double lambda = 5.0;
  double learning_rate = 1e-2;
  int epochs = 10;
  int batch_size = 8;  // instances per batch, i.e. 24 pairs
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::Adam;
  GroundingGate gate = GroundingGate::Predicted;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  // lambda = 5 for Clinical3 and 0.5 for Dense6.
  static TrainConfig defaults_for(Scheme scheme);

  void validate() const;
};

struct TrainResult {
  ClassifierParams params;
  std::vector<double> epoch_losses;  // mean instance loss per epoch
};

// Minibatch optimization of the joint objective starting from zero
// parameters. Deterministic given config.seed, independent of thread count.
// Throws std::invalid_argument for an empty or ragged dataset and
// std::runtime_error if the loss becomes non-finite.
TrainResult train(std::span<const FeaturedTriplet> dataset,
                  std::span<const PslRule> rules, Scheme scheme,
                  const TrainConfig& config);

// --- Features --------------------------------------------------------------

// Layout: pair-kind one-hot (E-E, E-T, T-T), six signed token-distance
// buckets, six timestamp-delta buckets (first one = no timestamps), and one
// Gaussian noise channel.
inline constexpr std::size_t kFeatureDim = 16;

FeatureVector featurize(const Document& doc, const EntityPair& pair,
                        std::uint64_t noise_seed);

// Featurizes every slot of every instance.
std::vector<FeaturedTriplet> featurize_triplets(
    std::span<const TripletInstance> instances,
    std::span<const Document> documents, std::uint64_t noise_seed);

// Prediction for one pair from a trained model.
Prediction predict(const ClassifierParams& params, const Document& doc,
                   const EntityPair& pair, std::uint64_t noise_seed);

// --- Serialization ----------------------------------------------------------

void save_params(std::ostream& out, const ClassifierParams& params);
ClassifierParams load_params(std::istream& in);
void save_params(const std::string& path, const ClassifierParams& params);
ClassifierParams load_params(const std::string& path);

}  // namespace tpsl

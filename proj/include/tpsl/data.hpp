#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tpsl/labels.hpp"
#include "tpsl/types.hpp"

namespace tpsl {

// Corpus text format, version 1. One record per line, whitespace separated,
// `#` starts a comment:
//
//   tpsl-corpus 1
//   scheme clinical3
//   document <id>
//   entity <id> event|time <position> [<timestamp>]
//   relation <source> <target> <label>
//   prob <source> <target> <p_1> ... <p_n>     (scheme label order)
//   end
//
// Reals are written with 17 significant digits, so save/load round-trips
// exactly. The same format carries gold corpora, prediction files and
// inference output. An empty file loads as an empty clinical3 corpus.
inline constexpr int kCorpusFormatVersion = 1;

// Throws ParseError (position-annotated) for malformed input, unknown scheme
// tags, and references to undeclared entities.
Corpus load_corpus(std::istream& in, const std::string& source_name = "<stream>");
Corpus load_corpus(const std::string& path);

// Throws std::invalid_argument for ids that would not survive the format
// (empty or containing whitespace).
void save_corpus(std::ostream& out, const Corpus& corpus);
void save_corpus(const std::string& path, const Corpus& corpus);

inline Corpus load_documents(const std::string& path) { return load_corpus(path); }
inline void save_documents(const std::string& path, const Corpus& corpus) {
  save_corpus(path, corpus);
}
inline Corpus load_predictions(const std::string& path) { return load_corpus(path); }
inline void save_predictions(const std::string& path, const Corpus& corpus) {
  save_corpus(path, corpus);
}

// --- Synthetic timelines ---------------------------------------------------

struct SynthConfig {
  int num_documents = 20;
  int min_entities = 8;
  int max_entities = 14;
  double time_expression_fraction = 0.25;
  // (# annotated pairs) / (# possible pairs). T-T pairs are always annotated.
  double annotation_density = 0.5;
  // Consumed by simulate_classifier; recorded here so one config drives a run.
  double noise_temperature = 1.0;
  // Latent time cells per entity; fewer cells means more Overlap.
  double cells_per_entity = 0.4;
  std::uint64_t seed = 0;

  void validate() const;
};

// Each entity gets a unit interval [c, c+1) on an integer cell grid of the
// latent timeline; intervals either coincide (Overlap) or are disjoint
// (Before/After), so gold labels always form a consistent closure. Time
// expressions carry their cell as timestamp. Narrative positions follow the
// timeline with jitter. Pairs are annotated in narrative direction.
std::vector<Document> synth_generate(const SynthConfig& config);

struct SimulatorConfig {
  double noise_temperature = 1.0;
  // T-T pairs use noise_temperature * time_time_noise_scale.
  double time_time_noise_scale = 0.1;
  // Logits are sharpness * (one_hot(gold) + temperature * N(0, 1)).
  double sharpness = 3.0;
  std::uint64_t seed = 0;
};

// One prediction per gold relation. Temperature 0 yields the one-hot gold
// distribution; growing temperature drives argmax accuracy towards chance.
std::vector<Prediction> simulate_classifier(std::span<const Document> documents,
                                            Scheme scheme,
                                            const SimulatorConfig& config);

// Synthetic gold in the dense label scheme: coinciding intervals become
// Simultaneous instead of Overlap.
std::vector<Document> to_dense_labels(std::span<const Document> documents);

// Copies of `documents` whose prediction blocks hold the simulator output.
std::vector<Document> attach_predictions(std::span<const Document> documents,
                                         std::span<const Prediction> predictions);

// Seeded shuffle, then the first ceil((1 - heldout_fraction) * n) documents
// train and the rest are held out.
std::pair<std::vector<Document>, std::vector<Document>> split_documents(
    std::span<const Document> documents, double heldout_fraction,
    std::uint64_t seed);

}  // namespace tpsl

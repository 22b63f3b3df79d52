#include "tpsl/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

#include "tpsl/error.hpp"
#include "tpsl/model.hpp"

namespace tpsl {
namespace {

constexpr const char* kCorpusMagic = "tpsl-corpus";

struct Token {
  std::string text;
  std::size_t column;  // 1-based
};

std::vector<Token> tokenize(const std::string& line) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    if (line[i] == '#') break;
    if (std::isspace(static_cast<unsigned char>(line[i]))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    tokens.push_back(Token{line.substr(start, i - start), start + 1});
  }
  return tokens;
}

class CorpusParser {
 public:
  CorpusParser(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  Corpus parse() {
    Corpus corpus;
    bool saw_header = false;
    bool saw_scheme = false;
    Document* doc = nullptr;
    std::set<std::string> doc_ids;

    while (next_line()) {
      const std::string& key = tokens_[0].text;
      if (!saw_header) {
        if (key != kCorpusMagic) fail(0, "expected '" + std::string(kCorpusMagic) + "' header");
        expect_arity(2);
        if (tokens_[1].text != std::to_string(kCorpusFormatVersion)) {
          fail(1, "unsupported corpus format version '" + tokens_[1].text + "'");
        }
        saw_header = true;
        continue;
      }
      if (!saw_scheme) {
        if (key != "scheme") fail(0, "expected 'scheme' line");
        expect_arity(2);
        auto scheme = parse_scheme(tokens_[1].text);
        if (!scheme) fail(1, "unknown scheme tag '" + tokens_[1].text + "'");
        corpus.scheme = *scheme;
        saw_scheme = true;
        continue;
      }

      if (key == "document") {
        if (doc != nullptr) fail(0, "document '" + doc->id + "' is not closed by 'end'");
        expect_arity(2);
        if (!doc_ids.insert(tokens_[1].text).second) {
          fail(1, "duplicate document id '" + tokens_[1].text + "'");
        }
        corpus.documents.push_back(Document{tokens_[1].text, {}, {}, {}});
        doc = &corpus.documents.back();
        entity_ids_.clear();
        continue;
      }
      if (doc == nullptr) fail(0, "'" + key + "' outside of a document block");

      if (key == "end") {
        expect_arity(1);
        doc = nullptr;
      } else if (key == "entity") {
        if (tokens_.size() != 4 && tokens_.size() != 5) {
          fail(0, "entity needs: entity <id> event|time <position> [<timestamp>]");
        }
        Entity e;
        e.id = tokens_[1].text;
        if (!entity_ids_.insert(e.id).second) fail(1, "duplicate entity id '" + e.id + "'");
        auto kind = parse_entity_kind(tokens_[2].text);
        if (!kind) fail(2, "entity kind must be 'event' or 'time', got '" + tokens_[2].text + "'");
        e.kind = *kind;
        e.position = static_cast<int>(integer(3));
        if (tokens_.size() == 5) e.timestamp = real(4);
        doc->entities.push_back(std::move(e));
      } else if (key == "relation") {
        expect_arity(4);
        check_entity(1);
        check_entity(2);
        auto label = parse_label(tokens_[3].text);
        if (!label || !label_index(corpus.scheme, *label)) {
          fail(3, "label '" + tokens_[3].text + "' is not part of scheme " +
                      std::string(to_string(corpus.scheme)));
        }
        doc->relations.push_back(Relation{tokens_[1].text, tokens_[2].text, *label});
      } else if (key == "prob") {
        const std::size_t n = label_count(corpus.scheme);
        if (tokens_.size() != 3 + n) {
          fail(0, fmt::format("prob needs {} probabilities for scheme {}", n,
                              to_string(corpus.scheme)));
        }
        check_entity(1);
        check_entity(2);
        std::vector<double> probs;
        for (std::size_t i = 0; i < n; ++i) probs.push_back(real(3 + i));
        try {
          doc->predictions.push_back(Prediction::from_probs(
              doc->id, doc->make_pair(tokens_[1].text, tokens_[2].text),
              corpus.scheme, std::move(probs)));
        } catch (const std::invalid_argument& e) {
          fail(3, e.what());
        }
      } else {
        fail(0, "unknown record '" + key + "'");
      }
    }
    if (doc != nullptr) {
      throw ParseError(source_, line_no_ + 1, 1,
                       "unexpected end of file inside document '" + doc->id + "'");
    }
    if (saw_header && !saw_scheme) {
      throw ParseError(source_, line_no_ + 1, 1, "missing 'scheme' line");
    }
    return corpus;
  }

 private:
  bool next_line() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      tokens_ = tokenize(line);
      if (!tokens_.empty()) return true;
    }
    return false;
  }

  [[noreturn]] void fail(std::size_t token, const std::string& message) const {
    const std::size_t column = token < tokens_.size() ? tokens_[token].column : 1;
    throw ParseError(source_, line_no_, column, message);
  }

  void expect_arity(std::size_t n) const {
    if (tokens_.size() != n) {
      fail(std::min(n, tokens_.size() - 1),
           fmt::format("'{}' takes {} field(s), found {}", tokens_[0].text, n - 1,
                       tokens_.size() - 1));
    }
  }

  void check_entity(std::size_t token) const {
    if (!entity_ids_.count(tokens_[token].text)) {
      fail(token, "reference to undeclared entity '" + tokens_[token].text + "'");
    }
  }

  double real(std::size_t token) const {
    const std::string& t = tokens_[token].text;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(t, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != t.size() || !std::isfinite(v)) fail(token, "not a finite number: '" + t + "'");
    return v;
  }

  long integer(std::size_t token) const {
    const std::string& t = tokens_[token].text;
    std::size_t used = 0;
    long v = 0;
    try {
      v = std::stol(t, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != t.size()) fail(token, "not an integer: '" + t + "'");
    return v;
  }

  std::istream& in_;
  std::string source_;
  std::size_t line_no_ = 0;
  std::vector<Token> tokens_;
  std::set<std::string> entity_ids_;
};

void check_id(const std::string& id, const char* what) {
  if (id.empty() || std::any_of(id.begin(), id.end(), [](unsigned char c) {
        return std::isspace(c) || c == '#';
      })) {
    throw std::invalid_argument(std::string(what) + " id '" + id +
                                "' is empty or contains whitespace or '#'");
  }
}

Label label_for_cells(int a, int b) {
  if (a < b) return Label::Before;
  if (a > b) return Label::After;
  return Label::Overlap;
}

}  // namespace

Corpus load_corpus(std::istream& in, const std::string& source_name) {
  return CorpusParser(in, source_name).parse();
}

Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return load_corpus(in, path);
}

void save_corpus(std::ostream& out, const Corpus& corpus) {
  out << kCorpusMagic << ' ' << kCorpusFormatVersion << '\n';
  out << "scheme " << to_string(corpus.scheme) << '\n';
  for (const Document& doc : corpus.documents) {
    check_id(doc.id, "document");
    doc.validate();
    out << "document " << doc.id << '\n';
    for (const Entity& e : doc.entities) {
      check_id(e.id, "entity");
      out << "entity " << e.id << ' ' << to_string(e.kind) << ' ' << e.position;
      if (e.timestamp) out << fmt::format(" {:.17g}", *e.timestamp);
      out << '\n';
    }
    for (const Relation& r : doc.relations) {
      require_label_index(corpus.scheme, r.label);
      out << "relation " << r.source << ' ' << r.target << ' ' << to_string(r.label)
          << '\n';
    }
    for (const Prediction& p : doc.predictions) {
      out << "prob " << p.pair.source << ' ' << p.pair.target;
      for (double v : p.probs) out << fmt::format(" {:.17g}", v);
      out << '\n';
    }
    out << "end\n";
  }
}

void save_corpus(const std::string& path, const Corpus& corpus) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  save_corpus(out, corpus);
}

void SynthConfig::validate() const {
  if (num_documents < 0) throw std::invalid_argument("num_documents must be >= 0");
  if (min_entities < 1 || max_entities < min_entities) {
    throw std::invalid_argument("entity range must satisfy 1 <= min <= max");
  }
  if (!(time_expression_fraction >= 0.0 && time_expression_fraction <= 1.0)) {
    throw std::invalid_argument("time_expression_fraction must be in [0,1]");
  }
  if (!(annotation_density > 0.0 && annotation_density <= 1.0)) {
    throw std::invalid_argument("annotation_density must be in (0,1]");
  }
  if (!(noise_temperature >= 0.0)) {
    throw std::invalid_argument("noise_temperature must be >= 0");
  }
  if (!(cells_per_entity > 0.0)) throw std::invalid_argument("cells_per_entity must be > 0");
}

std::vector<Document> synth_generate(const SynthConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::vector<Document> docs;
  docs.reserve(static_cast<std::size_t>(config.num_documents));

  for (int d = 0; d < config.num_documents; ++d) {
    const int n = std::uniform_int_distribution<int>(config.min_entities,
                                                     config.max_entities)(rng);
    const int cells = std::max(
        2, static_cast<int>(std::lround(config.cells_per_entity * n)));

    struct Latent {
      EntityKind kind;
      int cell;
      double narrative_key;
    };
    std::vector<Latent> latent(static_cast<std::size_t>(n));
    std::bernoulli_distribution is_time(config.time_expression_fraction);
    std::uniform_int_distribution<int> cell_dist(0, cells - 1);
    std::normal_distribution<double> jitter(0.0, 0.35);
    for (Latent& l : latent) {
      l.kind = is_time(rng) ? EntityKind::TimeExpression : EntityKind::Event;
      l.cell = cell_dist(rng);
      l.narrative_key = l.cell + jitter(rng);
    }
    std::stable_sort(latent.begin(), latent.end(), [](const Latent& a, const Latent& b) {
      return a.narrative_key < b.narrative_key;
    });

    Document doc;
    doc.id = fmt::format("doc{:03d}", d);
    std::uniform_int_distribution<int> gap(1, 4);
    int position = 0;
    int events = 0;
    int times = 0;
    for (const Latent& l : latent) {
      position += gap(rng);
      Entity e;
      e.kind = l.kind;
      e.position = position;
      if (l.kind == EntityKind::TimeExpression) {
        e.id = fmt::format("t{}", times++);
        e.timestamp = static_cast<double>(l.cell);
      } else {
        e.id = fmt::format("e{}", events++);
      }
      doc.entities.push_back(std::move(e));
    }

    // Time-time pairs are always annotated; the rest are sampled to reach
    // the target density.
    std::vector<std::pair<int, int>> anchored, optional;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const bool tt = latent[i].kind == EntityKind::TimeExpression &&
                        latent[j].kind == EntityKind::TimeExpression;
        (tt ? anchored : optional).emplace_back(i, j);
      }
    }
    const std::size_t total = anchored.size() + optional.size();
    const auto target = static_cast<std::size_t>(
        std::lround(config.annotation_density * static_cast<double>(total)));
    std::size_t wanted = target > anchored.size() ? target - anchored.size() : 0;
    wanted = std::min(wanted, optional.size());
    std::shuffle(optional.begin(), optional.end(), rng);
    optional.resize(wanted);

    std::vector<std::pair<int, int>> chosen = anchored;
    chosen.insert(chosen.end(), optional.begin(), optional.end());
    std::sort(chosen.begin(), chosen.end());
    for (const auto& [i, j] : chosen) {
      doc.relations.push_back(Relation{doc.entities[i].id, doc.entities[j].id,
                                       label_for_cells(latent[i].cell, latent[j].cell)});
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<Prediction> simulate_classifier(std::span<const Document> documents,
                                            Scheme scheme,
                                            const SimulatorConfig& config) {
  if (!(config.noise_temperature >= 0.0) || !(config.time_time_noise_scale >= 0.0)) {
    throw std::invalid_argument("noise temperatures must be >= 0");
  }
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const std::size_t width = label_count(scheme);
  std::vector<Prediction> out;
  for (const Document& doc : documents) {
    for (const Relation& r : doc.relations) {
      EntityPair pair = doc.make_pair(r.source, r.target);
      const std::size_t gold = require_label_index(scheme, r.label);
      double temperature = config.noise_temperature;
      if (pair.kind() == PairKind::TimeTime) temperature *= config.time_time_noise_scale;

      std::vector<double> logits(width, 0.0);
      logits[gold] = 1.0;
      // Draw the noise even at temperature 0 so the stream does not depend
      // on which pairs are noiseless.
      for (double& z : logits) z = config.sharpness * (z + temperature * noise(rng));
      std::vector<double> probs;
      if (temperature == 0.0) {
        probs.assign(width, 0.0);
        probs[gold] = 1.0;
      } else {
        probs = softmax(logits);
      }
      out.push_back(Prediction::from_probs(doc.id, std::move(pair), scheme, std::move(probs)));
    }
  }
  return out;
}

std::vector<Document> to_dense_labels(std::span<const Document> documents) {
  std::vector<Document> out(documents.begin(), documents.end());
  for (Document& doc : out) {
    for (Relation& r : doc.relations) {
      if (r.label == Label::Overlap) r.label = Label::Simultaneous;
    }
  }
  return out;
}

std::vector<Document> attach_predictions(std::span<const Document> documents,
                                         std::span<const Prediction> predictions) {
  std::vector<Document> out(documents.begin(), documents.end());
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].predictions.clear();
    index[out[i].id] = i;
  }
  for (const Prediction& p : predictions) {
    auto it = index.find(p.document_id);
    if (it == index.end()) {
      throw std::invalid_argument("prediction for unknown document " + p.document_id);
    }
    out[it->second].predictions.push_back(p);
  }
  return out;
}

std::pair<std::vector<Document>, std::vector<Document>> split_documents(
    std::span<const Document> documents, double heldout_fraction, std::uint64_t seed) {
  if (!(heldout_fraction >= 0.0 && heldout_fraction < 1.0)) {
    throw std::invalid_argument("heldout fraction must be in [0,1)");
  }
  std::vector<std::size_t> order(documents.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto train_n = static_cast<std::size_t>(
      std::ceil((1.0 - heldout_fraction) * static_cast<double>(documents.size())));
  std::pair<std::vector<Document>, std::vector<Document>> out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < train_n ? out.first : out.second).push_back(documents[order[i]]);
  }
  return out;
}

}  // namespace tpsl

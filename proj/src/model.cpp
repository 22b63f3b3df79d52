#include "tpsl/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "tpsl/error.hpp"
#include "tpsl/kernels.hpp"

namespace tpsl {
namespace {

constexpr double kProbFloor = 1e-12;
constexpr const char* kModelMagic = "tpsl-model";
constexpr int kModelVersion = 1;

std::uint64_t fnv1a(std::uint64_t h, std::string_view s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  // Separator so ("ab","c") and ("a","bc") differ.
  h ^= 0xff;
  h *= 0x100000001b3ULL;
  return h;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Standard normal draw keyed by (seed, document, pair), independent of the
// order in which pairs are featurized.
double keyed_normal(std::uint64_t seed, const std::string& doc,
                    const EntityPair& pair) {
  std::uint64_t state = 0xcbf29ce484222325ULL ^ seed;
  state = fnv1a(state, doc);
  state = fnv1a(state, pair.source);
  state = fnv1a(state, pair.target);
  const double u1 =
      (static_cast<double>(splitmix64(state) >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::size_t token_bucket(int delta) {
  if (delta <= -10) return 0;
  if (delta <= -4) return 1;
  if (delta <= 0) return 2;
  if (delta <= 3) return 3;
  if (delta <= 9) return 4;
  return 5;
}

std::size_t time_bucket(const Entity& a, const Entity& b) {
  if (!a.timestamp || !b.timestamp) return 0;
  const double dt = *b.timestamp - *a.timestamp;
  if (dt <= -2.0) return 1;
  if (dt < -1e-9) return 2;
  if (dt <= 1e-9) return 3;
  if (dt < 2.0) return 4;
  return 5;
}

}  // namespace

ClassifierParams ClassifierParams::zeros(Scheme scheme, std::size_t dim) {
  ClassifierParams p;
  p.scheme = scheme;
  p.dim = dim;
  p.weights.assign(label_count(scheme) * dim, 0.0);
  p.bias.assign(label_count(scheme), 0.0);
  return p;
}

void ClassifierParams::validate() const {
  if (dim == 0) throw std::invalid_argument("classifier dim must be positive");
  if (bias.size() != rows() || weights.size() != rows() * dim) {
    throw std::invalid_argument(fmt::format(
        "classifier shape mismatch: {} bias entries and {} weights for {} "
        "labels x {} features",
        bias.size(), weights.size(), rows(), dim));
  }
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  if (out.empty()) return out;
  const double peak = *std::max_element(out.begin(), out.end());
  double total = 0.0;
  for (double& v : out) {
    v = std::exp(v - peak);
    total += v;
  }
  for (double& v : out) v /= total;
  return out;
}

std::vector<double> predict_proba(const ClassifierParams& params,
                                  std::span<const double> features) {
  if (features.size() != params.dim) {
    throw std::invalid_argument(
        fmt::format("feature vector has dimension {}, model expects {}",
                    features.size(), params.dim));
  }
  std::vector<double> logits(params.bias);
  for (std::size_t k = 0; k < logits.size(); ++k) {
    const double* row = params.weights.data() + k * params.dim;
    for (std::size_t j = 0; j < params.dim; ++j) logits[k] += row[j] * features[j];
  }
  return softmax(logits);
}

double cross_entropy(Scheme scheme, const ProbTriple& probs,
                     const std::array<std::optional<Label>, 3>& gold) {
  double loss = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    if (!gold[i]) continue;
    const std::size_t k = require_label_index(scheme, *gold[i]);
    if (probs[i].size() != label_count(scheme)) {
      throw std::invalid_argument("probability vector has the wrong length");
    }
    loss -= std::log(std::max(probs[i][k], kProbFloor));
  }
  return loss;
}

LossResult total_loss(const FeaturedTriplet& example,
                      const ClassifierParams& params, double lambda,
                      std::span<const PslRule> rules, GroundingGate gate) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  params.validate();
  const Scheme scheme = params.scheme;
  const std::size_t width = params.rows();
  const TripletInstance& inst = example.instance;

  LossResult out;
  out.gradient = ClassifierParams::zeros(scheme, params.dim);

  std::array<std::vector<double>, 3> probs;
  std::array<std::vector<double>, 3> dlogits;
  std::array<std::optional<Label>, 3> gold;
  for (std::size_t s = 0; s < 3; ++s) {
    dlogits[s].assign(width, 0.0);
    if (inst.slots[s].placeholder) continue;
    probs[s] = predict_proba(params, example.features[s]);
    gold[s] = inst.slots[s].gold;
    if (gold[s]) {
      const std::size_t g = require_label_index(scheme, *gold[s]);
      for (std::size_t k = 0; k < width; ++k) {
        dlogits[s][k] = probs[s][k] - (k == g ? 1.0 : 0.0);
      }
    }
  }
  out.cross_entropy =
      cross_entropy(scheme, ProbTriple{probs[0], probs[1], probs[2]}, gold);

  if (inst.grounded && inst.is_chain()) {
    LabelTriple chosen;
    for (std::size_t s = 0; s < 3; ++s) {
      if (gate == GroundingGate::Gold && gold[s]) {
        chosen[s] = *gold[s];
      } else {
        chosen[s] = label_at(scheme, argmax(probs[s]));
      }
    }
    const DistanceResult d = distance_subgradient(
        scheme, ProbTriple{probs[0], probs[1], probs[2]}, chosen, rules);
    out.psl = d.distance;
    if (d.distance > 0.0 && lambda > 0.0) {
      // Chain rule through the softmax: dz_k = p_k (g_k - <g, p>).
      for (std::size_t s = 0; s < 3; ++s) {
        const auto& g = d.subgradient[s];
        double gp = 0.0;
        for (std::size_t k = 0; k < width; ++k) gp += g[k] * probs[s][k];
        for (std::size_t k = 0; k < width; ++k) {
          dlogits[s][k] += lambda * probs[s][k] * (g[k] - gp);
        }
      }
    }
  }
  out.loss = out.cross_entropy + lambda * out.psl;

  for (std::size_t s = 0; s < 3; ++s) {
    if (inst.slots[s].placeholder) continue;
    const auto& x = example.features[s];
    for (std::size_t k = 0; k < width; ++k) {
      const double dz = dlogits[s][k];
      if (dz == 0.0) continue;
      out.gradient.bias[k] += dz;
      double* row = out.gradient.weights.data() + k * params.dim;
      for (std::size_t j = 0; j < params.dim; ++j) row[j] += dz * x[j];
    }
  }
  return out;
}

TrainConfig TrainConfig::defaults_for(Scheme scheme) {
  TrainConfig c;
  c.lambda = scheme == Scheme::Dense6 ? 0.5 : 5.0;
  return c;
}

void TrainConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("lambda must be a finite value >= 0");
  }
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be > 0");
  if (epochs <= 0) throw std::invalid_argument("epochs must be positive");
  if (batch_size <= 0) throw std::invalid_argument("batch size must be positive");
}

TrainResult train(std::span<const FeaturedTriplet> dataset,
                  std::span<const PslRule> rules, Scheme scheme,
                  const TrainConfig& config) {
  config.validate();
  if (dataset.empty()) throw std::invalid_argument("training set is empty");

  std::size_t dim = 0;
  for (const FeaturedTriplet& ex : dataset) {
    for (std::size_t s = 0; s < 3; ++s) {
      if (ex.instance.slots[s].placeholder) continue;
      const std::size_t d = ex.features[s].size();
      if (dim == 0) dim = d;
      if (d != dim || d == 0) {
        throw std::invalid_argument(fmt::format(
            "inconsistent feature dimension: {} vs {} in document {}", d, dim,
            ex.instance.document_id));
      }
    }
  }
  if (dim == 0) throw std::invalid_argument("training set has no labeled pairs");

  TrainResult result;
  result.params = ClassifierParams::zeros(scheme, dim);
  ClassifierParams& params = result.params;

  const std::size_t nw = params.weights.size();
  const std::size_t nparams = nw + params.bias.size();
  std::vector<double> m(nparams, 0.0), v(nparams, 0.0);
  auto param_at = [&](std::size_t i) -> double& {
    return i < nw ? params.weights[i] : params.bias[i - nw];
  };

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(config.batch_size);
  long step = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t n = std::min(batch, order.size() - start);
      const std::span<const std::size_t> ids(order.data() + start, n);
      const kernels::BatchGradient bg = kernels::batch_loss_parallel(
          dataset, ids, params, config.lambda, rules, config.gate);
      if (!std::isfinite(bg.loss_sum)) {
        throw std::runtime_error(fmt::format(
            "non-finite loss at epoch {} batch starting {} (cross-entropy {}, "
            "psl {})",
            epoch + 1, start, bg.cross_entropy_sum, bg.psl_sum));
      }
      epoch_loss += bg.loss_sum;
      ++step;
      const double scale = 1.0 / static_cast<double>(n);
      const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      for (std::size_t i = 0; i < nparams; ++i) {
        const double g = scale * (i < nw ? bg.gradient_sum.weights[i]
                                         : bg.gradient_sum.bias[i - nw]);
        if (config.optimizer == OptimizerKind::Sgd) {
          param_at(i) -= config.learning_rate * g;
          continue;
        }
        m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g;
        v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g * g;
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        param_at(i) -= config.learning_rate * mhat / (std::sqrt(vhat) + config.epsilon);
      }
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(dataset.size()));
  }
  return result;
}

FeatureVector featurize(const Document& doc, const EntityPair& pair,
                        std::uint64_t noise_seed) {
  const Entity* a = doc.find_entity(pair.source);
  const Entity* b = doc.find_entity(pair.target);
  if (a == nullptr || b == nullptr) {
    throw std::invalid_argument("document " + doc.id +
                                " references unknown entity " +
                                (a == nullptr ? pair.source : pair.target));
  }
  FeatureVector x(kFeatureDim, 0.0);
  x[static_cast<std::size_t>(pair_kind(a->kind, b->kind))] = 1.0;
  x[3 + token_bucket(b->position - a->position)] = 1.0;
  x[9 + time_bucket(*a, *b)] = 1.0;
  x[15] = keyed_normal(noise_seed, doc.id, pair);
  return x;
}

std::vector<FeaturedTriplet> featurize_triplets(
    std::span<const TripletInstance> instances,
    std::span<const Document> documents, std::uint64_t noise_seed) {
  std::vector<FeaturedTriplet> out;
  out.reserve(instances.size());
  for (const TripletInstance& inst : instances) {
    auto doc = std::find_if(documents.begin(), documents.end(),
                            [&](const Document& d) { return d.id == inst.document_id; });
    if (doc == documents.end()) {
      throw std::invalid_argument("triplet refers to unknown document " +
                                  inst.document_id);
    }
    FeaturedTriplet ex{inst, {}};
    for (std::size_t s = 0; s < 3; ++s) {
      if (!inst.slots[s].placeholder) {
        ex.features[s] = featurize(*doc, inst.slots[s].pair, noise_seed);
      }
    }
    out.push_back(std::move(ex));
  }
  return out;
}

Prediction predict(const ClassifierParams& params, const Document& doc,
                   const EntityPair& pair, std::uint64_t noise_seed) {
  return Prediction::from_probs(doc.id, pair, params.scheme,
                                predict_proba(params, featurize(doc, pair, noise_seed)));
}

void save_params(std::ostream& out, const ClassifierParams& params) {
  params.validate();
  out << kModelMagic << ' ' << kModelVersion << '\n';
  out << "scheme " << to_string(params.scheme) << '\n';
  out << "dim " << params.dim << '\n';
  out << "bias";
  for (double b : params.bias) out << fmt::format(" {:.17g}", b);
  out << '\n';
  for (std::size_t k = 0; k < params.rows(); ++k) {
    out << "weights " << to_string(label_at(params.scheme, k));
    for (std::size_t j = 0; j < params.dim; ++j) {
      out << fmt::format(" {:.17g}", params.weight(k, j));
    }
    out << '\n';
  }
}

ClassifierParams load_params(std::istream& in) {
  const std::string source = "model";
  std::string line;
  std::size_t line_no = 0;
  auto next = [&](const char* expected) -> std::istringstream {
    if (!std::getline(in, line)) {
      throw ParseError(source, line_no + 1, 1,
                       std::string("unexpected end of file, expected '") +
                           expected + "'");
    }
    ++line_no;
    std::istringstream fields(line);
    std::string key;
    fields >> key;
    if (key != expected) {
      throw ParseError(source, line_no, 1,
                       "expected '" + std::string(expected) + "', found '" + key + "'");
    }
    return fields;
  };
  auto read_doubles = [&](std::istringstream& fields, std::size_t count) {
    std::vector<double> values;
    std::string token;
    while (fields >> token) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(token, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != token.size()) {
        throw ParseError(source, line_no, 1, "not a number: '" + token + "'");
      }
      values.push_back(v);
    }
    if (values.size() != count) {
      throw ParseError(source, line_no, 1,
                       fmt::format("expected {} values, found {}", count, values.size()));
    }
    return values;
  };

  {
    auto header = next(kModelMagic);
    int version = 0;
    if (!(header >> version) || version != kModelVersion) {
      throw ParseError(source, line_no, 1, "unsupported model version");
    }
  }
  ClassifierParams p;
  {
    auto fields = next("scheme");
    std::string tag;
    fields >> tag;
    auto scheme = parse_scheme(tag);
    if (!scheme) throw ParseError(source, line_no, 8, "unknown scheme tag '" + tag + "'");
    p.scheme = *scheme;
  }
  {
    auto fields = next("dim");
    long dim = 0;
    if (!(fields >> dim) || dim <= 0) {
      throw ParseError(source, line_no, 5, "dim must be a positive integer");
    }
    p.dim = static_cast<std::size_t>(dim);
  }
  {
    auto fields = next("bias");
    p.bias = read_doubles(fields, p.rows());
  }
  p.weights.reserve(p.rows() * p.dim);
  for (std::size_t k = 0; k < p.rows(); ++k) {
    auto fields = next("weights");
    std::string label;
    fields >> label;
    if (parse_label(label) != label_at(p.scheme, k)) {
      throw ParseError(source, line_no, 9,
                       fmt::format("expected weights row for {}, found '{}'",
                                   to_string(label_at(p.scheme, k)), label));
    }
    auto row = read_doubles(fields, p.dim);
    p.weights.insert(p.weights.end(), row.begin(), row.end());
  }
  p.validate();
  return p;
}

void save_params(const std::string& path, const ClassifierParams& params) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  save_params(out, params);
}

ClassifierParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return load_params(in);
}

}  // namespace tpsl

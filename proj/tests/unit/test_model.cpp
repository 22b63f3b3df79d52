#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <omp.h>
#include <sstream>

#include "support/support.hpp"
#include "tpsl/data.hpp"
#include "tpsl/error.hpp"
#include "tpsl/model.hpp"
#include "tpsl/pipeline.hpp"

using namespace tpsl;
using tpsl::testing::Gen;

namespace {

TripletSlot slot(std::string a, std::string b, std::optional<Label> gold) {
  return TripletSlot{EntityPair{std::move(a), std::move(b), EntityKind::Event, EntityKind::Event},
                     gold, false};
}

FeaturedTriplet chain(std::array<Label, 3> gold, std::array<FeatureVector, 3> x) {
  FeaturedTriplet ex;
  ex.instance.document_id = "d";
  ex.instance.slots = {slot("a", "b", gold[0]), slot("b", "c", gold[1]),
                       slot("a", "c", gold[2])};
  ex.instance.grounded = true;
  ex.features = std::move(x);
  return ex;
}

FeaturedTriplet filler(std::array<Label, 3> gold, std::array<FeatureVector, 3> x) {
  FeaturedTriplet ex = chain(gold, std::move(x));
  ex.instance.slots = {slot("p", "q", gold[0]), slot("r", "s", gold[1]),
                       slot("t", "u", gold[2])};
  ex.instance.grounded = false;
  return ex;
}

ClassifierParams random_params(Gen& gen, Scheme scheme, std::size_t dim, double scale) {
  ClassifierParams p = ClassifierParams::zeros(scheme, dim);
  for (double& w : p.weights) w = scale * gen.normal();
  for (double& b : p.bias) b = scale * gen.normal();
  return p;
}

FeatureVector random_features(Gen& gen, std::size_t dim) {
  FeatureVector x(dim);
  for (double& v : x) v = gen.normal();
  return x;
}

Label random_label(Gen& gen, Scheme scheme) {
  return label_at(scheme, std::size_t(gen.integer(0, int(label_count(scheme)) - 1)));
}

// Mean per-instance cross-entropy of a plain multinomial logistic model,
// written out independently of the library.
struct Logistic {
  std::size_t classes, dim;
  std::vector<std::vector<double>> x;
  std::vector<std::size_t> y;
  std::size_t instances;

  double loss(const std::vector<double>& w, const std::vector<double>& b,
              std::vector<double>* gw = nullptr, std::vector<double>* gb = nullptr) const {
    double total = 0.0;
    if (gw) gw->assign(w.size(), 0.0);
    if (gb) gb->assign(b.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      std::vector<double> z(classes);
      double peak = -1e300;
      for (std::size_t k = 0; k < classes; ++k) {
        z[k] = b[k];
        for (std::size_t j = 0; j < dim; ++j) z[k] += w[k * dim + j] * x[i][j];
        peak = std::max(peak, z[k]);
      }
      double norm = 0.0;
      for (double& v : z) norm += (v = std::exp(v - peak));
      for (double& v : z) v /= norm;
      total -= std::log(z[y[i]]);
      if (gw) {
        for (std::size_t k = 0; k < classes; ++k) {
          const double d = z[k] - (k == y[i] ? 1.0 : 0.0);
          (*gb)[k] += d / double(instances);
          for (std::size_t j = 0; j < dim; ++j) (*gw)[k * dim + j] += d * x[i][j] / double(instances);
        }
      }
    }
    return total / double(instances);
  }
};

}  // namespace

TEST_CASE("predict_proba reference values") {
  ClassifierParams p = ClassifierParams::zeros(Scheme::Clinical3, 4);
  const std::vector<double> x{0.3, -1.0, 2.0, 5.0};
  for (double v : predict_proba(p, x)) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  p.bias = {10.0, 0.0, 0.0};
  const auto probs = predict_proba(p, x);
  CHECK(probs[0] == doctest::Approx(0.9999092083843409).epsilon(1e-14));
  CHECK(probs[1] == doctest::Approx(4.5395807829510914e-05).epsilon(1e-12));
  CHECK(probs[2] == doctest::Approx(4.5395807829510914e-05).epsilon(1e-12));

  const auto shifted = softmax(std::vector<double>{1003.0, 995.0, 1000.0});
  const auto base = softmax(std::vector<double>{3.0, -5.0, 0.0});
  for (std::size_t k = 0; k < 3; ++k) CHECK(shifted[k] == doctest::Approx(base[k]).epsilon(1e-13));

  CHECK_THROWS_AS(predict_proba(p, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("cross entropy") {
  const Scheme s = Scheme::Clinical3;
  const std::vector<double> one_hot{0.0, 0.0, 1.0}, uniform(3, 1.0 / 3.0);
  CHECK(cross_entropy(s, {one_hot, one_hot, one_hot},
                      {Label::Overlap, Label::Overlap, Label::Overlap}) == 0.0);
  CHECK(cross_entropy(s, {uniform, uniform, uniform},
                      {Label::Before, Label::After, Label::Overlap}) ==
        doctest::Approx(3.295836866004329).epsilon(1e-14));
  CHECK(cross_entropy(s, {uniform, uniform, uniform}, {Label::Before, std::nullopt, std::nullopt}) ==
        doctest::Approx(std::log(3.0)).epsilon(1e-14));
  // Zero probability at the gold label is clamped, not infinite.
  CHECK(cross_entropy(s, {one_hot, one_hot, one_hot}, {Label::Before, std::nullopt, std::nullopt}) ==
        doctest::Approx(-std::log(1e-12)));
}

TEST_CASE("joint loss degenerate cases") {
  Gen gen(2);
  const auto rules = default_rule_set(Scheme::Clinical3);
  for (int trial = 0; trial < 50; ++trial) {
    const ClassifierParams p = random_params(gen, Scheme::Clinical3, 5, 1.0);
    const std::array<FeatureVector, 3> x{random_features(gen, 5), random_features(gen, 5),
                                         random_features(gen, 5)};
    const std::array<Label, 3> gold{Label::Before, Label::Overlap, Label::Before};
    const auto grounded = chain(gold, x);
    const auto ungrounded = filler(gold, x);

    const LossResult zero = total_loss(grounded, p, 0.0, rules);
    CHECK(zero.loss == zero.cross_entropy);
    const LossResult free = total_loss(ungrounded, p, 5.0, rules);
    CHECK(free.loss == free.cross_entropy);
    CHECK(free.psl == 0.0);

    const LossResult heavy = total_loss(grounded, p, 5.0, rules);
    CHECK(heavy.cross_entropy == zero.cross_entropy);
    CHECK(heavy.loss == doctest::Approx(heavy.cross_entropy + 5.0 * heavy.psl));
    if (heavy.psl == 0.0) CHECK(heavy.loss == heavy.cross_entropy);
  }
  CHECK_THROWS_AS(total_loss(chain({Label::Before, Label::Before, Label::Before},
                                   {FeatureVector(2), FeatureVector(2), FeatureVector(2)}),
                             ClassifierParams::zeros(Scheme::Clinical3, 2), -1.0, rules),
                  std::invalid_argument);
}

TEST_CASE("joint loss gradient matches central differences") {
  Gen gen(99);
  constexpr double h = 1e-5;
  int models = 0, with_psl = 0;
  for (int trial = 0; trial < 5000 && models < 200; ++trial) {
    const Scheme scheme = gen.coin(0.7) ? Scheme::Clinical3 : Scheme::Dense6;
    const auto rules = default_rule_set(scheme);
    const std::size_t dim = std::size_t(gen.integer(1, 8));
    ClassifierParams p = random_params(gen, scheme, dim, 1.5);
    const std::array<FeatureVector, 3> x{random_features(gen, dim), random_features(gen, dim),
                                         random_features(gen, dim)};
    const std::array<Label, 3> gold{random_label(gen, scheme), random_label(gen, scheme),
                                    random_label(gen, scheme)};
    const double lambda = gen.uniform(0.5, 5.0);
    const auto ex = chain(gold, x);

    // Stay away from argmax ties and hinge kinks.
    std::array<std::vector<double>, 3> probs;
    LabelTriple chosen{};
    bool near_kink = false;
    for (std::size_t s = 0; s < 3; ++s) {
      probs[s] = predict_proba(p, x[s]);
      auto sorted = probs[s];
      std::sort(sorted.rbegin(), sorted.rend());
      near_kink |= sorted[0] - sorted[1] < 1e-3;
      chosen[s] = label_at(scheme, argmax(probs[s]));
    }
    const auto d = ground_and_distance(scheme, {probs[0], probs[1], probs[2]}, chosen, rules);
    if (d.matched_rule) {
      const PslRule& r = rules[*d.matched_rule];
      const double body = probs[0][require_label_index(scheme, chosen[0])] +
                          probs[1][require_label_index(scheme, chosen[1])] - 1.0;
      const double outer =
          std::max(body, 0.0) - probs[2][require_label_index(scheme, r.head.label)];
      near_kink |= std::abs(body) < 1e-3 || std::abs(outer) < 1e-3;
    }
    if (near_kink) continue;
    ++models;
    with_psl += d.distance > 0.0;

    const LossResult base = total_loss(ex, p, lambda, rules);
    auto check_param = [&](double& param, double analytic) {
      const double saved = param;
      param = saved + h;
      const double up = total_loss(ex, p, lambda, rules).loss;
      param = saved - h;
      const double down = total_loss(ex, p, lambda, rules).loss;
      param = saved;
      CHECK(std::abs((up - down) / (2 * h) - analytic) <= 1e-4);
    };
    for (std::size_t i = 0; i < p.weights.size(); ++i) check_param(p.weights[i], base.gradient.weights[i]);
    for (std::size_t i = 0; i < p.bias.size(); ++i) check_param(p.bias[i], base.gradient.bias[i]);
  }
  CHECK(models == 200);
  CHECK(with_psl >= 20);
}

TEST_CASE("training reaches high accuracy on separable data") {
  Gen gen(4);
  std::vector<FeaturedTriplet> data;
  std::vector<std::pair<FeatureVector, Label>> points;
  for (int i = 0; i < 100; ++i) {
    std::array<Label, 3> gold{};
    std::array<FeatureVector, 3> x;
    for (std::size_t s = 0; s < 3; ++s) {
      const int cls = gen.integer(0, 2);
      const double u = cls == 0 ? gen.uniform(1.0, 3.0)
                       : cls == 1 ? gen.uniform(-3.0, -1.0)
                                  : gen.uniform(-0.3, 0.3);
      x[s] = {u, gen.normal()};
      gold[s] = label_at(Scheme::Clinical3, std::size_t(cls));
      points.emplace_back(x[s], gold[s]);
    }
    data.push_back(filler(gold, x));
  }
  TrainConfig cfg;
  cfg.lambda = 0.0;
  cfg.seed = 1;
  const TrainResult result = train(data, {}, Scheme::Clinical3, cfg);
  int correct = 0;
  for (const auto& [x, label] : points) {
    correct += label_at(Scheme::Clinical3, argmax(predict_proba(result.params, x))) == label;
  }
  CHECK(double(correct) / double(points.size()) >= 0.95);
  CHECK(result.epoch_losses.size() == 10);
  CHECK(result.epoch_losses.back() < result.epoch_losses.front());
}

TEST_CASE("lambda zero training converges to the logistic regression optimum") {
  Gen gen(8);
  constexpr std::size_t kDim = 2, kInstances = 20;
  const std::vector<double> truth_w{1.5, -0.5, -1.0, 1.0, 0.0, 0.3};
  Logistic oracle{3, kDim, {}, {}, kInstances};
  std::vector<FeaturedTriplet> data;
  for (std::size_t i = 0; i < kInstances; ++i) {
    std::array<Label, 3> gold{};
    std::array<FeatureVector, 3> x;
    for (std::size_t s = 0; s < 3; ++s) {
      x[s] = random_features(gen, kDim);
      std::vector<double> z(3);
      for (std::size_t k = 0; k < 3; ++k) z[k] = truth_w[k * kDim] * x[s][0] + truth_w[k * kDim + 1] * x[s][1];
      std::vector<double> p = softmax(z);
      const double u = gen.uniform();
      std::size_t cls = u < p[0] ? 0 : u < p[0] + p[1] ? 1 : 2;
      gold[s] = label_at(Scheme::Clinical3, cls);
      oracle.x.push_back(x[s]);
      oracle.y.push_back(cls);
    }
    data.push_back(filler(gold, x));
  }

  // Full-batch gradient descent to a tight gradient norm.
  std::vector<double> w(3 * kDim, 0.0), b(3, 0.0), gw, gb;
  double grad_norm = 1.0;
  for (int it = 0; it < 200000 && grad_norm > 1e-10; ++it) {
    oracle.loss(w, b, &gw, &gb);
    grad_norm = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) grad_norm += gw[i] * gw[i], w[i] -= 0.5 * gw[i];
    for (std::size_t i = 0; i < b.size(); ++i) grad_norm += gb[i] * gb[i], b[i] -= 0.5 * gb[i];
    grad_norm = std::sqrt(grad_norm);
  }
  REQUIRE(grad_norm <= 1e-10);
  const double optimum = oracle.loss(w, b);

  TrainConfig cfg;
  cfg.lambda = 0.0;
  cfg.batch_size = int(kInstances);
  cfg.epochs = 3000;
  const TrainResult result = train(data, {}, Scheme::Clinical3, cfg);
  const double reached = oracle.loss(result.params.weights, result.params.bias);
  CHECK(reached >= optimum - 1e-12);
  CHECK(reached - optimum <= 1e-3);
}

TEST_CASE("training is deterministic and independent of the thread count") {
  SynthConfig sc;
  sc.num_documents = 8;
  sc.seed = 5;
  const auto rules = default_rule_set(Scheme::Clinical3);
  const auto data = prepare_training_set(synth_generate(sc), rules, 5);
  TrainConfig cfg;
  cfg.seed = 17;
  cfg.epochs = 3;
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const TrainResult a = train(data, rules, Scheme::Clinical3, cfg);
  omp_set_num_threads(4);
  const TrainResult b = train(data, rules, Scheme::Clinical3, cfg);
  const TrainResult c = train(data, rules, Scheme::Clinical3, cfg);
  omp_set_num_threads(saved);
  CHECK(a.params == b.params);
  CHECK(b.params == c.params);
  CHECK(a.epoch_losses == c.epoch_losses);

  cfg.seed = 18;
  CHECK_FALSE(train(data, rules, Scheme::Clinical3, cfg).params == a.params);
}

TEST_CASE("epoch losses trend down with a small learning rate") {
  SynthConfig sc;
  sc.num_documents = 10;
  sc.seed = 9;
  const auto rules = default_rule_set(Scheme::Clinical3);
  const auto data = prepare_training_set(synth_generate(sc), rules, 9);
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.epochs = 12;
  const auto losses = train(data, rules, Scheme::Clinical3, cfg).epoch_losses;
  int decreases = 0;
  for (std::size_t e = 1; e < losses.size(); ++e) decreases += losses[e] <= losses[e - 1];
  CHECK(decreases >= int(losses.size()) - 2);
  CHECK(losses.back() < losses.front());
}

TEST_CASE("training errors") {
  const auto rules = default_rule_set(Scheme::Clinical3);
  TrainConfig cfg;
  CHECK_THROWS_AS(train({}, rules, Scheme::Clinical3, cfg), std::invalid_argument);

  std::vector<FeaturedTriplet> ragged{
      filler({Label::Before, Label::Before, Label::Before},
             {FeatureVector(2), FeatureVector(3), FeatureVector(2)})};
  CHECK_THROWS_AS(train(ragged, rules, Scheme::Clinical3, cfg), std::invalid_argument);

  std::vector<FeaturedTriplet> huge{
      filler({Label::Before, Label::After, Label::Before},
             {FeatureVector{1e308}, FeatureVector{-1e308}, FeatureVector{1e308}})};
  cfg.optimizer = OptimizerKind::Sgd;
  cfg.learning_rate = 10.0;
  CHECK_THROWS_AS(train(huge, rules, Scheme::Clinical3, cfg), std::runtime_error);

  cfg = TrainConfig{};
  cfg.epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.lambda = -1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK(TrainConfig::defaults_for(Scheme::Clinical3).lambda == 5.0);
  CHECK(TrainConfig::defaults_for(Scheme::Dense6).lambda == 0.5);
}

TEST_CASE("features") {
  Document doc{"d",
               {{"e1", EntityKind::Event, 10, {}},
                {"e2", EntityKind::Event, 12, {}},
                {"t1", EntityKind::TimeExpression, 30, 2.0},
                {"t2", EntityKind::TimeExpression, 1, 2.0}},
               {},
               {}};
  const auto ee = featurize(doc, doc.make_pair("e1", "e2"), 0);
  REQUIRE(ee.size() == kFeatureDim);
  CHECK(ee[0] == 1.0);
  CHECK(ee[3 + 3] == 1.0);  // distance 2
  CHECK(ee[9] == 1.0);      // no timestamps
  const auto tt = featurize(doc, doc.make_pair("t1", "t2"), 0);
  CHECK(tt[2] == 1.0);
  CHECK(tt[3 + 0] == 1.0);  // distance -29
  CHECK(tt[9 + 3] == 1.0);  // equal timestamps
  const auto et = featurize(doc, doc.make_pair("e2", "t1"), 0);
  CHECK(et[1] == 1.0);
  CHECK(et[3 + 5] == 1.0);
  CHECK(std::accumulate(et.begin(), et.begin() + 15, 0.0) == 3.0);
  CHECK(featurize(doc, doc.make_pair("e1", "e2"), 0) == ee);
  CHECK(featurize(doc, doc.make_pair("e1", "e2"), 1)[15] != ee[15]);
  CHECK_THROWS_AS(featurize(doc, EntityPair{"e1", "zz"}, 0), std::invalid_argument);
}

TEST_CASE("parameter files round trip exactly") {
  Gen gen(6);
  for (Scheme scheme : {Scheme::Clinical3, Scheme::Dense6}) {
    const ClassifierParams p = random_params(gen, scheme, 7, 3.0);
    std::stringstream buf;
    save_params(buf, p);
    CHECK(load_params(buf) == p);
  }
}

TEST_CASE("parameter file errors") {
  auto load = [](const std::string& text) {
    std::istringstream in(text);
    return load_params(in);
  };
  CHECK_THROWS_AS(load(""), ParseError);
  CHECK_THROWS_AS(load("tpsl-model 2\n"), ParseError);
  CHECK_THROWS_AS(load("tpsl-model 1\nscheme weird\n"), ParseError);
  CHECK_THROWS_AS(load("tpsl-model 1\nscheme clinical3\ndim 1\nbias 0 0\n"
                       "weights Before 1\nweights After 1\nweights Overlap 1\n"),
                  ParseError);
  CHECK_THROWS_AS(load("tpsl-model 1\nscheme clinical3\ndim 1\nbias 0 0 x\n"), ParseError);
  CHECK_NOTHROW(load("tpsl-model 1\nscheme clinical3\ndim 1\nbias 0 0 0\n"
                     "weights Before 1\nweights After 1\nweights Overlap 1\n"));
}

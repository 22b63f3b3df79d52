#include "tpsl/cli.hpp"

#include <charconv>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "tpsl/data.hpp"
#include "tpsl/error.hpp"
#include "tpsl/inference.hpp"
#include "tpsl/metrics.hpp"
#include "tpsl/model.hpp"
#include "tpsl/pipeline.hpp"
#include "tpsl/rules.hpp"

namespace tpsl::cli {
namespace {

constexpr std::uint64_t kSimulatorSeedSalt = 0x9e3779b97f4a7c15ULL;

Corpus read_corpus(const std::string& path, std::istream& in) {
  if (path == "-") return load_corpus(in, "<stdin>");
  return load_corpus(path);
}

template <class Fn>
void with_output(const std::string& path, std::ostream& out, Fn&& fn) {
  if (path == "-") {
    fn(out);
    return;
  }
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot open " + path + " for writing");
  fn(static_cast<std::ostream&>(file));
  if (!file) throw std::runtime_error("write to " + path + " failed");
}

std::vector<double> parse_reals(const std::string& text, const std::string& what) {
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(',', start), text.size());
    std::string item = text.substr(start, end - start);
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    item = first == std::string::npos ? "" : item.substr(first, last - first + 1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), value);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
      throw std::invalid_argument(fmt::format("{}: '{}' is not a number", what, item));
    }
    values.push_back(value);
    start = end + 1;
  }
  return values;
}

std::vector<PslRule> load_rule_file(const std::string& path, Scheme scheme) {
  if (path.empty()) return default_rule_set(scheme);
  std::ifstream file(path);
  if (!file) throw std::runtime_error("cannot open rules file " + path);
  std::stringstream text;
  text << file.rdbuf();
  return parse_rules(text.str());
}

void check_single_stdin(std::initializer_list<std::string> paths) {
  int stdin_users = 0;
  for (const std::string& p : paths) stdin_users += p == "-";
  if (stdin_users > 1) throw std::invalid_argument("only one input may come from stdin");
}

// --- synth -------------------------------------------------------------------

struct SynthOptions {
  SynthConfig config;
  std::string scheme = "clinical3";
  bool predictions = false;
  SimulatorConfig simulator;
  std::string out = "-";
};

void add_synth(CLI::App& app, SynthOptions& o) {
  app.add_option("--documents", o.config.num_documents, "Number of documents")
      ->capture_default_str();
  app.add_option("--min-entities", o.config.min_entities)->capture_default_str();
  app.add_option("--max-entities", o.config.max_entities)->capture_default_str();
  app.add_option("--time-fraction", o.config.time_expression_fraction,
                 "Share of entities that are time expressions")
      ->capture_default_str();
  app.add_option("--density", o.config.annotation_density,
                 "Annotated pairs over possible pairs (T-T pairs always annotated)")
      ->capture_default_str();
  app.add_option("--cells-per-entity", o.config.cells_per_entity,
                 "Latent time cells per entity")
      ->capture_default_str();
  app.add_option("--seed", o.config.seed)->capture_default_str();
  app.add_option("--scheme", o.scheme)
      ->check(CLI::IsMember({"clinical3", "dense6"}))
      ->capture_default_str();
  app.add_flag("--predictions", o.predictions,
               "Attach simulated classifier probabilities to every gold pair");
  app.add_option("--noise-temperature", o.simulator.noise_temperature)
      ->capture_default_str();
  app.add_option("--tt-noise-scale", o.simulator.time_time_noise_scale,
                 "Noise multiplier for time-time pairs")
      ->capture_default_str();
  app.add_option("--sharpness", o.simulator.sharpness)->capture_default_str();
  app.add_option("-o,--out", o.out, "Output corpus")->capture_default_str();
}

int run_synth(SynthOptions& o, std::ostream& out) {
  o.config.noise_temperature = o.simulator.noise_temperature;
  Corpus corpus{*parse_scheme(o.scheme), synth_generate(o.config)};
  if (corpus.scheme == Scheme::Dense6) corpus.documents = to_dense_labels(corpus.documents);
  if (o.predictions) {
    o.simulator.seed = o.config.seed ^ kSimulatorSeedSalt;
    const auto preds = simulate_classifier(corpus.documents, corpus.scheme, o.simulator);
    corpus.documents = attach_predictions(corpus.documents, preds);
  }
  with_output(o.out, out, [&](std::ostream& s) { save_corpus(s, corpus); });
  return kOk;
}

// --- train -------------------------------------------------------------------

struct TrainOptions {
  std::string corpus = "-";
  std::string scheme;
  std::string model;
  std::string log = "-";
  std::string rules;
  std::optional<double> lambda;
  double learning_rate = 1e-2;
  int epochs = 10;
  int batch_size = 8;
  std::uint64_t seed = 0;
  std::string optimizer = "adam";
  std::string gate = "predicted";
  std::string sweep;
  std::string heldout;
};

void add_train(CLI::App& app, TrainOptions& o) {
  app.add_option("--corpus", o.corpus, "Gold training corpus")->capture_default_str();
  app.add_option("--scheme", o.scheme, "Expected scheme of the corpus")
      ->check(CLI::IsMember({"clinical3", "dense6"}));
  app.add_option("-o,--out", o.model, "Model file to write");
  app.add_option("--log", o.log, "Per-epoch loss log")->capture_default_str();
  app.add_option("--rules", o.rules, "Rule file (default: built-in rules of the scheme)");
  app.add_option("--lambda", o.lambda,
                 "PSL weight (default 5 for clinical3, 0.5 for dense6)");
  app.add_option("--lr", o.learning_rate, "Learning rate")->capture_default_str();
  app.add_option("--epochs", o.epochs)->capture_default_str();
  app.add_option("--batch-size", o.batch_size, "Triplet instances per batch")
      ->capture_default_str();
  app.add_option("--seed", o.seed, "Shuffle and feature-noise seed")->capture_default_str();
  app.add_option("--optimizer", o.optimizer)
      ->check(CLI::IsMember({"adam", "sgd"}))
      ->capture_default_str();
  app.add_option("--gate", o.gate, "Labels matched against rule bodies")
      ->check(CLI::IsMember({"predicted", "gold"}))
      ->capture_default_str();
  app.add_option("--sweep", o.sweep,
                 "Comma-separated lambda values; prints one held-out report per value");
  app.add_option("--heldout", o.heldout, "Held-out gold corpus for --sweep");
}

int run_train(const TrainOptions& o, std::istream& in, std::ostream& out) {
  const Corpus corpus = read_corpus(o.corpus, in);
  if (!o.scheme.empty() && *parse_scheme(o.scheme) != corpus.scheme) {
    throw std::invalid_argument("corpus scheme is " + std::string(to_string(corpus.scheme)));
  }
  TrainConfig config = TrainConfig::defaults_for(corpus.scheme);
  if (o.lambda) config.lambda = *o.lambda;
  config.learning_rate = o.learning_rate;
  config.epochs = o.epochs;
  config.batch_size = o.batch_size;
  config.seed = o.seed;
  config.optimizer = o.optimizer == "sgd" ? OptimizerKind::Sgd : OptimizerKind::Adam;
  config.gate = o.gate == "gold" ? GroundingGate::Gold : GroundingGate::Predicted;
  config.validate();

  const std::vector<PslRule> rules = load_rule_file(o.rules, corpus.scheme);
  const std::vector<FeaturedTriplet> dataset =
      prepare_training_set(corpus.documents, rules, config.seed);

  if (!o.sweep.empty()) {
    if (o.heldout.empty()) throw std::invalid_argument("--sweep needs --heldout");
    check_single_stdin({o.corpus, o.heldout});
    const Corpus heldout = read_corpus(o.heldout, in);
    if (heldout.scheme != corpus.scheme) {
      throw std::invalid_argument("held-out corpus uses a different scheme");
    }
    const std::vector<double> lambdas = parse_reals(o.sweep, "--sweep");
    with_output(o.log, out, [&](std::ostream& s) {
      for (double lambda : lambdas) {
        config.lambda = lambda;
        config.validate();
        const TrainResult result = train(dataset, rules, corpus.scheme, config);
        const HeldoutEval eval =
            evaluate_classifier(result.params, heldout.documents, rules, config.seed);
        nlohmann::ordered_json line = {
            {"lambda", lambda},
            {"final_loss", result.epoch_losses.back()},
            {"heldout_micro_f1", eval.micro_f1},
            {"heldout_mean_distance", eval.mean_distance},
            {"grounded_triplets", eval.grounded_triplets},
        };
        s << line.dump() << '\n';
      }
    });
    return kOk;
  }

  const TrainResult result = train(dataset, rules, corpus.scheme, config);
  with_output(o.log, out, [&](std::ostream& s) {
    for (std::size_t e = 0; e < result.epoch_losses.size(); ++e) {
      s << fmt::format("epoch {} loss {}\n", e + 1, result.epoch_losses[e]);
    }
  });
  if (!o.model.empty()) {
    with_output(o.model, out, [&](std::ostream& s) { save_params(s, result.params); });
  }
  return kOk;
}

// --- infer -------------------------------------------------------------------

struct InferOptions {
  std::string corpus = "-";
  std::string model;
  std::string strategy = "confidence-time-anchor";
  std::uint64_t seed = 0;
  std::uint64_t feature_seed = 0;
  std::string out = "-";
  std::string drop_log;
};

void add_infer(CLI::App& app, InferOptions& o) {
  app.add_option("--corpus", o.corpus,
                 "Documents; their prob lines are used unless --model is given")
      ->capture_default_str();
  app.add_option("--model", o.model, "Model that predicts every annotated pair");
  app.add_option("--strategy", o.strategy, "Ranking for check-and-add, or none")
      ->check(CLI::IsMember({"random", "confidence", "confidence-time-anchor", "none"}))
      ->capture_default_str();
  app.add_option("--seed", o.seed, "Seed of the random ranking")->capture_default_str();
  app.add_option("--feature-seed", o.feature_seed, "Feature-noise seed for --model")
      ->capture_default_str();
  app.add_option("-o,--out", o.out, "Output corpus with final labels")
      ->capture_default_str();
  app.add_option("--drop-log", o.drop_log, "Tab-separated log of dropped predictions");
}

int run_infer(const InferOptions& o, std::istream& in, std::ostream& out) {
  Corpus corpus = read_corpus(o.corpus, in);
  if (!o.model.empty()) {
    const ClassifierParams params = load_params(o.model);
    if (params.scheme != corpus.scheme) {
      throw std::invalid_argument("model and corpus use different schemes");
    }
    corpus.documents = predict_documents(params, corpus.documents, o.feature_seed);
  }

  std::vector<DropRecord> drops;
  if (o.strategy == "none") {
    for (Document& doc : corpus.documents) {
      doc.relations.clear();
      for (const Prediction& p : doc.predictions) {
        doc.relations.push_back({p.pair.source, p.pair.target, p.predicted});
      }
    }
  } else {
    if (corpus.scheme != Scheme::Clinical3) {
      throw std::invalid_argument(
          "global inference supports clinical3 only; use --strategy none");
    }
    const RankingStrategy strategy = *parse_strategy(o.strategy, o.seed);
    const std::vector<InferenceOutcome> outcomes =
        infer_documents(corpus.documents, strategy);
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      Document& doc = corpus.documents[i];
      const RelationSet final_labels = resolve_labels(outcomes[i], doc.predictions);
      doc.relations.clear();
      for (const Prediction& p : doc.predictions) {
        doc.relations.push_back(
            {p.pair.source, p.pair.target, *final_labels.find(p.pair.source, p.pair.target)});
      }
      drops.insert(drops.end(), outcomes[i].drop_log.begin(), outcomes[i].drop_log.end());
    }
  }

  with_output(o.out, out, [&](std::ostream& s) { save_corpus(s, corpus); });
  if (!o.drop_log.empty()) {
    with_output(o.drop_log, out, [&](std::ostream& s) {
      s << "document\tsource\ttarget\tlabel\tconfidence\tgraph\n";
      write_drop_log(s, drops);
    });
  }
  return kOk;
}

// --- eval --------------------------------------------------------------------

struct EvalOptions {
  std::string gold;
  std::string predictions = "-";
  std::string metric = "tempeval";
  std::string pairs = "all";
  std::string format = "table";
  std::string json_out;
  std::string name = "model";
};

void add_eval(CLI::App& app, EvalOptions& o) {
  app.add_option("--gold", o.gold, "Gold corpus")->required();
  app.add_option("--predictions", o.predictions,
                 "Predicted corpus; relation lines, else prob argmaxes")
      ->capture_default_str();
  app.add_option("--metric", o.metric)
      ->check(CLI::IsMember({"tempeval", "micro"}))
      ->capture_default_str();
  app.add_option("--pairs", o.pairs, "Pairs that are scored")
      ->check(CLI::IsMember({"all", "event-event"}))
      ->capture_default_str();
  app.add_option("--format", o.format)
      ->check(CLI::IsMember({"table", "json"}))
      ->capture_default_str();
  app.add_option("--json-out", o.json_out, "Also write the JSON report here");
  app.add_option("--name", o.name, "Row label in the table")->capture_default_str();
}

RelationSet restrict(const RelationSet& set, const PairFilter& filter) {
  if (!filter) return set;
  RelationSet out(set.document_id());
  for (const auto& [pair, label] : set.items()) {
    if (filter(set.document_id(), pair.first, pair.second)) {
      out.insert(pair.first, pair.second, label);
    }
  }
  return out;
}

int run_eval(const EvalOptions& o, std::istream& in, std::ostream& out) {
  check_single_stdin({o.gold, o.predictions});
  const Corpus gold = read_corpus(o.gold, in);
  const Corpus predicted = read_corpus(o.predictions, in);
  if (gold.scheme != predicted.scheme) {
    throw std::invalid_argument("gold and predictions use different schemes");
  }
  if (o.metric == "tempeval" && gold.scheme != Scheme::Clinical3) {
    throw std::invalid_argument("closure scoring supports clinical3 only; use --metric micro");
  }
  const PairFilter filter =
      o.pairs == "event-event" ? event_event_filter(gold.documents) : PairFilter{};

  std::vector<RelationSet> gold_sets, pred_sets;
  for (const Document& doc : gold.documents) {
    gold_sets.push_back(restrict(RelationSet::from_document(doc), filter));
  }
  for (const Document& doc : predicted.documents) {
    RelationSet set = doc.relations.empty() ? std::move(argmax_relations({&doc, 1}).front())
                                            : RelationSet::from_document(doc);
    pred_sets.push_back(restrict(set, filter));
  }

  const EvalReport report = o.metric == "micro" ? micro_f1(pred_sets, gold_sets)
                                                : tempeval_scores(pred_sets, gold_sets);
  const std::string json = report_to_json(report);
  if (o.format == "json") {
    out << json << '\n';
  } else {
    out << report_to_table(report, o.name);
  }
  if (!o.json_out.empty()) {
    with_output(o.json_out, out, [&](std::ostream& s) { s << json << '\n'; });
  }
  return kOk;
}

// --- closure -----------------------------------------------------------------

struct ClosureOptions {
  std::string corpus = "-";
  std::string out = "-";
};

void add_closure(CLI::App& app, ClosureOptions& o) {
  app.add_option("--corpus", o.corpus)->capture_default_str();
  app.add_option("-o,--out", o.out)->capture_default_str();
}

int run_closure(const ClosureOptions& o, std::istream& in, std::ostream& out,
                std::ostream& err) {
  const Corpus corpus = read_corpus(o.corpus, in);
  if (corpus.scheme != Scheme::Clinical3) {
    throw std::invalid_argument("closure supports clinical3 only");
  }
  Corpus result{corpus.scheme, {}};
  std::size_t contradictions = 0;
  for (const Document& doc : corpus.documents) {
    const ClosureResult closure = temporal_closure(RelationSet::from_document(doc));
    Document closed{doc.id, doc.entities, {}, {}};
    for (const auto& [pair, label] : closure.closure.items()) {
      closed.relations.push_back({pair.first, pair.second, label});
    }
    for (const auto& [s, t] : closure.contradictions) {
      err << fmt::format("contradiction {} {} {}\n", doc.id, s, t);
    }
    contradictions += closure.contradictions.size();
    result.documents.push_back(std::move(closed));
  }
  with_output(o.out, out, [&](std::ostream& s) { save_corpus(s, result); });
  return contradictions == 0 ? kOk : kDataError;
}

// --- psl-loss ----------------------------------------------------------------

struct PslOptions {
  std::string scheme = "clinical3";
  std::string p1, p2, p3;
  std::string labels;
  std::string rules;
};

void add_psl(CLI::App& app, PslOptions& o) {
  app.add_option("--scheme", o.scheme)
      ->check(CLI::IsMember({"clinical3", "dense6"}))
      ->capture_default_str();
  app.add_option("--p1", o.p1, "Probabilities of pair (A,B), comma-separated")->required();
  app.add_option("--p2", o.p2, "Probabilities of pair (B,C)")->required();
  app.add_option("--p3", o.p3, "Probabilities of pair (A,C)")->required();
  app.add_option("--labels", o.labels,
                 "Three comma-separated labels (default: argmax of each pair)");
  app.add_option("--rules", o.rules, "Rule file (default: built-in rules of the scheme)");
}

int run_psl(const PslOptions& o, std::ostream& out) {
  const Scheme scheme = *parse_scheme(o.scheme);
  const std::array<std::vector<double>, 3> probs = {
      parse_reals(o.p1, "--p1"), parse_reals(o.p2, "--p2"), parse_reals(o.p3, "--p3")};
  for (const auto& p : probs) {
    if (p.size() != label_count(scheme)) {
      throw std::invalid_argument(fmt::format("expected {} probabilities per pair for {}",
                                              label_count(scheme), to_string(scheme)));
    }
  }
  LabelTriple labels{};
  if (o.labels.empty()) {
    for (std::size_t i = 0; i < 3; ++i) labels[i] = label_at(scheme, argmax(probs[i]));
  } else {
    std::vector<std::string> names;
    std::stringstream ss(o.labels);
    for (std::string item; std::getline(ss, item, ',');) names.push_back(item);
    if (names.size() != 3) throw std::invalid_argument("--labels needs three labels");
    for (std::size_t i = 0; i < 3; ++i) {
      const auto label = parse_label(names[i]);
      if (!label) throw std::invalid_argument("unknown label '" + names[i] + "'");
      labels[i] = *label;
    }
  }
  const std::vector<PslRule> rules = load_rule_file(o.rules, scheme);
  const DistanceResult result =
      distance_subgradient(scheme, {probs[0], probs[1], probs[2]}, labels, rules);
  out << fmt::format("distance {}\n", result.distance);
  out << fmt::format("rule {}\n",
                     result.matched_rule ? rules[*result.matched_rule].name : "none");
  for (std::size_t i = 0; i < 3; ++i) {
    out << fmt::format("grad{} {}\n", i + 1, fmt::join(result.subgradient[i], " "));
  }
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::istream& in, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Temporal relation extraction with PSL regularization and global inference",
               "tpsl"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "tpsl 1.0.0");

  SynthOptions synth;
  TrainOptions train_opts;
  InferOptions infer;
  EvalOptions eval;
  ClosureOptions closure;
  PslOptions psl;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic gold corpus");
  CLI::App* train_cmd = app.add_subcommand("train", "Train the pair classifier");
  CLI::App* infer_cmd = app.add_subcommand("infer", "Predict and apply global inference");
  CLI::App* eval_cmd = app.add_subcommand("eval", "Score predictions against gold");
  CLI::App* closure_cmd = app.add_subcommand("closure", "Temporal closure of gold relations");
  CLI::App* psl_cmd = app.add_subcommand("psl-loss", "Distance to satisfaction of a triplet");
  add_synth(*synth_cmd, synth);
  add_train(*train_cmd, train_opts);
  add_infer(*infer_cmd, infer);
  add_eval(*eval_cmd, eval);
  add_closure(*closure_cmd, closure);
  add_psl(*psl_cmd, psl);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsageError;
  }

  try {
    if (synth_cmd->parsed()) return run_synth(synth, out);
    if (train_cmd->parsed()) return run_train(train_opts, in, out);
    if (infer_cmd->parsed()) return run_infer(infer, in, out);
    if (eval_cmd->parsed()) return run_eval(eval, in, out);
    if (closure_cmd->parsed()) return run_closure(closure, in, out, err);
    if (psl_cmd->parsed()) return run_psl(psl, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsageError;
}

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err) {
  std::vector<const char*> argv{"tpsl"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), in, out, err);
}

}  // namespace tpsl::cli

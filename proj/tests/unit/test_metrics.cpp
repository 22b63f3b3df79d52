#include <doctest.h>

#include <json.hpp>

#include "support/support.hpp"
#include "tpsl/metrics.hpp"

using namespace tpsl;
using tpsl::testing::Gen;

namespace {

RelationSet make(std::initializer_list<std::tuple<const char*, const char*, Label>> items,
                 std::string id = "doc") {
  RelationSet s(std::move(id));
  for (const auto& [a, b, l] : items) s.insert(a, b, l);
  return s;
}

std::map<OrderedPair, std::set<Label>> as_multimap(const RelationSet& s) {
  std::map<OrderedPair, std::set<Label>> out;
  for (const auto& [pair, label] : s.items()) out[pair].insert(label);
  return out;
}

bool subset(const RelationSet& a, const RelationSet& b) {
  for (const auto& [pair, label] : a.items()) {
    if (!b.contains(pair.first, pair.second, label)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("relation sets") {
  RelationSet s("d");
  CHECK(s.insert("a", "b", Label::Before));
  CHECK(s.insert("a", "b", Label::Before));
  CHECK_FALSE(s.insert("a", "b", Label::After));
  CHECK(s.insert("b", "a", Label::After));
  CHECK(s.size() == 2);
  CHECK(s.find("a", "b") == Label::Before);
  CHECK_FALSE(s.find("a", "c"));

  Document doc{"d", {{"a"}, {"b"}}, {{"a", "b", Label::Before}, {"a", "b", Label::Overlap}}, {}};
  CHECK_THROWS_AS(RelationSet::from_document(doc), std::invalid_argument);
}

TEST_CASE("closure examples") {
  const auto c = temporal_closure(make({{"a", "b", Label::Before}, {"b", "c", Label::Before}}));
  CHECK(c.consistent());
  CHECK(c.closure == make({{"a", "b", Label::Before},
                           {"b", "c", Label::Before},
                           {"a", "c", Label::Before},
                           {"b", "a", Label::After},
                           {"c", "b", Label::After},
                           {"c", "a", Label::After}}));
  CHECK(temporal_closure(RelationSet("x")).closure.empty());

  const auto bad = temporal_closure(make({{"a", "b", Label::Before},
                                          {"b", "c", Label::Before},
                                          {"c", "a", Label::Before}}));
  CHECK_FALSE(bad.consistent());
}

TEST_CASE("closure equals the naive fixed point, is idempotent and monotone") {
  Gen gen(41);
  for (int trial = 0; trial < 400; ++trial) {
    const int n = gen.integer(2, 12);
    const RelationSet s = tpsl::testing::random_consistent_set(gen, n, gen.integer(1, 5), 0.3);
    const ClosureResult c = temporal_closure(s);
    CHECK(c.consistent());
    CHECK(as_multimap(c.closure) == tpsl::testing::naive_closure(s));
    CHECK(temporal_closure(c.closure).closure == c.closure);

    RelationSet smaller(s.document_id());
    for (const auto& [pair, label] : s.items()) {
      if (gen.coin()) smaller.insert(pair.first, pair.second, label);
    }
    CHECK(subset(temporal_closure(smaller).closure, c.closure));
  }
}

TEST_CASE("contradictions are reported, not propagated") {
  Gen gen(43);
  for (int trial = 0; trial < 200; ++trial) {
    RelationSet s = tpsl::testing::random_consistent_set(gen, gen.integer(3, 8), 3, 0.4);
    const int a = gen.integer(0, 7), b = gen.integer(0, 7);
    if (a != b) s.insert(tpsl::testing::node(a), tpsl::testing::node(b), label_at(Scheme::Clinical3, std::size_t(gen.integer(0, 2))));
    bool naive_bad = false;
    for (const auto& [pair, labels] : tpsl::testing::naive_closure(s)) naive_bad |= labels.size() > 1;
    CHECK(temporal_closure(s).consistent() == !naive_bad);
  }
}

TEST_CASE("tempeval examples") {
  const auto gold = make({{"a", "b", Label::Before}, {"b", "c", Label::Before}});
  const auto pred = make({{"a", "b", Label::Before}, {"b", "c", Label::Before}, {"a", "c", Label::Before}});
  const EvalReport r = tempeval_scores(std::vector{pred}, std::vector{gold});
  CHECK(r.overall.precision == 1.0);
  CHECK(r.overall.recall == 1.0);
  CHECK(r.counts.predicted_total == 3);

  const EvalReport flipped = tempeval_scores(std::vector{make({{"b", "a", Label::After}})},
                                             std::vector{make({{"a", "b", Label::Before}})});
  CHECK(flipped.overall.f1 == 1.0);

  const EvalReport wrong = tempeval_scores(std::vector{make({{"a", "b", Label::After}})},
                                           std::vector{make({{"a", "b", Label::Before}})});
  CHECK(wrong.overall.precision == 0.0);
  CHECK(wrong.overall.recall == 0.0);
  CHECK(wrong.overall.f1 == 0.0);

  // Documents are matched by id.
  const EvalReport missing = tempeval_scores(std::vector{make({{"a", "b", Label::Before}}, "d1")},
                                             std::vector{make({{"a", "b", Label::Before}}, "d2")});
  CHECK(missing.counts.predicted_total == 1);
  CHECK(missing.counts.gold_total == 1);
  CHECK(missing.overall.f1 == 0.0);
}

TEST_CASE("tempeval properties") {
  Gen gen(51);
  for (int trial = 0; trial < 200; ++trial) {
    const RelationSet gold = tpsl::testing::random_consistent_set(gen, gen.integer(2, 10), 4, 0.4);
    if (gold.empty()) continue;
    const EvalReport self = tempeval_scores(std::vector{gold}, std::vector{gold});
    CHECK(self.overall.precision == 1.0);
    CHECK(self.overall.recall == 1.0);
    CHECK(self.overall.f1 == 1.0);

    // Noisy predictions, then one extra closure-derivable prediction.
    RelationSet pred(gold.document_id());
    for (const auto& [pair, label] : gold.items()) {
      pred.insert(pair.first, pair.second,
                  gen.coin(0.7) ? label : label_at(Scheme::Clinical3, std::size_t(gen.integer(0, 2))));
    }
    const double before = tempeval_scores(std::vector{pred}, std::vector{gold}).overall.precision;
    const auto gold_closure = temporal_closure(gold).closure;
    for (const auto& [pair, label] : gold_closure.items()) {
      if (pred.find(pair.first, pair.second)) continue;
      RelationSet more = pred;
      more.insert(pair.first, pair.second, label);
      CHECK(tempeval_scores(std::vector{more}, std::vector{gold}).overall.precision >= before);
      break;
    }
  }
}

TEST_CASE("micro scores") {
  const auto gold = make({{"a", "b", Label::Before}, {"b", "c", Label::After}, {"a", "c", Label::Overlap}});
  const auto pred = make({{"a", "b", Label::Before}, {"b", "c", Label::After}, {"a", "c", Label::Before}});
  const EvalReport r = micro_f1(std::vector{pred}, std::vector{gold});
  CHECK(r.overall.precision == doctest::Approx(2.0 / 3.0));
  CHECK(r.overall.recall == r.overall.precision);
  CHECK(r.overall.f1 == r.overall.precision);
  CHECK(micro_f1(std::vector{gold}, std::vector{gold}).overall.f1 == 1.0);

  const auto partial = make({{"a", "b", Label::Before}});
  CHECK_THROWS_AS(micro_f1(std::vector{partial}, std::vector{gold}), std::invalid_argument);

  const PairFilter only_ab = [](const std::string&, const std::string& s, const std::string& t) {
    return s == "a" && t == "b";
  };
  CHECK(micro_f1(std::vector{partial}, std::vector{gold}, only_ab).overall.f1 == 1.0);
}

TEST_CASE("micro precision equals recall equals F1 under full coverage") {
  Gen gen(53);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<RelationSet> gold, pred;
    const int docs = gen.integer(1, 4);
    for (int d = 0; d < docs; ++d) {
      RelationSet g("d" + std::to_string(d)), p("d" + std::to_string(d));
      const int n = gen.integer(2, 8);
      for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
          if (!gen.coin(0.5)) continue;
          const auto pick = [&] { return label_at(Scheme::Dense6, std::size_t(gen.integer(0, 5))); };
          g.insert(tpsl::testing::node(a), tpsl::testing::node(b), pick());
          p.insert(tpsl::testing::node(a), tpsl::testing::node(b), pick());
        }
      }
      gold.push_back(g);
      pred.push_back(p);
    }
    const EvalReport r = micro_f1(pred, gold);
    CHECK(r.overall.precision == r.overall.recall);
    CHECK(r.overall.f1 == r.overall.precision);
  }
}

TEST_CASE("f1 and reports") {
  CHECK(f1_score(0.0, 0.0) == 0.0);
  CHECK(f1_score(1.0, 0.5) == doctest::Approx(2.0 / 3.0));

  const auto gold = make({{"a", "b", Label::Before}, {"b", "c", Label::Overlap}});
  const EvalReport r = tempeval_scores(std::vector{gold}, std::vector{gold});
  const auto json = nlohmann::json::parse(report_to_json(r));
  CHECK(json["metric"] == "tempeval");
  CHECK(json["overall"]["f1"] == 1.0);
  CHECK(json["per_label"].contains("Before"));
  CHECK(json["per_document"].size() == 1);
  const std::string table = report_to_table(r, "mine");
  CHECK(table.find("mine") != std::string::npos);
  CHECK(table.find("100.00") != std::string::npos);
}

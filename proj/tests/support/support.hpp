#pragma once

// Generators and independent oracles shared by the unit and acceptance
// suites. The oracles deliberately avoid the library's rule tables.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "tpsl/labels.hpp"
#include "tpsl/metrics.hpp"
#include "tpsl/types.hpp"

namespace tpsl::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  int integer(int lo, int hi) {  // inclusive
    return std::uniform_int_distribution<int>(lo, hi)(rng_);
  }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
  bool coin(double p = 0.5) { return uniform() < p; }

  // Point on the probability simplex via normalized exponentials.
  std::vector<double> simplex(std::size_t n) {
    std::vector<double> v(n);
    double sum = 0.0;
    for (double& x : v) sum += (x = -std::log(1.0 - uniform()));
    for (double& x : v) x /= sum;
    return v;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

inline std::string node(int i) { return "n" + std::to_string(i); }

// Relations among `nodes` entities placed on `cells` time cells; labels are
// read off the cell order, so the set is always consistent.
inline RelationSet random_consistent_set(Gen& gen, int nodes, int cells, double density) {
  std::vector<int> cell(nodes);
  for (int& c : cell) c = gen.integer(0, cells - 1);
  RelationSet set("doc");
  for (int a = 0; a < nodes; ++a) {
    for (int b = 0; b < nodes; ++b) {
      if (a == b || !gen.coin(density)) continue;
      if (set.find(node(b), node(a))) continue;
      const Label l = cell[a] < cell[b]   ? Label::Before
                      : cell[a] > cell[b] ? Label::After
                                          : Label::Overlap;
      set.insert(node(a), node(b), l);
    }
  }
  return set;
}

// Brute-force fixed point over ordered triples. Each pair keeps every label
// derivable for it, so contradictions show up as pairs with two labels.
inline std::map<std::pair<std::string, std::string>, std::set<Label>> naive_closure(
    const RelationSet& set) {
  auto compose = [](Label x, Label y) -> std::optional<Label> {
    if (x == Label::Overlap) return y;
    if (y == Label::Overlap) return x;
    if (x == y) return x;
    return std::nullopt;
  };
  auto inverse = [](Label x) {
    return x == Label::Before ? Label::After : x == Label::After ? Label::Before : x;
  };

  std::set<std::string> nodes;
  std::map<std::pair<std::string, std::string>, std::set<Label>> rel;
  for (const auto& [pair, label] : set.items()) {
    nodes.insert(pair.first);
    nodes.insert(pair.second);
    rel[pair].insert(label);
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& [pair, labels] : std::map(rel)) {
      for (Label l : labels) {
        changed |= rel[{pair.second, pair.first}].insert(inverse(l)).second;
      }
    }
    for (const std::string& a : nodes) {
      for (const std::string& b : nodes) {
        for (const std::string& c : nodes) {
          if (a == b || b == c || a == c) continue;
          const auto ab = rel.find({a, b});
          const auto bc = rel.find({b, c});
          if (ab == rel.end() || bc == rel.end()) continue;
          for (Label x : std::set(ab->second)) {
            for (Label y : std::set(bc->second)) {
              if (auto z = compose(x, y)) changed |= rel[{a, c}].insert(*z).second;
            }
          }
        }
      }
    }
  }
  return rel;
}

// The seven transitivity rules as plain label triples (body1, body2, head),
// Overlap standing for the scheme's equality label.
inline std::vector<std::array<Label, 3>> transitivity_table(Label equal) {
  const Label B = Label::Before, A = Label::After, O = equal;
  return {{B, B, B}, {B, O, B}, {O, B, B}, {O, O, O}, {A, A, A}, {A, O, A}, {O, A, A}};
}

// Direct evaluation of min over matching rules of
// max(max(P1 + P2 - 1, 0) - P3(head), 0); 0 when nothing matches.
inline double oracle_distance(Scheme scheme, const std::array<std::vector<double>, 3>& p,
                              const std::array<Label, 3>& labels) {
  const Label equal = scheme == Scheme::Clinical3 ? Label::Overlap : Label::Simultaneous;
  const auto order = tpsl::labels(scheme);
  auto prob = [&](int slot, Label l) {
    for (std::size_t k = 0; k < order.size(); ++k) {
      if (order[k] == l) return p[slot][k];
    }
    return 0.0;
  };
  double best = -1.0;
  for (const auto& r : transitivity_table(equal)) {
    if (r[0] != labels[0] || r[1] != labels[1]) continue;
    const double body = std::max(prob(0, r[0]) + prob(1, r[1]) - 1.0, 0.0);
    const double d = std::max(body - prob(2, r[2]), 0.0);
    if (best < 0.0 || d < best) best = d;
  }
  return best < 0.0 ? 0.0 : best;
}

}  // namespace tpsl::testing

#include "tpsl/rules.hpp"

#include <algorithm>
#include <map>
#include <regex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <fmt/format.h>

namespace tpsl {
namespace {

char abbreviation(Label label) {
  switch (label) {
    case Label::Before: return 'B';
    case Label::After: return 'A';
    case Label::Overlap: return 'O';
    case Label::Includes: return 'I';
    case Label::IsIncluded: return 'N';
    case Label::Simultaneous: return 'S';
    case Label::Vague: return 'V';
  }
  return '?';
}

char term_char(Term t) { return "ABC"[static_cast<int>(t)]; }

std::string rule_name(const std::vector<Atom>& body, const Atom& head) {
  std::string name;
  for (const Atom& a : body) name += abbreviation(a.label);
  name += abbreviation(head.label);
  return name;
}

PslRule transitivity(Label l1, Label l2, Label l3) {
  PslRule r;
  r.kind = RuleKind::Transitivity;
  r.body = {Atom{l1, Term::A, Term::B}, Atom{l2, Term::B, Term::C}};
  r.head = Atom{l3, Term::A, Term::C};
  r.name = rule_name(r.body, r.head);
  return r;
}

PslRule symmetry(Label l1, Label l2) {
  PslRule r;
  r.kind = RuleKind::Symmetry;
  r.body = {Atom{l1, Term::A, Term::B}};
  r.head = Atom{l2, Term::B, Term::A};
  r.name = rule_name(r.body, r.head);
  return r;
}

std::string trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto begin = s.find_first_not_of(ws);
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(ws);
  return std::string(s.substr(begin, end - begin + 1));
}

Atom parse_atom(const std::string& text) {
  static const std::regex kAtom(R"(^\s*([A-Za-z_]+)\s*\(\s*([ABC])\s*,\s*([ABC])\s*\)\s*$)");
  std::smatch m;
  if (!std::regex_match(text, m, kAtom)) {
    throw std::invalid_argument("malformed atom: '" + trim(text) + "'");
  }
  auto label = parse_label(m[1].str());
  if (!label) throw std::invalid_argument("unknown label: " + m[1].str());
  auto term = [](const std::string& t) {
    return static_cast<Term>(t[0] - 'A');
  };
  return Atom{*label, term(m[2].str()), term(m[3].str())};
}

std::size_t checked_size(Scheme scheme, const ProbTriple& probs) {
  const std::size_t n = label_count(scheme);
  for (std::size_t i = 0; i < 3; ++i) {
    if (probs[i].size() != n) {
      throw std::invalid_argument(fmt::format(
          "probability vector {} has {} entries, scheme {} needs {}", i + 1,
          probs[i].size(), to_string(scheme), n));
    }
  }
  return n;
}

struct Grounding {
  double distance = 0.0;
  std::optional<std::size_t> rule;
  bool inner_active = false;
  bool outer_active = false;
  std::size_t head_index = 0;
};

Grounding ground(Scheme scheme, const ProbTriple& probs,
                 const LabelTriple& labels, std::span<const PslRule> rules) {
  checked_size(scheme, probs);
  const auto i1 = label_index(scheme, labels[0]);
  const auto i2 = label_index(scheme, labels[1]);
  Grounding best;
  best.distance = 1.0;
  if (!i1 || !i2) {
    best.distance = 0.0;
    return best;
  }
  const double p1 = probs[0][*i1];
  const double p2 = probs[1][*i2];
  for (std::size_t r = 0; r < rules.size(); ++r) {
    const PslRule& rule = rules[r];
    if (rule.kind != RuleKind::Transitivity || rule.body.size() != 2) continue;
    if (rule.body[0].label != labels[0] || rule.body[1].label != labels[1]) {
      continue;
    }
    const auto head = label_index(scheme, rule.head.label);
    if (!head) continue;
    const double body = std::max(p1 + p2 - 1.0, 0.0);
    const double d = std::max(body - probs[2][*head], 0.0);
    if (!best.rule || d < best.distance) {
      best.distance = d;
      best.rule = r;
      best.inner_active = p1 + p2 - 1.0 > 0.0;
      best.outer_active = body - probs[2][*head] > 0.0;
      best.head_index = *head;
    }
  }
  if (!best.rule) best.distance = 0.0;
  return best;
}

}  // namespace

std::vector<PslRule> default_rule_set(Scheme scheme) {
  Label overlap;
  switch (scheme) {
    case Scheme::Clinical3:
      overlap = Label::Overlap;
      break;
    case Scheme::Dense6:
      overlap = Label::Simultaneous;
      break;
    default:
      throw std::invalid_argument("unknown label scheme");
  }
  const Label B = Label::Before;
  const Label A = Label::After;
  const Label O = overlap;
  return {
      transitivity(B, B, B), transitivity(B, O, B), transitivity(O, B, B),
      transitivity(O, O, O), transitivity(A, A, A), transitivity(A, O, A),
      transitivity(O, A, A), symmetry(B, A),        symmetry(A, B),
      symmetry(O, O),
  };
}

std::optional<Label> transitive_head(std::span<const PslRule> rules,
                                     Label first, Label second) {
  for (const PslRule& r : rules) {
    if (r.kind == RuleKind::Transitivity && r.body.size() == 2 &&
        r.body[0].label == first && r.body[1].label == second) {
      return r.head.label;
    }
  }
  return std::nullopt;
}

std::string to_text(const PslRule& rule) {
  auto atom = [](const Atom& a) {
    return fmt::format("{}({},{})", to_string(a.label), term_char(a.first),
                       term_char(a.second));
  };
  std::string out;
  if (rule.weight) out += fmt::format("{:.17g}: ", *rule.weight);
  for (std::size_t i = 0; i < rule.body.size(); ++i) {
    if (i > 0) out += " & ";
    out += atom(rule.body[i]);
  }
  out += " -> ";
  out += atom(rule.head);
  return out;
}

PslRule parse_rule(std::string_view line) {
  std::string text(line);
  PslRule rule;

  const auto colon = text.find(':');
  if (colon != std::string::npos) {
    const std::string w = trim(std::string_view(text).substr(0, colon));
    std::size_t used = 0;
    double weight = 0.0;
    try {
      weight = std::stod(w, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != w.size() || w.empty() || weight < 0.0 || weight > 1.0) {
      throw std::invalid_argument("rule weight must be a number in [0,1]: '" +
                                  w + "'");
    }
    rule.weight = weight;
    text = text.substr(colon + 1);
  }

  const auto arrow = text.find("->");
  if (arrow == std::string::npos) {
    throw std::invalid_argument("rule is missing '->': '" + trim(line) + "'");
  }
  const std::string body_text = text.substr(0, arrow);
  rule.head = parse_atom(text.substr(arrow + 2));

  std::size_t start = 0;
  while (true) {
    const auto amp = body_text.find('&', start);
    rule.body.push_back(parse_atom(body_text.substr(start, amp - start)));
    if (amp == std::string::npos) break;
    start = amp + 1;
  }

  const auto is = [](const Atom& a, Term x, Term y) {
    return a.first == x && a.second == y;
  };
  if (rule.body.size() == 2 && is(rule.body[0], Term::A, Term::B) &&
      is(rule.body[1], Term::B, Term::C) && is(rule.head, Term::A, Term::C)) {
    rule.kind = RuleKind::Transitivity;
  } else if (rule.body.size() == 1 && is(rule.body[0], Term::A, Term::B) &&
             is(rule.head, Term::B, Term::A)) {
    rule.kind = RuleKind::Symmetry;
  } else {
    throw std::invalid_argument(
        "rule is neither a chained transitivity (A,B),(B,C)->(A,C) nor a "
        "symmetry (A,B)->(B,A) template: '" + trim(line) + "'");
  }
  rule.name = rule_name(rule.body, rule.head);
  return rule;
}

std::string rules_to_text(std::span<const PslRule> rules) {
  std::string out;
  for (const PslRule& r : rules) {
    out += to_text(r);
    out += '\n';
  }
  return out;
}

std::vector<PslRule> parse_rules(std::string_view text) {
  std::vector<PslRule> rules;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    try {
      rules.push_back(parse_rule(t));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(fmt::format("line {}: {}", line_no, e.what()));
    }
  }
  return rules;
}

bool TripletInstance::is_chain() const {
  for (const TripletSlot& s : slots) {
    if (s.placeholder) return false;
  }
  const auto& ab = slots[0].pair;
  const auto& bc = slots[1].pair;
  const auto& ac = slots[2].pair;
  return ab.target == bc.source && ab.source == ac.source &&
         bc.target == ac.target && ab.source != ab.target &&
         bc.source != bc.target && ab.source != bc.target;
}

std::vector<TripletInstance> pack_triplets(std::span<const Document> documents,
                                           std::span<const PslRule> rules) {
  std::vector<TripletInstance> out;
  for (const Document& doc : documents) {
    // Relation index by ordered pair, and outgoing relations per source in
    // document order. The first annotation of a pair wins.
    std::map<std::pair<std::string, std::string>, std::size_t> by_pair;
    std::map<std::string, std::vector<std::size_t>> by_source;
    for (std::size_t i = 0; i < doc.relations.size(); ++i) {
      const Relation& r = doc.relations[i];
      if (by_pair.emplace(std::make_pair(r.source, r.target), i).second) {
        by_source[r.source].push_back(i);
      }
    }

    std::vector<bool> covered(doc.relations.size(), false);
    auto slot = [&](std::size_t i) {
      const Relation& r = doc.relations[i];
      return TripletSlot{doc.make_pair(r.source, r.target), r.label, false};
    };

    for (std::size_t i = 0; i < doc.relations.size(); ++i) {
      const Relation& ab = doc.relations[i];
      if (by_pair.at({ab.source, ab.target}) != i) continue;
      auto next = by_source.find(ab.target);
      if (next == by_source.end()) continue;
      for (std::size_t j : next->second) {
        const Relation& bc = doc.relations[j];
        if (bc.target == ab.source || bc.target == ab.target) continue;
        auto third = by_pair.find({ab.source, bc.target});
        if (third == by_pair.end()) continue;
        if (!transitive_head(rules, ab.label, bc.label)) continue;
        const std::size_t k = third->second;
        TripletInstance inst;
        inst.document_id = doc.id;
        inst.slots = {slot(i), slot(j), slot(k)};
        inst.grounded = true;
        out.push_back(std::move(inst));
        covered[i] = covered[j] = covered[k] = true;
      }
    }

    // Leftovers go into filler instances.
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < doc.relations.size(); ++i) {
      if (!covered[i] && by_pair.at({doc.relations[i].source,
                                     doc.relations[i].target}) == i) {
        rest.push_back(i);
      }
    }
    for (std::size_t i = 0; i < rest.size(); i += 3) {
      TripletInstance inst;
      inst.document_id = doc.id;
      for (std::size_t s = 0; s < 3; ++s) {
        if (i + s < rest.size()) {
          inst.slots[s] = slot(rest[i + s]);
        } else {
          inst.slots[s].placeholder = true;
        }
      }
      out.push_back(std::move(inst));
    }
  }
  return out;
}

std::vector<Document> augment_symmetry(std::span<const Document> documents) {
  std::vector<Document> out(documents.begin(), documents.end());
  for (Document& doc : out) {
    std::set<std::pair<std::string, std::string>> present;
    for (const Relation& r : doc.relations) present.emplace(r.source, r.target);
    const std::size_t original = doc.relations.size();
    for (std::size_t i = 0; i < original; ++i) {
      const Relation r = doc.relations[i];
      const auto inverse = flip(r.label);
      if (!inverse) continue;
      if (present.emplace(r.target, r.source).second) {
        doc.relations.push_back(Relation{r.target, r.source, *inverse});
      }
    }
  }
  return out;
}

DistanceResult ground_and_distance(Scheme scheme, const ProbTriple& probs,
                                   const LabelTriple& labels,
                                   std::span<const PslRule> rules) {
  const Grounding g = ground(scheme, probs, labels, rules);
  DistanceResult result;
  result.distance = g.distance;
  result.matched_rule = g.rule;
  for (auto& v : result.subgradient) v.assign(label_count(scheme), 0.0);
  return result;
}

DistanceResult distance_subgradient(Scheme scheme, const ProbTriple& probs,
                                    const LabelTriple& labels,
                                    std::span<const PslRule> rules) {
  const Grounding g = ground(scheme, probs, labels, rules);
  DistanceResult result;
  result.distance = g.distance;
  result.matched_rule = g.rule;
  for (auto& v : result.subgradient) v.assign(label_count(scheme), 0.0);
  if (g.rule && g.inner_active && g.outer_active) {
    result.subgradient[0][require_label_index(scheme, labels[0])] = 1.0;
    result.subgradient[1][require_label_index(scheme, labels[1])] = 1.0;
    result.subgradient[2][g.head_index] = -1.0;
  }
  return result;
}

}  // namespace tpsl

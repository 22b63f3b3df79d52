#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tpsl/labels.hpp"
#include "tpsl/types.hpp"

namespace tpsl {

// Rule variables. Transitivity rules read label(A,B) & label(B,C) ->
// label(A,C); symmetry rules read label(A,B) -> label(B,A).
enum class Term : std::uint8_t { A, B, C };

struct Atom {
  Label label = Label::Before;
  Term first = Term::A;
  Term second = Term::B;

  friend bool operator==(const Atom&, const Atom&) = default;
};

enum class RuleKind : std::uint8_t { Transitivity, Symmetry };

struct PslRule {
  std::string name;  // abbreviation, e.g. "BOB"
  RuleKind kind = RuleKind::Transitivity;
  std::vector<Atom> body;
  Atom head;
  // Prior confidence. The default temporal rules are hard constraints and
  // carry no weight; distance computation ignores it.
  std::optional<double> weight;

  friend bool operator==(const PslRule&, const PslRule&) = default;
};

// The seven transitivity and three symmetry templates. Dense6 substitutes
// Simultaneous for Overlap; Includes, IsIncluded and Vague never appear.
std::vector<PslRule> default_rule_set(Scheme scheme);

// Head label of the first transitivity rule whose body is (first, second).
std::optional<Label> transitive_head(std::span<const PslRule> rules,
                                     Label first, Label second);

// `Before(A,B) & Overlap(B,C) -> Before(A,C)`, optionally prefixed with
// `<weight>: `.
std::string to_text(const PslRule& rule);
PslRule parse_rule(std::string_view line);

// One rule per line; blank lines and `#` comments are skipped when parsing.
std::string rules_to_text(std::span<const PslRule> rules);
std::vector<PslRule> parse_rules(std::string_view text);

// --- Triplet instances -----------------------------------------------------

struct TripletSlot {
  EntityPair pair;
  std::optional<Label> gold;
  bool placeholder = false;  // padding: no cross-entropy, no PSL term

  friend bool operator==(const TripletSlot&, const TripletSlot&) = default;
};

// Three pairs (A,B), (B,C), (A,C). Filler instances (grounded == false) pack
// relations that take part in no rule and are not chains.
struct TripletInstance {
  std::string document_id;
  std::array<TripletSlot, 3> slots;
  bool grounded = false;

  // True when the slots share entities in the (A,B), (B,C), (A,C) pattern.
  bool is_chain() const;

  friend bool operator==(const TripletInstance&, const TripletInstance&) = default;
};

// Emits one grounded instance per gold chain whose first two labels match a
// transitivity body, then packs the remaining relations three at a time into
// filler instances (the last padded with placeholders).
std::vector<TripletInstance> pack_triplets(std::span<const Document> documents,
                                           std::span<const PslRule> rules);

// Adds label'(B,A) for every gold label(A,B) that has a symmetry inverse,
// unless the pair (B,A) is already annotated. Idempotent.
std::vector<Document> augment_symmetry(std::span<const Document> documents);

// --- Distance to satisfaction ----------------------------------------------

using ProbTriple = std::array<std::span<const double>, 3>;
using LabelTriple = std::array<Label, 3>;

struct DistanceResult {
  double distance = 0.0;
  std::optional<std::size_t> matched_rule;  // index into the rule list
  // d distance / d probs[i][k]; all zero when distance_subgradient was not
  // requested.
  std::array<std::vector<double>, 3> subgradient;
};

// Grounds every transitivity rule whose body matches (labels[0], labels[1])
// positionally and returns the smallest
//   max(max(P1 + P2 - 1, 0) - P3(head), 0)
// over the matches, with P1/P2 the probabilities of the matched labels. No
// match gives distance 0 and no rule. Throws std::invalid_argument if a
// probability vector has the wrong length for the scheme.
DistanceResult ground_and_distance(Scheme scheme, const ProbTriple& probs,
                                   const LabelTriple& labels,
                                   std::span<const PslRule> rules);

// Same distance plus a subgradient: +1 on P1(l1) and P2(l2), -1 on P3(head)
// when both hinges are strictly active at the minimizing rule, zero
// elsewhere (kinks take the zero subgradient).
DistanceResult distance_subgradient(Scheme scheme, const ProbTriple& probs,
                                    const LabelTriple& labels,
                                    std::span<const PslRule> rules);

}  // namespace tpsl

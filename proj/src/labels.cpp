#include "tpsl/labels.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <stdexcept>

namespace tpsl {
namespace {

constexpr std::array kClinical3 = {Label::Before, Label::After, Label::Overlap};
constexpr std::array kDense6 = {Label::Before,   Label::After,
                                Label::Includes, Label::IsIncluded,
                                Label::Simultaneous, Label::Vague};

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

PairKind pair_kind(EntityKind a, EntityKind b) {
  if (a == EntityKind::Event && b == EntityKind::Event) return PairKind::EventEvent;
  if (a == EntityKind::TimeExpression && b == EntityKind::TimeExpression) {
    return PairKind::TimeTime;
  }
  return PairKind::EventTime;
}

std::span<const Label> labels(Scheme scheme) {
  switch (scheme) {
    case Scheme::Clinical3:
      return kClinical3;
    case Scheme::Dense6:
      return kDense6;
  }
  throw std::invalid_argument("unknown label scheme");
}

std::size_t label_count(Scheme scheme) { return labels(scheme).size(); }

std::optional<std::size_t> label_index(Scheme scheme, Label label) {
  auto all = labels(scheme);
  auto it = std::find(all.begin(), all.end(), label);
  if (it == all.end()) return std::nullopt;
  return static_cast<std::size_t>(it - all.begin());
}

std::size_t require_label_index(Scheme scheme, Label label) {
  auto index = label_index(scheme, label);
  if (!index) {
    throw std::invalid_argument("label " + std::string(to_string(label)) +
                                " is not part of scheme " +
                                std::string(to_string(scheme)));
  }
  return *index;
}

Label label_at(Scheme scheme, std::size_t index) {
  auto all = labels(scheme);
  if (index >= all.size()) {
    throw std::out_of_range("label index out of range for scheme " +
                            std::string(to_string(scheme)));
  }
  return all[index];
}

std::optional<Label> flip(Label label) {
  switch (label) {
    case Label::Before:
      return Label::After;
    case Label::After:
      return Label::Before;
    case Label::Overlap:
      return Label::Overlap;
    case Label::Simultaneous:
      return Label::Simultaneous;
    default:
      return std::nullopt;
  }
}

std::string_view to_string(Label label) {
  switch (label) {
    case Label::Before: return "Before";
    case Label::After: return "After";
    case Label::Overlap: return "Overlap";
    case Label::Includes: return "Includes";
    case Label::IsIncluded: return "IsIncluded";
    case Label::Simultaneous: return "Simultaneous";
    case Label::Vague: return "Vague";
  }
  return "?";
}

std::string_view to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::Clinical3: return "clinical3";
    case Scheme::Dense6: return "dense6";
  }
  return "?";
}

std::string_view to_string(EntityKind kind) {
  return kind == EntityKind::Event ? "event" : "time";
}

std::string_view to_string(PairKind kind) {
  switch (kind) {
    case PairKind::EventEvent: return "E-E";
    case PairKind::EventTime: return "E-T";
    case PairKind::TimeTime: return "T-T";
  }
  return "?";
}

std::optional<Label> parse_label(std::string_view text) {
  const std::string s = lower(text);
  if (s == "before" || s == "b") return Label::Before;
  if (s == "after" || s == "a") return Label::After;
  if (s == "overlap" || s == "o") return Label::Overlap;
  if (s == "includes") return Label::Includes;
  if (s == "isincluded" || s == "is_included" || s == "is_include") {
    return Label::IsIncluded;
  }
  if (s == "simultaneous" || s == "s") return Label::Simultaneous;
  if (s == "vague") return Label::Vague;
  return std::nullopt;
}

std::optional<Scheme> parse_scheme(std::string_view text) {
  const std::string s = lower(text);
  if (s == "clinical3") return Scheme::Clinical3;
  if (s == "dense6") return Scheme::Dense6;
  return std::nullopt;
}

std::optional<EntityKind> parse_entity_kind(std::string_view text) {
  const std::string s = lower(text);
  if (s == "event") return EntityKind::Event;
  if (s == "time") return EntityKind::TimeExpression;
  return std::nullopt;
}

}  // namespace tpsl

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace tpsl {

// Temporal relation label schemes. Clinical3 is the three-way clinical
// scheme; Dense6 is the six-way dense news scheme.
enum class Scheme : std::uint8_t { Clinical3, Dense6 };

enum class Label : std::uint8_t {
  Before,
  After,
  Overlap,
  Includes,
  IsIncluded,
  Simultaneous,
  Vague,
};

enum class EntityKind : std::uint8_t { Event, TimeExpression };

// Endpoint category of an entity pair, order-insensitive.
enum class PairKind : std::uint8_t { EventEvent, EventTime, TimeTime };

PairKind pair_kind(EntityKind a, EntityKind b);

// Labels of a scheme in canonical order. Probability vectors are indexed by
// position in this list.
std::span<const Label> labels(Scheme scheme);
std::size_t label_count(Scheme scheme);

// Position of `label` within the scheme, or nullopt if the label is not part
// of it.
std::optional<std::size_t> label_index(Scheme scheme, Label label);

// Same as label_index but throws std::invalid_argument for foreign labels.
std::size_t require_label_index(Scheme scheme, Label label);

Label label_at(Scheme scheme, std::size_t index);

// Inverse relation under the symmetry rules: Before<->After, Overlap and
// Simultaneous are self-inverse. Labels without a symmetry rule return
// nullopt.
std::optional<Label> flip(Label label);

std::string_view to_string(Label label);
std::string_view to_string(Scheme scheme);
std::string_view to_string(EntityKind kind);
std::string_view to_string(PairKind kind);

// Parsing is case-insensitive and accepts the short forms used in rule
// abbreviations ("B", "A", "O", "S").
std::optional<Label> parse_label(std::string_view text);
std::optional<Scheme> parse_scheme(std::string_view text);
std::optional<EntityKind> parse_entity_kind(std::string_view text);

}  // namespace tpsl

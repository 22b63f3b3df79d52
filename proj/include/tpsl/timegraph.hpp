#pragma once

#include <cstddef>
#include <iosfwd>
#include <set>
#include <string>
#include <string_view>
#include <map>
#include <vector>

#include "tpsl/labels.hpp"

namespace tpsl {

enum class TemporalAnswer : std::uint8_t { Before, After, Overlap, Unknown };

std::string_view to_string(TemporalAnswer answer);

enum class AddResult : std::uint8_t { Accepted, Conflict };

// Conflict-free document time graph over the three-way clinical scheme.
//
// Overlap is an equivalence relation, kept as a disjoint-set partition of the
// entities. Before is a strict order between overlap classes, kept as a DAG on
// class representatives. Every query runs a fresh graph search, so one query
// costs O(v + e).
//
// Mutation requires exclusive access; const queries may run concurrently.
class TimeGraph {
 public:
  // Entities are created on first use by the add_* calls.
  void add_node(std::string_view entity);
  bool contains(std::string_view entity) const;
  std::size_t node_count() const { return names_.size(); }

  // Throws std::invalid_argument for entities not in the graph.
  TemporalAnswer query(std::string_view a, std::string_view b) const;

  // Accepted unless a is already after or overlapping b.
  AddResult add_before(std::string_view a, std::string_view b);

  // Accepted unless a is already ordered relative to b. Merges the classes.
  AddResult add_overlap(std::string_view a, std::string_view b);

  // Dispatches Before/After/Overlap; other labels throw
  // std::invalid_argument.
  AddResult add(std::string_view a, std::string_view b, Label label);

  // Members of each overlap class (sorted) and the class-level before edges.
  struct Snapshot {
    std::vector<std::vector<std::string>> classes;
    std::vector<std::pair<std::size_t, std::size_t>> before;  // class indices
  };
  Snapshot snapshot() const;

  // True if the class graph admits a topological order.
  bool is_acyclic() const;

  // Text edge list:
  //   class <k> <member> <member> ...
  //   before <k1> <k2>
  void write(std::ostream& out) const;

 private:
  std::size_t id_of(std::string_view entity) const;
  std::size_t intern(std::string_view entity);
  std::size_t find(std::size_t x) const;
  bool reaches(std::size_t from_root, std::size_t to_root) const;

  std::vector<std::string> names_;
  std::map<std::string, std::size_t, std::less<>> ids_;
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> rank_;
  // Indexed by node id; only meaningful at class representatives.
  std::vector<std::set<std::size_t>> succ_;
  std::vector<std::set<std::size_t>> pred_;
};

}  // namespace tpsl

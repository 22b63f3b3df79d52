#include "tpsl/timegraph.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

namespace tpsl {

std::string_view to_string(TemporalAnswer answer) {
  switch (answer) {
    case TemporalAnswer::Before: return "Before";
    case TemporalAnswer::After: return "After";
    case TemporalAnswer::Overlap: return "Overlap";
    case TemporalAnswer::Unknown: return "Unknown";
  }
  return "?";
}

void TimeGraph::add_node(std::string_view entity) { intern(entity); }

bool TimeGraph::contains(std::string_view entity) const {
  return ids_.find(entity) != ids_.end();
}

std::size_t TimeGraph::id_of(std::string_view entity) const {
  auto it = ids_.find(entity);
  if (it == ids_.end()) {
    throw std::invalid_argument("unknown entity in time graph: " +
                                std::string(entity));
  }
  return it->second;
}

std::size_t TimeGraph::intern(std::string_view entity) {
  auto it = ids_.find(entity);
  if (it != ids_.end()) return it->second;
  const std::size_t id = names_.size();
  names_.emplace_back(entity);
  ids_.emplace(std::string(entity), id);
  parent_.push_back(id);
  rank_.push_back(0);
  succ_.emplace_back();
  pred_.emplace_back();
  return id;
}

// No path compression: const queries stay read-only. Union by rank keeps the
// trees logarithmic.
std::size_t TimeGraph::find(std::size_t x) const {
  while (parent_[x] != x) x = parent_[x];
  return x;
}

bool TimeGraph::reaches(std::size_t from_root, std::size_t to_root) const {
  if (from_root == to_root) return false;
  std::vector<bool> seen(names_.size(), false);
  std::vector<std::size_t> stack{from_root};
  seen[from_root] = true;
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    for (std::size_t v : succ_[u]) {
      if (v == to_root) return true;
      if (!seen[v]) {
        seen[v] = true;
        stack.push_back(v);
      }
    }
  }
  return false;
}

TemporalAnswer TimeGraph::query(std::string_view a, std::string_view b) const {
  const std::size_t ra = find(id_of(a));
  const std::size_t rb = find(id_of(b));
  if (ra == rb) return TemporalAnswer::Overlap;
  if (reaches(ra, rb)) return TemporalAnswer::Before;
  if (reaches(rb, ra)) return TemporalAnswer::After;
  return TemporalAnswer::Unknown;
}

AddResult TimeGraph::add_before(std::string_view a, std::string_view b) {
  const std::size_t ia = intern(a);
  const std::size_t ib = intern(b);
  const TemporalAnswer current = query(a, b);
  if (current == TemporalAnswer::After || current == TemporalAnswer::Overlap) {
    return AddResult::Conflict;
  }
  if (current == TemporalAnswer::Unknown) {
    const std::size_t ra = find(ia);
    const std::size_t rb = find(ib);
    succ_[ra].insert(rb);
    pred_[rb].insert(ra);
  }
  return AddResult::Accepted;
}

AddResult TimeGraph::add_overlap(std::string_view a, std::string_view b) {
  const std::size_t ia = intern(a);
  const std::size_t ib = intern(b);
  const TemporalAnswer current = query(a, b);
  if (current == TemporalAnswer::Before || current == TemporalAnswer::After) {
    return AddResult::Conflict;
  }
  if (current == TemporalAnswer::Overlap) return AddResult::Accepted;

  std::size_t keep = find(ia);
  std::size_t gone = find(ib);
  if (rank_[keep] < rank_[gone]) std::swap(keep, gone);
  if (rank_[keep] == rank_[gone]) ++rank_[keep];
  parent_[gone] = keep;

  // Re-target the absorbed class's edges onto the surviving representative.
  // No path joins the two classes, so no self-loop can appear.
  for (std::size_t s : succ_[gone]) {
    pred_[s].erase(gone);
    pred_[s].insert(keep);
    succ_[keep].insert(s);
  }
  for (std::size_t p : pred_[gone]) {
    succ_[p].erase(gone);
    succ_[p].insert(keep);
    pred_[keep].insert(p);
  }
  succ_[gone].clear();
  pred_[gone].clear();
  return AddResult::Accepted;
}

AddResult TimeGraph::add(std::string_view a, std::string_view b, Label label) {
  switch (label) {
    case Label::Before:
      return add_before(a, b);
    case Label::After:
      return add_before(b, a);
    case Label::Overlap:
      return add_overlap(a, b);
    default:
      throw std::invalid_argument("time graph supports Before/After/Overlap, got " +
                                  std::string(to_string(label)));
  }
}

TimeGraph::Snapshot TimeGraph::snapshot() const {
  Snapshot snap;
  std::vector<std::size_t> class_of_root(names_.size(), names_.size());
  for (std::size_t id = 0; id < names_.size(); ++id) {
    const std::size_t root = find(id);
    if (class_of_root[root] == names_.size()) {
      class_of_root[root] = snap.classes.size();
      snap.classes.emplace_back();
    }
    snap.classes[class_of_root[root]].push_back(names_[id]);
  }
  for (std::size_t id = 0; id < names_.size(); ++id) {
    if (find(id) != id) continue;
    for (std::size_t s : succ_[id]) {
      snap.before.emplace_back(class_of_root[id], class_of_root[s]);
    }
  }
  std::sort(snap.before.begin(), snap.before.end());
  return snap;
}

bool TimeGraph::is_acyclic() const {
  const Snapshot snap = snapshot();
  const std::size_t n = snap.classes.size();
  std::vector<std::size_t> indegree(n, 0);
  std::vector<std::vector<std::size_t>> out(n);
  for (const auto& [u, v] : snap.before) {
    if (u == v) return false;
    out[u].push_back(v);
    ++indegree[v];
  }
  std::vector<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i) {
    if (indegree[i] == 0) ready.push_back(i);
  }
  std::size_t visited = 0;
  while (!ready.empty()) {
    const std::size_t u = ready.back();
    ready.pop_back();
    ++visited;
    for (std::size_t v : out[u]) {
      if (--indegree[v] == 0) ready.push_back(v);
    }
  }
  return visited == n;
}

void TimeGraph::write(std::ostream& out) const {
  const Snapshot snap = snapshot();
  for (std::size_t k = 0; k < snap.classes.size(); ++k) {
    out << "class " << k;
    for (const std::string& m : snap.classes[k]) out << ' ' << m;
    out << '\n';
  }
  for (const auto& [u, v] : snap.before) out << "before " << u << ' ' << v << '\n';
}

}  // namespace tpsl

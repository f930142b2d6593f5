#include "eud/graph.hpp"

#include <algorithm>
#include <map>

namespace eud
{
EudGraph::EudGraph(std::vector<NodeId> node_ids) : node_ids_(std::move(node_ids)) {}

NodeId EudGraph::node_id(NodeIndex index) const
{
  if (index == 0) {
    return NodeId{};
  }
  return node_ids_.at(static_cast<std::size_t>(index - 1));
}

bool EudGraph::is_empty_node(NodeIndex index) const
{
  return index > 0 && node_ids_.at(static_cast<std::size_t>(index - 1)).is_empty_node();
}

NodeIndex EudGraph::index_of(NodeId id) const
{
  if (id.is_root()) {
    return 0;
  }
  const auto it = std::lower_bound(node_ids_.begin(), node_ids_.end(), id);
  if (it == node_ids_.end() || *it != id) {
    return -1;
  }
  return static_cast<NodeIndex>(it - node_ids_.begin()) + 1;
}

bool EudGraph::add_edge(NodeIndex head, NodeIndex dep, std::string label)
{
  if (dep <= 0 || dep > size() || head < 0 || head > size()) {
    throw GraphError("edge " + std::to_string(head) + "->" + std::to_string(dep) +
                     " is out of range for " + std::to_string(size()) + " nodes");
  }
  if (head == dep) {
    throw GraphError("self-loop on node " + node_id(dep).str());
  }
  Edge edge{head, dep, std::move(label)};
  const auto it = std::lower_bound(edges_.begin(), edges_.end(), edge);
  if (it != edges_.end() && *it == edge) {
    return false;
  }
  edges_.insert(it, std::move(edge));
  return true;
}

bool EudGraph::has_arc(NodeIndex head, NodeIndex dep) const
{
  return std::any_of(edges_.begin(), edges_.end(),
                     [&](const Edge & e) { return e.head == head && e.dep == dep; });
}

std::vector<std::vector<NodeIndex>> EudGraph::out_adjacency() const
{
  std::vector<std::vector<NodeIndex>> adjacency(static_cast<std::size_t>(size()) + 1);
  for (const auto & edge : edges_) {
    auto & out = adjacency[static_cast<std::size_t>(edge.head)];
    if (out.empty() || out.back() != edge.dep) {
      out.push_back(edge.dep);
    }
  }
  return adjacency;
}

std::vector<NodeId> node_order(const Sentence & sentence)
{
  std::vector<NodeId> ids;
  ids.reserve(sentence.tokens.size());
  for (const auto & token : sentence.tokens) {
    ids.push_back(token.id);
  }
  return ids;
}

EudGraph to_graph(const Sentence & sentence)
{
  EudGraph graph(node_order(sentence));
  for (std::size_t position = 0; position < sentence.tokens.size(); ++position) {
    const auto & token = sentence.tokens[position];
    for (const auto & dep : token.deps) {
      const auto head = graph.index_of(dep.head);
      if (head < 0) {
        throw GraphError("node " + token.id.str() + " has dangling enhanced head " +
                         dep.head.str());
      }
      graph.add_edge(head, static_cast<NodeIndex>(position) + 1, dep.label);
    }
  }
  return graph;
}

Sentence from_graph(const EudGraph & graph, const Sentence & templ)
{
  if (static_cast<std::size_t>(graph.size()) != templ.tokens.size()) {
    throw GraphError("graph has " + std::to_string(graph.size()) + " nodes but sentence has " +
                     std::to_string(templ.tokens.size()));
  }
  Sentence out = templ;
  for (auto & token : out.tokens) {
    token.deps.clear();
  }
  // Edges are sorted by head index, which is surface order, so deps come out sorted.
  for (const auto & edge : graph.edges()) {
    out.tokens[static_cast<std::size_t>(edge.dep - 1)].deps.push_back(
      {graph.node_id(edge.head), edge.label});
  }
  return out;
}

std::vector<bool> reachable_mask(const EudGraph & graph, NodeIndex start)
{
  const auto adjacency = graph.out_adjacency();
  std::vector<bool> seen(adjacency.size(), false);
  std::vector<NodeIndex> stack{start};
  seen[static_cast<std::size_t>(start)] = true;
  while (!stack.empty()) {
    const auto node = stack.back();
    stack.pop_back();
    for (const auto next : adjacency[static_cast<std::size_t>(node)]) {
      if (!seen[static_cast<std::size_t>(next)]) {
        seen[static_cast<std::size_t>(next)] = true;
        stack.push_back(next);
      }
    }
  }
  return seen;
}

std::vector<NodeIndex> reachable_from_root(const EudGraph & graph)
{
  const auto seen = reachable_mask(graph, 0);
  std::vector<NodeIndex> out;
  for (NodeIndex i = 1; i <= graph.size(); ++i) {
    if (seen[static_cast<std::size_t>(i)]) {
      out.push_back(i);
    }
  }
  return out;
}

int reach_count(const EudGraph & graph, NodeIndex candidate, std::span<const NodeIndex> unreachable)
{
  const auto seen = reachable_mask(graph, candidate);
  int count = 0;
  for (const auto node : unreachable) {
    if (node != candidate && seen[static_cast<std::size_t>(node)]) {
      ++count;
    }
  }
  return count;
}

}  // namespace eud

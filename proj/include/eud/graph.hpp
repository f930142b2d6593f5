#pragma once

#include "eud/conllu.hpp"

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace eud
{
/// Dense node position: 0 is ROOT, then tokens and empty nodes in surface order.
using NodeIndex = int;

struct Edge
{
  NodeIndex head = 0;
  NodeIndex dep = 0;
  std::string label;

  auto operator<=>(const Edge &) const = default;
};

class GraphError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Labeled digraph over ROOT plus the m nodes of a sentence. Edges are kept sorted and unique.
/// Cycles are allowed; self-loops and ROOT as dependent are not.
class EudGraph
{
public:
  EudGraph() = default;
  explicit EudGraph(std::vector<NodeId> node_ids);

  int size() const { return static_cast<int>(node_ids_.size()); }
  const std::vector<NodeId> & node_ids() const { return node_ids_; }
  /// NodeId of an index; index 0 is ROOT.
  NodeId node_id(NodeIndex index) const;
  bool is_empty_node(NodeIndex index) const;
  /// Index of a NodeId, or -1 if absent.
  NodeIndex index_of(NodeId id) const;

  const std::vector<Edge> & edges() const { return edges_; }
  /// Returns false if the edge was already present.
  bool add_edge(NodeIndex head, NodeIndex dep, std::string label);
  bool has_arc(NodeIndex head, NodeIndex dep) const;
  /// Dependents of each node, indexed 0..m.
  std::vector<std::vector<NodeIndex>> out_adjacency() const;

  bool operator==(const EudGraph &) const = default;

private:
  std::vector<NodeId> node_ids_;
  std::vector<Edge> edges_;
};

/// Surface-order NodeIds of a sentence (tokens and empty nodes).
std::vector<NodeId> node_order(const Sentence & sentence);

EudGraph to_graph(const Sentence & sentence);
/// Rewrites the DEPS column of `templ` from the graph; every other column is copied.
Sentence from_graph(const EudGraph & graph, const Sentence & templ);

/// Sorted indices reachable from ROOT (ROOT itself excluded).
std::vector<NodeIndex> reachable_from_root(const EudGraph & graph);
/// Reachability mask over 0..m from an arbitrary start.
std::vector<bool> reachable_mask(const EudGraph & graph, NodeIndex start);
/// Number of nodes in `unreachable` other than `candidate` that `candidate` reaches.
int reach_count(const EudGraph & graph, NodeIndex candidate, std::span<const NodeIndex> unreachable);

}  // namespace eud

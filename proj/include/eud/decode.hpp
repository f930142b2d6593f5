#pragma once

#include "eud/graph.hpp"
#include "eud/model.hpp"

#include <span>
#include <string>
#include <vector>

namespace eud
{
/// Label given to edges that post-processing attaches to ROOT.
inline constexpr const char * kRepairLabel = "root";

struct Arc
{
  int head;
  int dep;

  auto operator<=>(const Arc &) const = default;
};

struct EdgeSelection
{
  std::vector<Arc> arcs;  // sorted by (head, dep)
  std::vector<NodeIndex> fallback_heads;
};

struct DecodedGraph
{
  EudGraph graph;
  std::vector<NodeIndex> added_root_edges;
  std::vector<NodeIndex> fallback_heads;
};

/// Keeps every arc whose probability is strictly above the threshold; a dependent left
/// without a head gets its single most probable head (lowest index on ties).
EdgeSelection decode_edges(const Matrix & arc_scores, double threshold = 0.5);

/// Argmax label per arc, ties to the lowest label id. n is the node count.
std::vector<LabeledArc> decode_labels(const Matrix & label_scores, int n, std::span<const Arc> arcs);

/// Labeled arcs as a graph over the given nodes.
EudGraph build_graph(std::vector<NodeId> node_ids, std::span<const LabeledArc> arcs, const LabelVocab & vocab);

/// Repeatedly attaches to ROOT the unreachable node that reaches the most other unreachable
/// nodes (first in surface order on ties) until every node is reachable.
DecodedGraph connect_graph(EudGraph graph);

struct TreeDecode
{
  std::vector<int> head;   // size n+1; -1 for ROOT and empty nodes
  std::vector<int> label;  // size n+1
};

/// Maximum spanning arborescence rooted at 0 over weights(h, d); -inf marks a missing arc.
/// Returns heads for 0..k with heads[0] = -1.
std::vector<int> max_arborescence(const Matrix & weights);

/// Greedy head per regular token, repaired with a maximum spanning arborescence when cyclic.
TreeDecode decode_tree(const Matrix & tree_arc, const Matrix & tree_label, const std::vector<bool> & empty_node);

/// Writes a decoded basic tree into HEAD/DEPREL.
void apply_tree(Sentence & sentence, const TreeDecode & tree, const LabelVocab & vocab);

/// Reference baseline: the basic tree as the enhanced graph; empty nodes get no edges.
EudGraph copy_tree_to_enhanced(const Sentence & sentence);

}  // namespace eud

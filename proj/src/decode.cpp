#include "eud/decode.hpp"

#include <algorithm>
#include <cmath>

namespace eud
{
EdgeSelection decode_edges(const Matrix & arc_scores, double threshold)
{
  const int n = static_cast<int>(arc_scores.cols());
  EdgeSelection out;
  for (int d = 1; d <= n; ++d) {
    bool headed = false;
    int best = -1;
    for (int h = 0; h <= n; ++h) {
      if (h == d) {
        continue;
      }
      const double s = arc_scores(h, d - 1);
      if (sigmoid(s) > threshold) {
        out.arcs.push_back({h, d});
        headed = true;
      }
      if (best < 0 || s > arc_scores(best, d - 1)) {
        best = h;
      }
    }
    if (!headed && best >= 0) {
      out.arcs.push_back({best, d});
      out.fallback_heads.push_back(d);
    }
  }
  std::sort(out.arcs.begin(), out.arcs.end());
  return out;
}

std::vector<LabeledArc> decode_labels(const Matrix & label_scores, int n, std::span<const Arc> arcs)
{
  std::vector<LabeledArc> out;
  out.reserve(arcs.size());
  for (const auto & arc : arcs) {
    const auto row = label_scores.row(ScoreMatrices::pair(arc.head, arc.dep, n));
    Eigen::Index best = 0;
    for (Eigen::Index l = 1; l < row.size(); ++l) {
      if (row(l) > row(best)) {
        best = l;
      }
    }
    out.push_back({arc.head, arc.dep, static_cast<int>(best)});
  }
  return out;
}

EudGraph build_graph(std::vector<NodeId> node_ids, std::span<const LabeledArc> arcs, const LabelVocab & vocab)
{
  EudGraph graph(std::move(node_ids));
  for (const auto & arc : arcs) {
    graph.add_edge(arc.head, arc.dep, vocab.label(arc.label));
  }
  return graph;
}

DecodedGraph connect_graph(EudGraph graph)
{
  DecodedGraph out;
  while (true) {
    const auto reached = reachable_mask(graph, 0);
    std::vector<NodeIndex> unreachable;
    for (NodeIndex i = 1; i <= graph.size(); ++i) {
      if (!reached[static_cast<std::size_t>(i)]) {
        unreachable.push_back(i);
      }
    }
    if (unreachable.empty()) {
      break;
    }
    NodeIndex best = unreachable.front();
    int best_count = -1;
    for (const auto candidate : unreachable) {
      const int count = reach_count(graph, candidate, unreachable);
      if (count > best_count) {
        best = candidate;
        best_count = count;
      }
    }
    graph.add_edge(0, best, kRepairLabel);
    out.added_root_edges.push_back(best);
  }
  out.graph = std::move(graph);
  return out;
}

namespace
{
/// Nodes of the first cycle found among head pointers, or empty.
std::vector<int> find_cycle(const std::vector<int> & head)
{
  const int k = static_cast<int>(head.size());
  std::vector<int> visit(static_cast<std::size_t>(k), -1);
  for (int start = 0; start < k; ++start) {
    int v = start;
    while (v >= 0 && visit[static_cast<std::size_t>(v)] < 0) {
      visit[static_cast<std::size_t>(v)] = start;
      v = head[static_cast<std::size_t>(v)];
    }
    if (v >= 0 && visit[static_cast<std::size_t>(v)] == start) {
      std::vector<int> cycle{v};
      for (int u = head[static_cast<std::size_t>(v)]; u != v; u = head[static_cast<std::size_t>(u)]) {
        cycle.push_back(u);
      }
      std::sort(cycle.begin(), cycle.end());
      return cycle;
    }
  }
  return {};
}

}  // namespace

std::vector<int> max_arborescence(const Matrix & weights)
{
  const int k = static_cast<int>(weights.rows());
  std::vector<int> head(static_cast<std::size_t>(k), -1);
  for (int d = 1; d < k; ++d) {
    for (int h = 0; h < k; ++h) {
      if (h == d || !std::isfinite(weights(h, d))) {
        continue;
      }
      if (head[static_cast<std::size_t>(d)] < 0 || weights(h, d) > weights(head[static_cast<std::size_t>(d)], d)) {
        head[static_cast<std::size_t>(d)] = h;
      }
    }
  }
  const auto cycle = find_cycle(head);
  if (cycle.empty()) {
    return head;
  }

  std::vector<bool> in_cycle(static_cast<std::size_t>(k), false);
  for (const int v : cycle) {
    in_cycle[static_cast<std::size_t>(v)] = true;
  }
  std::vector<int> compact(static_cast<std::size_t>(k), -1);
  std::vector<int> original;
  for (int v = 0; v < k; ++v) {
    if (!in_cycle[static_cast<std::size_t>(v)]) {
      compact[static_cast<std::size_t>(v)] = static_cast<int>(original.size());
      original.push_back(v);
    }
  }
  const int contracted = static_cast<int>(original.size());
  Matrix reduced = Matrix::Constant(contracted + 1, contracted + 1, masked_score());
  std::vector<int> enters(static_cast<std::size_t>(contracted + 1), -1);
  std::vector<int> leaves(static_cast<std::size_t>(contracted + 1), -1);
  for (int u = 0; u < k; ++u) {
    for (int v = 0; v < k; ++v) {
      if (u == v || !std::isfinite(weights(u, v))) {
        continue;
      }
      const bool u_in = in_cycle[static_cast<std::size_t>(u)];
      const bool v_in = in_cycle[static_cast<std::size_t>(v)];
      if (!u_in && !v_in) {
        reduced(compact[static_cast<std::size_t>(u)], compact[static_cast<std::size_t>(v)]) = weights(u, v);
      } else if (!u_in && v_in) {
        const int cu = compact[static_cast<std::size_t>(u)];
        const double gain = weights(u, v) - weights(head[static_cast<std::size_t>(v)], v);
        if (enters[static_cast<std::size_t>(cu)] < 0 || gain > reduced(cu, contracted)) {
          reduced(cu, contracted) = gain;
          enters[static_cast<std::size_t>(cu)] = v;
        }
      } else if (u_in && !v_in) {
        const int cv = compact[static_cast<std::size_t>(v)];
        if (leaves[static_cast<std::size_t>(cv)] < 0 || weights(u, v) > reduced(contracted, cv)) {
          reduced(contracted, cv) = weights(u, v);
          leaves[static_cast<std::size_t>(cv)] = u;
        }
      }
    }
  }
  const auto sub = max_arborescence(reduced);
  std::vector<int> result = head;
  const int entry_from = sub[static_cast<std::size_t>(contracted)];
  if (entry_from >= 0) {
    const int entered = enters[static_cast<std::size_t>(entry_from)];
    result[static_cast<std::size_t>(entered)] = original[static_cast<std::size_t>(entry_from)];
  }
  for (int cv = 1; cv < contracted; ++cv) {
    const int v = original[static_cast<std::size_t>(cv)];
    const int h = sub[static_cast<std::size_t>(cv)];
    if (h < 0) {
      result[static_cast<std::size_t>(v)] = -1;
    } else if (h == contracted) {
      result[static_cast<std::size_t>(v)] = leaves[static_cast<std::size_t>(cv)];
    } else {
      result[static_cast<std::size_t>(v)] = original[static_cast<std::size_t>(h)];
    }
  }
  return result;
}

TreeDecode decode_tree(const Matrix & tree_arc, const Matrix & tree_label, const std::vector<bool> & empty_node)
{
  const int n = static_cast<int>(tree_arc.cols());
  TreeDecode out;
  out.head.assign(static_cast<std::size_t>(n) + 1, -1);
  out.label.assign(static_cast<std::size_t>(n) + 1, -1);

  std::vector<int> nodes{0};
  for (int i = 1; i <= n; ++i) {
    if (!empty_node[static_cast<std::size_t>(i)]) {
      nodes.push_back(i);
    }
  }
  const int k = static_cast<int>(nodes.size());
  // Per-dependent log-softmax over candidate heads.
  Matrix weights = Matrix::Constant(k, k, masked_score());
  std::vector<int> greedy(static_cast<std::size_t>(k), -1);
  for (int cd = 1; cd < k; ++cd) {
    const int d = nodes[static_cast<std::size_t>(cd)];
    Vector column(k - 1);
    std::vector<int> heads;
    for (int ch = 0; ch < k; ++ch) {
      if (ch != cd) {
        column(static_cast<Eigen::Index>(heads.size())) = tree_arc(nodes[static_cast<std::size_t>(ch)], d - 1);
        heads.push_back(ch);
      }
    }
    const Vector logp = log_softmax(column);
    for (std::size_t j = 0; j < heads.size(); ++j) {
      weights(heads[j], cd) = logp(static_cast<Eigen::Index>(j));
      if (greedy[static_cast<std::size_t>(cd)] < 0 ||
          logp(static_cast<Eigen::Index>(j)) > weights(greedy[static_cast<std::size_t>(cd)], cd)) {
        greedy[static_cast<std::size_t>(cd)] = heads[j];
      }
    }
  }
  const auto chosen = find_cycle(greedy).empty() ? greedy : max_arborescence(weights);
  for (int cd = 1; cd < k; ++cd) {
    const int d = nodes[static_cast<std::size_t>(cd)];
    const int h = nodes[static_cast<std::size_t>(chosen[static_cast<std::size_t>(cd)])];
    out.head[static_cast<std::size_t>(d)] = h;
    const auto row = tree_label.row(ScoreMatrices::pair(h, d, n));
    Eigen::Index best = 0;
    for (Eigen::Index l = 1; l < row.size(); ++l) {
      if (row(l) > row(best)) {
        best = l;
      }
    }
    out.label[static_cast<std::size_t>(d)] = static_cast<int>(best);
  }
  return out;
}

void apply_tree(Sentence & sentence, const TreeDecode & tree, const LabelVocab & vocab)
{
  const EudGraph index(node_order(sentence));
  for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
    auto & token = sentence.tokens[i];
    const int head = tree.head[i + 1];
    if (token.id.is_empty_node() || head < 0) {
      continue;
    }
    token.head = index.node_id(head);
    token.deprel = vocab.label(tree.label[i + 1]);
  }
}

EudGraph copy_tree_to_enhanced(const Sentence & sentence)
{
  EudGraph graph(node_order(sentence));
  for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
    const auto & token = sentence.tokens[i];
    if (token.id.is_empty_node()) {
      continue;
    }
    if (!token.head) {
      throw GraphError("token " + token.id.str() + " has no basic head");
    }
    const int head = graph.index_of(*token.head);
    if (head < 0) {
      throw GraphError("token " + token.id.str() + " has dangling basic head " + token.head->str());
    }
    graph.add_edge(head, static_cast<NodeIndex>(i) + 1, token.deprel);
  }
  return graph;
}

}  // namespace eud

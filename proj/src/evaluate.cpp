#include "eud/evaluate.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>

namespace eud
{
std::string coarsen_label(std::string_view label)
{
  return std::string(label.substr(0, label.find(':')));
}

CollapseResult collapse_empty(const EudGraph & graph)
{
  const int m = graph.size();
  std::vector<std::vector<const Edge *>> outgoing(static_cast<std::size_t>(m) + 1);
  for (const auto & edge : graph.edges()) {
    outgoing[static_cast<std::size_t>(edge.head)].push_back(&edge);
  }
  auto word = [&](NodeIndex index) { return graph.node_id(index).major; };

  CollapseResult result;
  std::vector<bool> on_path(static_cast<std::size_t>(m) + 1, false);
  std::function<bool(int, NodeIndex, const std::string &, int)> extend =
    [&](int head_word, NodeIndex node, const std::string & label, int depth) {
      bool emitted = false;
      on_path[static_cast<std::size_t>(node)] = true;
      for (const auto * edge : outgoing[static_cast<std::size_t>(node)]) {
        const std::string joined = label + kPathJoiner + edge->label;
        if (!graph.is_empty_node(edge->dep)) {
          result.edges.push_back({head_word, word(edge->dep), joined});
          emitted = true;
        } else if (!on_path[static_cast<std::size_t>(edge->dep)] && depth < m) {
          emitted = extend(head_word, edge->dep, joined, depth + 1) || emitted;
        }
      }
      on_path[static_cast<std::size_t>(node)] = false;
      return emitted;
    };

  for (const auto & edge : graph.edges()) {
    if (graph.is_empty_node(edge.head)) {
      continue;
    }
    if (!graph.is_empty_node(edge.dep)) {
      result.edges.push_back({word(edge.head), word(edge.dep), edge.label});
    } else if (!extend(word(edge.head), edge.dep, edge.label, 1)) {
      ++result.dropped;
    }
  }
  std::sort(result.edges.begin(), result.edges.end());
  return result;
}

Prf make_prf(long long matched, long long system, long long gold)
{
  Prf out;
  out.precision = system > 0 ? static_cast<double>(matched) / static_cast<double>(system) : 0.0;
  out.recall = gold > 0 ? static_cast<double>(matched) / static_cast<double>(gold) : 0.0;
  const double sum = out.precision + out.recall;
  out.f1 = sum > 0.0 ? 2.0 * out.precision * out.recall / sum : 0.0;
  return out;
}

long long matched_edges(const std::vector<WordEdge> & gold, const std::vector<WordEdge> & system)
{
  long long matched = 0;
  auto g = gold.begin();
  auto s = system.begin();
  while (g != gold.end() && s != system.end()) {
    if (*g < *s) {
      ++g;
    } else if (*s < *g) {
      ++s;
    } else {
      ++matched;
      ++g;
      ++s;
    }
  }
  return matched;
}

namespace
{
void check_alignment(const std::vector<Sentence> & gold, const std::vector<Sentence> & system)
{
  if (gold.size() != system.size()) {
    throw AlignmentError("gold has " + std::to_string(gold.size()) + " sentences, system has " +
                           std::to_string(system.size()),
                         std::min(gold.size(), system.size()));
  }
  for (std::size_t i = 0; i < gold.size(); ++i) {
    std::vector<const Token *> g, s;
    for (const auto & t : gold[i].tokens) {
      if (!t.id.is_empty_node()) {
        g.push_back(&t);
      }
    }
    for (const auto & t : system[i].tokens) {
      if (!t.id.is_empty_node()) {
        s.push_back(&t);
      }
    }
    if (g.size() != s.size()) {
      throw AlignmentError("token counts differ (" + std::to_string(g.size()) + " vs " +
                             std::to_string(s.size()) + ")",
                           i);
    }
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (g[k]->id != s[k]->id || g[k]->form != s[k]->form) {
        throw AlignmentError("token " + g[k]->id.str() + " differs ('" + g[k]->form + "' vs '" +
                               s[k]->form + "')",
                             i);
      }
    }
  }
}

std::vector<WordEdge> coarsened(std::vector<WordEdge> edges)
{
  for (auto & edge : edges) {
    std::string out;
    std::size_t start = 0;
    // Coarsen each segment of a collapsed path independently.
    while (true) {
      const auto pos = edge.label.find(kPathJoiner, start);
      const auto segment = std::string_view(edge.label).substr(
        start, pos == std::string::npos ? std::string::npos : pos - start);
      out += coarsen_label(segment);
      if (pos == std::string::npos) {
        break;
      }
      out += kPathJoiner;
      start = pos + 1;
    }
    edge.label = std::move(out);
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

bool has_basic_tree(const std::vector<Sentence> & sentences)
{
  for (const auto & sentence : sentences) {
    for (const auto & token : sentence.tokens) {
      if (!token.id.is_empty_node() && !token.head) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace

Prf elas(const std::vector<Sentence> & gold, const std::vector<Sentence> & system, bool coarse,
         EdgeCounts * counts)
{
  check_alignment(gold, system);
  EdgeCounts total;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    auto g = collapse_empty(to_graph(gold[i])).edges;
    auto s = collapse_empty(to_graph(system[i])).edges;
    if (coarse) {
      g = coarsened(std::move(g));
      s = coarsened(std::move(s));
    }
    total.gold += static_cast<long long>(g.size());
    total.system += static_cast<long long>(s.size());
    total.matched += matched_edges(g, s);
  }
  if (counts) {
    *counts = total;
  }
  return make_prf(total.matched, total.system, total.gold);
}

AttachmentScores uas_las(const std::vector<Sentence> & gold, const std::vector<Sentence> & system)
{
  check_alignment(gold, system);
  long long tokens = 0, heads = 0, labeled = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    std::vector<const Token *> s;
    for (const auto & t : system[i].tokens) {
      if (!t.id.is_empty_node()) {
        s.push_back(&t);
      }
    }
    std::size_t k = 0;
    for (const auto & g : gold[i].tokens) {
      if (g.id.is_empty_node()) {
        continue;
      }
      const Token & sys = *s[k++];
      ++tokens;
      if (g.head && sys.head && *g.head == *sys.head) {
        ++heads;
        if (g.deprel == sys.deprel) {
          ++labeled;
        }
      }
    }
  }
  AttachmentScores out;
  if (tokens > 0) {
    out.uas = static_cast<double>(heads) / static_cast<double>(tokens);
    out.las = static_cast<double>(labeled) / static_cast<double>(tokens);
  }
  return out;
}

EvalReport evaluate(const std::vector<Sentence> & gold, const std::vector<Sentence> & system)
{
  check_alignment(gold, system);
  EvalReport report;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto g_collapsed = collapse_empty(to_graph(gold[i]));
    const auto s_collapsed = collapse_empty(to_graph(system[i]));
    report.dropped_paths += g_collapsed.dropped + s_collapsed.dropped;
    SentenceScore score;
    score.exact_counts = {static_cast<long long>(g_collapsed.edges.size()),
                          static_cast<long long>(s_collapsed.edges.size()),
                          matched_edges(g_collapsed.edges, s_collapsed.edges)};
    const auto g_coarse = coarsened(g_collapsed.edges);
    const auto s_coarse = coarsened(s_collapsed.edges);
    score.coarse_counts = {static_cast<long long>(g_coarse.size()),
                           static_cast<long long>(s_coarse.size()), matched_edges(g_coarse, s_coarse)};
    score.exact = make_prf(score.exact_counts.matched, score.exact_counts.system, score.exact_counts.gold);
    score.coarse =
      make_prf(score.coarse_counts.matched, score.coarse_counts.system, score.coarse_counts.gold);
    for (auto [total, part] : {std::pair{&report.exact_counts, &score.exact_counts},
                               std::pair{&report.coarse_counts, &score.coarse_counts}}) {
      total->gold += part->gold;
      total->system += part->system;
      total->matched += part->matched;
    }
    report.per_sentence.push_back(score);
  }
  report.elas_exact =
    make_prf(report.exact_counts.matched, report.exact_counts.system, report.exact_counts.gold);
  report.elas_coarse =
    make_prf(report.coarse_counts.matched, report.coarse_counts.system, report.coarse_counts.gold);
  report.has_basic = has_basic_tree(gold) && has_basic_tree(system);
  if (report.has_basic) {
    const auto attachment = uas_las(gold, system);
    report.uas = attachment.uas;
    report.las = attachment.las;
  }
  return report;
}

void print_report(std::ostream & out, const EvalReport & report, bool coarse_only)
{
  char line[160];
  auto row = [&](const char * name, const Prf & prf) {
    std::snprintf(line, sizeof line, "%-12s %9.4f %9.4f %9.4f\n", name, prf.precision, prf.recall, prf.f1);
    out << line;
  };
  std::snprintf(line, sizeof line, "%-12s %9s %9s %9s\n", "Metric", "Precision", "Recall", "F1");
  out << line;
  if (!coarse_only) {
    row("ELAS", report.elas_exact);
  }
  row("coarse ELAS", report.elas_coarse);
  if (report.has_basic) {
    std::snprintf(line, sizeof line, "%-12s %29.4f\n%-12s %29.4f\n", "UAS", report.uas, "LAS", report.las);
    out << line;
  }
  out << '\n';
  auto kv = [&](const char * key, double value) {
    std::snprintf(line, sizeof line, "%s=%.4f\n", key, value);
    out << line;
  };
  kv("elas_exact_precision", report.elas_exact.precision);
  kv("elas_exact_recall", report.elas_exact.recall);
  kv("elas_exact_f1", report.elas_exact.f1);
  kv("elas_coarse_precision", report.elas_coarse.precision);
  kv("elas_coarse_recall", report.elas_coarse.recall);
  kv("elas_coarse_f1", report.elas_coarse.f1);
  if (report.has_basic) {
    kv("uas", report.uas);
    kv("las", report.las);
  }
}

}  // namespace eud

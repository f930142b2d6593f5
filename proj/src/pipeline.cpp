#include "eud/pipeline.hpp"

#include <algorithm>
#include <future>

namespace eud
{
Sentence parse_sentence(const Model & model, const Sentence & sentence, const ParseOptions & options,
                        DecodedGraph * decoded)
{
  const auto input = make_input(sentence, model.hyper.encoder);
  const auto scores = score(model, input);
  const auto selection = decode_edges(scores.arc, options.threshold.value_or(model.hyper.edge_threshold));
  const auto arcs = decode_labels(scores.label, scores.n, selection.arcs);
  auto result = connect_graph(build_graph(node_order(sentence), arcs, model.labels));
  result.fallback_heads = selection.fallback_heads;
  Sentence out = from_graph(result.graph, sentence);
  if (scores.has_tree()) {
    apply_tree(out, decode_tree(scores.tree_arc, scores.tree_label, input.empty_node), model.tree_labels);
  }
  if (decoded) {
    *decoded = std::move(result);
  }
  return out;
}

std::vector<Sentence> parse_sentences(const Model & model, const std::vector<Sentence> & sentences,
                                      const ParseOptions & options, ParseStats * stats)
{
  struct Result
  {
    Sentence sentence;
    long long fallback = 0;
    long long repairs = 0;
    bool passed = false;
  };
  auto run = [&](std::size_t i) {
    Result r;
    const auto & sentence = sentences[i];
    if (sentence.tokens.empty() || !validate_structure(sentence).empty()) {
      r.sentence = sentence;
      r.passed = true;
      return r;
    }
    DecodedGraph decoded;
    r.sentence = parse_sentence(model, sentence, options, &decoded);
    r.fallback = static_cast<long long>(decoded.fallback_heads.size());
    r.repairs = static_cast<long long>(decoded.added_root_edges.size());
    return r;
  };

  std::vector<Result> results(sentences.size());
  const unsigned threads = std::max(1U, options.threads);
  if (threads == 1) {
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      results[i] = run(i);
    }
  } else {
    // Strided split; each worker writes only its own slots.
    std::vector<std::future<void>> workers;
    for (unsigned t = 0; t < threads; ++t) {
      workers.push_back(std::async(std::launch::async, [&, t] {
        for (std::size_t i = t; i < sentences.size(); i += threads) {
          results[i] = run(i);
        }
      }));
    }
    for (auto & w : workers) {
      w.get();
    }
  }

  std::vector<Sentence> out;
  out.reserve(results.size());
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (stats) {
      ++stats->sentences;
      stats->fallback_heads += results[i].fallback;
      stats->repair_edges += results[i].repairs;
      if (results[i].passed) {
        ++stats->passed_through;
        stats->passed_through_indices.push_back(i);
      }
    }
    out.push_back(std::move(results[i].sentence));
  }
  return out;
}

}  // namespace eud

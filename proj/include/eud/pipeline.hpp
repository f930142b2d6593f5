#pragma once

#include "eud/conllu.hpp"
#include "eud/decode.hpp"
#include "eud/model.hpp"

#include <optional>
#include <vector>

namespace eud
{
struct ParseStats
{
  long long sentences = 0;
  long long fallback_heads = 0;
  long long repair_edges = 0;
  long long passed_through = 0;
  std::vector<std::size_t> passed_through_indices;
};

struct ParseOptions
{
  std::optional<double> threshold;  // overrides the model's edge threshold
  unsigned threads = 1;
};

/// Scores, thresholds, labels, and connects one sentence. DEPS is replaced; HEAD/DEPREL
/// are replaced only by a model with a tree head.
Sentence parse_sentence(const Model & model, const Sentence & sentence, const ParseOptions & options = {},
                        DecodedGraph * decoded = nullptr);

/// Order-preserving batch parse. Sentences with broken ids or multiword spans, or without
/// nodes, are copied through unchanged.
std::vector<Sentence> parse_sentences(const Model & model, const std::vector<Sentence> & sentences,
                                      const ParseOptions & options = {}, ParseStats * stats = nullptr);

}  // namespace eud

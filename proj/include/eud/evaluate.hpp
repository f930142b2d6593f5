#pragma once

#include "eud/conllu.hpp"
#include "eud/graph.hpp"

#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace eud
{
class AlignmentError : public std::runtime_error
{
public:
  AlignmentError(const std::string & message, std::size_t sentence_index)
  : std::runtime_error("sentence " + std::to_string(sentence_index) + ": " + message),
    sentence_index_(sentence_index)
  {
  }
  std::size_t sentence_index() const { return sentence_index_; }

private:
  std::size_t sentence_index_;
};

/// Joiner for labels along a collapsed path through empty nodes.
inline constexpr char kPathJoiner = '>';

/// Label up to the first ':'.
std::string coarsen_label(std::string_view label);

/// Edge between regular nodes (or ROOT), keyed by surface word index.
struct WordEdge
{
  int head;
  int dep;
  std::string label;

  auto operator<=>(const WordEdge &) const = default;
};

struct CollapseResult
{
  std::vector<WordEdge> edges;  // sorted multiset
  int dropped = 0;              // edges into empty nodes with no regular continuation
};

/// Replaces every path through empty nodes by one edge with '>'-joined labels.
CollapseResult collapse_empty(const EudGraph & graph);

struct Prf
{
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

Prf make_prf(long long matched, long long system, long long gold);

struct EdgeCounts
{
  long long gold = 0;
  long long system = 0;
  long long matched = 0;
};

struct SentenceScore
{
  Prf exact;
  Prf coarse;
  EdgeCounts exact_counts;
  EdgeCounts coarse_counts;
};

struct EvalReport
{
  Prf elas_exact;
  Prf elas_coarse;
  EdgeCounts exact_counts;
  EdgeCounts coarse_counts;
  double uas = 0.0;
  double las = 0.0;
  bool has_basic = false;
  int dropped_paths = 0;
  std::vector<SentenceScore> per_sentence;
};

/// Size of the multiset intersection of two sorted edge lists.
long long matched_edges(const std::vector<WordEdge> & gold, const std::vector<WordEdge> & system);

/// Enhanced labeled F1 over collapsed edges, labels truncated at ':' when coarse is set.
Prf elas(const std::vector<Sentence> & gold, const std::vector<Sentence> & system, bool coarse,
         EdgeCounts * counts = nullptr);

struct AttachmentScores
{
  double uas = 0.0;
  double las = 0.0;
};

AttachmentScores uas_las(const std::vector<Sentence> & gold, const std::vector<Sentence> & system);

/// Full evaluation including UAS/LAS when both sides carry basic trees.
EvalReport evaluate(const std::vector<Sentence> & gold, const std::vector<Sentence> & system);

/// Human-readable table followed by a key=value block with four decimals.
void print_report(std::ostream & out, const EvalReport & report, bool coarse_only);

}  // namespace eud

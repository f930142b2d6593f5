#pragma once

#include "eud/conllu.hpp"
#include "eud/evaluate.hpp"
#include "eud/graph.hpp"
#include "eud/model.hpp"

#include <random>
#include <string>
#include <vector>

namespace eud::testkit
{
struct SentenceShape
{
  int min_tokens = 1;
  int max_tokens = 8;
  double empty_node_rate = 0.15;  // per regular token
  double extra_edge_rate = 0.2;   // per regular token
  double multiword_rate = 0.3;    // per sentence
  std::vector<std::string> forms;
  std::vector<std::string> labels;  // enhanced labels; "root" is always used for ROOT edges
  std::vector<std::string> basic_labels;
  bool rich_columns = true;  // random lemma/upos/feats/misc and comments
};

SentenceShape default_shape();

/// Random sentence that passes validate_level2: a basic tree copied into DEPS, extra heads,
/// empty nodes routed between regular tokens, and at most one multiword range.
Sentence random_sentence(std::mt19937_64 & rng, const SentenceShape & shape, int index = 0);
std::vector<Sentence> random_treebank(std::uint64_t seed, int count, const SentenceShape & shape);

/// Edges (h, d) for every h != d, d >= 1, each with probability p; labels "a" or "b".
EudGraph random_digraph(std::mt19937_64 & rng, int m, double p, bool with_empty_nodes);

/// The 20-sentence treebank used by the overfit checks: at most 50 forms and 5 labels,
/// sentence 0 has a token with two heads, sentence 1 has an empty node.
std::vector<Sentence> overfit_treebank();

/// Sentence built from (head, dep, label) triples over n regular tokens; HEAD/DEPREL from
/// the first listed head of each token.
Sentence sentence_from_edges(int n, const std::vector<std::tuple<int, int, std::string>> & edges);

// ---- oracles -------------------------------------------------------------------------

/// Heads per dependent 1..n straight from the definition: probability above threshold,
/// else the single most probable head, scanning heads upward with strict comparison.
std::vector<std::vector<int>> brute_decode(const Matrix & arc, double threshold);

/// Argmax label id by linear scan.
int brute_argmax(const Eigen::Ref<const Eigen::RowVectorXd> & row);

/// Greedy pairwise matching of gold and system edges (each edge matches at most once).
long long brute_matched(const std::vector<WordEdge> & gold, const std::vector<WordEdge> & system);

/// Best head vector over every arborescence rooted at 0 by exhaustive enumeration.
std::vector<int> brute_arborescence(const Matrix & weights, double * best_weight = nullptr);
double tree_weight(const Matrix & weights, const std::vector<int> & heads);

struct NaiveLoss
{
  double edge = 0.0;
  double label = 0.0;
};

/// Per-element cross-entropies written from probabilities, without log-space tricks.
NaiveLoss naive_eud_loss(const ScoreMatrices & scores, const GoldTargets & gold);
double naive_tree_loss(const ScoreMatrices & scores, const GoldTargets & gold, const std::vector<bool> & empty);

struct GradientReport
{
  std::string tensor;
  double max_relative_error = 0.0;
  long long entries = 0;
};

/// Compares every parameter entry's analytic gradient of the total loss with a central
/// difference of the given step. Relative error is |a - n| / max(|a|, |n|, floor).
std::vector<GradientReport> check_gradients(Model & model, const ModelInput & input, const GoldTargets & gold,
                                            double step = 1e-4, double floor = 1e-6);

/// Small trainable configuration: dim 16, 256 hash buckets, 16 hidden units, no dropout.
Hyperparams small_hyper(bool mtl = false);

/// Small model of the given shape with random parameters.
Model tiny_model(int dim, int ff, int labels, bool mtl, std::uint64_t seed, int tree_labels = 3);

/// Sentence of n regular tokens (plus optional empty node after token 1) whose DEPS use
/// labels L0..L(k-1) and basic labels T0..T(k-1).
Sentence tiny_sentence(std::mt19937_64 & rng, int n, int labels, bool empty_node, int tree_labels = 3);

}  // namespace eud::testkit

#pragma once

#include "eud/conllu.hpp"
#include "eud/encoder.hpp"
#include "eud/tensor.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace eud
{
class ModelError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Parser hyperparameters. Defaults are the base-encoder profile.
struct Hyperparams
{
  EncoderConfig encoder;
  int edge_ff = 300;
  int label_ff = 300;
  double input_dropout = 0.35;
  double dropout = 0.35;
  double edge_threshold = 0.5;
  double lambda = 0.10;
  bool mtl_enabled = false;
  double mtl_weight = 0.5;

  /// Throws ModelError when a field is out of range.
  void validate() const;
};

/// Distinct labels in first-seen order. Unknown labels map to kFallback.
class LabelVocab
{
public:
  static constexpr int kFallback = -1;

  LabelVocab() = default;
  explicit LabelVocab(std::vector<std::string> labels);

  int add(const std::string & label);
  int id(const std::string & label) const;
  const std::string & label(int id) const { return labels_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(labels_.size()); }
  bool empty() const { return labels_.empty(); }
  const std::vector<std::string> & labels() const { return labels_; }

  bool operator==(const LabelVocab & other) const { return labels_ == other.labels_; }

private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> index_;
};

LabelVocab enhanced_label_vocab(const std::vector<Sentence> & sentences);
LabelVocab basic_label_vocab(const std::vector<Sentence> & sentences);

/// One-hidden-layer MLP over the concatenation [r_h ; r_d].
struct PairScorerParams
{
  Matrix hidden_weight;  // ff x 2*dim
  Vector hidden_bias;
  Matrix output_weight;  // outputs x ff
  Vector output_bias;

  static PairScorerParams initialize(int dim, int ff, int outputs, std::mt19937_64 & rng);
  PairScorerParams zeros_like() const;

  template <typename F>
  void for_each_tensor(const std::string & prefix, F && f)
  {
    f(prefix + ".hidden_weight", hidden_weight);
    f(prefix + ".hidden_bias", hidden_bias);
    f(prefix + ".output_weight", output_weight);
    f(prefix + ".output_bias", output_bias);
  }
};

/// Basic-tree head: rectified head/dependent projections scored by bilinear forms.
struct BiaffineParams
{
  Matrix arc_head_weight;  // ff x dim
  Vector arc_head_bias;
  Matrix arc_dep_weight;
  Vector arc_dep_bias;
  Matrix arc_bilinear;  // ff x ff
  Vector arc_head_term;  // ff
  Matrix label_head_weight;  // label_ff x dim
  Vector label_head_bias;
  Matrix label_dep_weight;
  Vector label_dep_bias;
  std::vector<Matrix> label_bilinear;  // one label_ff x label_ff per label
  Matrix label_linear;  // labels x 2*label_ff
  Vector label_bias;

  static BiaffineParams initialize(int dim, int ff, int label_ff, int labels, std::mt19937_64 & rng);
  BiaffineParams zeros_like() const;

  template <typename F>
  void for_each_tensor(F && f)
  {
    f("tree.arc_head_weight", arc_head_weight);
    f("tree.arc_head_bias", arc_head_bias);
    f("tree.arc_dep_weight", arc_dep_weight);
    f("tree.arc_dep_bias", arc_dep_bias);
    f("tree.arc_bilinear", arc_bilinear);
    f("tree.arc_head_term", arc_head_term);
    f("tree.label_head_weight", label_head_weight);
    f("tree.label_head_bias", label_head_bias);
    f("tree.label_dep_weight", label_dep_weight);
    f("tree.label_dep_bias", label_dep_bias);
    for (std::size_t l = 0; l < label_bilinear.size(); ++l) {
      f("tree.label_bilinear." + std::to_string(l), label_bilinear[l]);
    }
    f("tree.label_linear", label_linear);
    f("tree.label_bias", label_bias);
  }
};

struct ModelParams
{
  EncoderParams encoder;
  PairScorerParams edge;
  PairScorerParams label;
  std::optional<BiaffineParams> tree;

  ModelParams zeros_like() const;

  /// Visits every tensor in a fixed order with (name, Matrix& or Vector&).
  template <typename F>
  void for_each_tensor(F && f)
  {
    encoder.for_each_tensor(f);
    edge.for_each_tensor("edge", f);
    label.for_each_tensor("label", f);
    if (tree) {
      tree->for_each_tensor(f);
    }
  }
};

struct Model
{
  Hyperparams hyper;
  LabelVocab labels;
  LabelVocab tree_labels;
  ModelParams params;

  static Model initialize(const Hyperparams & hyper, LabelVocab labels, LabelVocab tree_labels,
                          std::uint64_t seed);
};

/// Scores for a sentence of n nodes (tokens plus empty nodes). Dependent d in 1..n lives in
/// column d-1; pair-indexed tensors use row h*n + (d-1). Self pairs hold masked_score().
struct ScoreMatrices
{
  int n = 0;
  Matrix arc;         // (n+1) x n
  Matrix label;       // (n+1)*n x |L|
  Matrix tree_arc;    // (n+1) x n, present iff the tree head is enabled
  Matrix tree_label;  // (n+1)*n x |L_tree|

  static Eigen::Index pair(int head, int dep, int n) { return static_cast<Eigen::Index>(head) * n + dep - 1; }
  double arc_score(int head, int dep) const { return arc(head, dep - 1); }
  bool has_tree() const { return tree_arc.size() > 0; }
};

/// Model-ready view of a sentence.
struct ModelInput
{
  SubwordAlignment alignment;
  std::vector<bool> empty_node;  // size n+1; index 0 is ROOT

  int n() const { return alignment.token_count(); }
};

struct LabeledArc
{
  int head;
  int dep;
  int label;
};

struct GoldTargets
{
  std::vector<LabeledArc> edges;
  std::vector<int> tree_head;   // size n+1, -1 where no basic head applies
  std::vector<int> tree_label;  // size n+1
};

struct LossTerms
{
  double edge_loss = 0.0;
  double label_loss = 0.0;
  double eud_loss = 0.0;
  std::optional<double> tree_loss;
  double tree_head_loss = 0.0;
  double tree_label_loss = 0.0;
  double total = 0.0;
};

/// Encoder input strings: FORM for every node, "_" for empty nodes without one.
std::vector<std::string> node_forms(const Sentence & sentence);
ModelInput make_input(const Sentence & sentence, const EncoderConfig & config);
/// Gold arcs and basic tree as indices; throws ModelError on labels outside the vocabularies.
GoldTargets make_targets(const Sentence & sentence, const Model & model);

struct PairTrace
{
  Matrix activation;  // rectified hidden layer, rows are pairs
  Matrix mask;        // empty when dropout is off
};

struct BiaffineTrace
{
  Matrix arc_head, arc_dep, arc_head_act, arc_dep_act, arc_head_mask, arc_dep_mask;
  Matrix label_head, label_dep, label_head_act, label_dep_act, label_head_mask, label_dep_mask;
};

struct ForwardTrace
{
  EncoderTrace encoder;
  Matrix tokens;
  PairTrace edge;
  PairTrace label;
  BiaffineTrace tree;
};

/// MLP scores for all (n+1) x n slots; returns a P x outputs matrix in pair layout.
Matrix score_pairs(const Matrix & tokens, const PairScorerParams & params, const Dropout & dropout,
                   PairTrace * trace = nullptr);
Matrix score_edges(const Matrix & tokens, const PairScorerParams & params, const Dropout & dropout = {},
                   PairTrace * trace = nullptr);
Matrix score_labels(const Matrix & tokens, const PairScorerParams & params, const Dropout & dropout = {},
                    PairTrace * trace = nullptr);
/// Fills tree_arc and tree_label of `scores`; empty nodes never head or depend in the tree.
void biaffine_tree_scores(const Matrix & tokens, const BiaffineParams & params,
                          const std::vector<bool> & empty_node, const Dropout & dropout,
                          ScoreMatrices & scores, BiaffineTrace * trace = nullptr);

ScoreMatrices score(const Model & model, const ModelInput & input, const Dropout & dropout = {},
                    ForwardTrace * trace = nullptr);

/// Gradient of the total loss with respect to each score tensor.
struct ScoreGradients
{
  Matrix arc, label, tree_arc, tree_label;
};

/// Sigmoid/softmax cross-entropies from raw scores and their interpolation.
LossTerms eud_loss(const ScoreMatrices & scores, const GoldTargets & gold, const Hyperparams & hyper);
/// Head plus label softmax cross-entropy of the tree head, averaged over headed tokens.
double tree_loss(const ScoreMatrices & scores, const GoldTargets & gold, const std::vector<bool> & empty_node,
                 double * head_part = nullptr, double * label_part = nullptr);
/// Weighted combination; `tree` must be present iff the tree head is enabled.
double total_loss(const LossTerms & eud, std::optional<double> tree, double tree_weight = 0.5);

/// Full loss with gradients of the total w.r.t. scores.
LossTerms loss_with_gradients(const ScoreMatrices & scores, const GoldTargets & gold,
                              const std::vector<bool> & empty_node, const Hyperparams & hyper,
                              ScoreGradients * grad);

void backward(const Model & model, const ForwardTrace & trace, const ScoreGradients & grad,
              const std::vector<bool> & empty_node, ModelParams & out);

/// Forward, loss, and accumulated parameter gradient for one sentence.
LossTerms train_step_gradient(const Model & model, const ModelInput & input, const GoldTargets & gold,
                              const Dropout & dropout, ModelParams & grad);

}  // namespace eud

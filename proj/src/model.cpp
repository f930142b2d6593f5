#include "eud/model.hpp"

#include "eud/graph.hpp"

#include <cmath>

namespace eud
{
namespace
{
Matrix rectify_with_dropout(const Matrix & pre, double rate, const Dropout & dropout,
                            Matrix & activation, Matrix & mask)
{
  activation = relu(pre);
  if (dropout.active() && rate > 0.0) {
    mask = dropout_mask(pre.rows(), pre.cols(), rate, *dropout.rng);
    return activation.cwiseProduct(mask);
  }
  mask.resize(0, 0);
  return activation;
}

/// Backprop through rectifier and dropout.
Matrix rectify_backward(Matrix grad, const Matrix & activation, const Matrix & mask)
{
  if (mask.size() > 0) {
    grad.array() *= mask.array();
  }
  grad.array() *= (activation.array() > 0.0).cast<double>();
  return grad;
}

/// Rectified projection R * W^T + b, with rows of masked nodes zeroed.
Matrix project(const Matrix & tokens, const Matrix & weight, const Vector & bias,
               const std::vector<bool> & empty_node, double rate, const Dropout & dropout,
               Matrix & activation, Matrix & mask)
{
  Matrix pre = (tokens * weight.transpose()).rowwise() + bias.transpose();
  Matrix out = rectify_with_dropout(pre, rate, dropout, activation, mask);
  for (std::size_t i = 1; i < empty_node.size(); ++i) {
    if (empty_node[i]) {
      out.row(static_cast<Eigen::Index>(i)).setZero();
      activation.row(static_cast<Eigen::Index>(i)).setZero();
    }
  }
  return out;
}

bool tree_candidate(int head, int dep, const std::vector<bool> & empty_node)
{
  return head != dep && !empty_node[static_cast<std::size_t>(head)] &&
         !empty_node[static_cast<std::size_t>(dep)];
}

}  // namespace

void Hyperparams::validate() const
{
  if (!(edge_threshold > 0.0 && edge_threshold < 1.0)) {
    throw ModelError("edge threshold must lie strictly between 0 and 1");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw ModelError("loss interpolation lambda must lie in [0, 1]");
  }
  if (!(mtl_weight >= 0.0 && mtl_weight <= 1.0)) {
    throw ModelError("multitask weight must lie in [0, 1]");
  }
  if (!(input_dropout >= 0.0 && input_dropout < 1.0) || !(dropout >= 0.0 && dropout < 1.0)) {
    throw ModelError("dropout rates must lie in [0, 1)");
  }
  if (edge_ff <= 0 || label_ff <= 0 || encoder.dim <= 0 || encoder.vocab_size <= 0 ||
      encoder.layers < 0 || encoder.window < 0 || encoder.ngram <= 0) {
    throw ModelError("layer sizes must be positive");
  }
}

LabelVocab::LabelVocab(std::vector<std::string> labels)
{
  for (auto & label : labels) {
    add(label);
  }
}

int LabelVocab::add(const std::string & label)
{
  const auto [it, inserted] = index_.emplace(label, size());
  if (inserted) {
    labels_.push_back(label);
  }
  return it->second;
}

int LabelVocab::id(const std::string & label) const
{
  const auto it = index_.find(label);
  return it == index_.end() ? kFallback : it->second;
}

LabelVocab enhanced_label_vocab(const std::vector<Sentence> & sentences)
{
  LabelVocab vocab;
  for (const auto & sentence : sentences) {
    for (const auto & token : sentence.tokens) {
      for (const auto & dep : token.deps) {
        vocab.add(dep.label);
      }
    }
  }
  return vocab;
}

LabelVocab basic_label_vocab(const std::vector<Sentence> & sentences)
{
  LabelVocab vocab;
  for (const auto & sentence : sentences) {
    for (const auto & token : sentence.tokens) {
      if (!token.id.is_empty_node() && token.head) {
        vocab.add(token.deprel);
      }
    }
  }
  return vocab;
}

PairScorerParams PairScorerParams::initialize(int dim, int ff, int outputs, std::mt19937_64 & rng)
{
  PairScorerParams p;
  p.hidden_weight = glorot(ff, 2 * dim, rng);
  p.hidden_bias = Vector::Zero(ff);
  p.output_weight = glorot(outputs, ff, rng);
  p.output_bias = Vector::Zero(outputs);
  return p;
}

PairScorerParams PairScorerParams::zeros_like() const
{
  PairScorerParams p;
  p.hidden_weight = Matrix::Zero(hidden_weight.rows(), hidden_weight.cols());
  p.hidden_bias = Vector::Zero(hidden_bias.size());
  p.output_weight = Matrix::Zero(output_weight.rows(), output_weight.cols());
  p.output_bias = Vector::Zero(output_bias.size());
  return p;
}

BiaffineParams BiaffineParams::initialize(int dim, int ff, int label_ff, int labels, std::mt19937_64 & rng)
{
  BiaffineParams p;
  p.arc_head_weight = glorot(ff, dim, rng);
  p.arc_head_bias = Vector::Zero(ff);
  p.arc_dep_weight = glorot(ff, dim, rng);
  p.arc_dep_bias = Vector::Zero(ff);
  p.arc_bilinear = glorot(ff, ff, rng);
  p.arc_head_term = Vector::Zero(ff);
  p.label_head_weight = glorot(label_ff, dim, rng);
  p.label_head_bias = Vector::Zero(label_ff);
  p.label_dep_weight = glorot(label_ff, dim, rng);
  p.label_dep_bias = Vector::Zero(label_ff);
  for (int l = 0; l < labels; ++l) {
    p.label_bilinear.push_back(glorot(label_ff, label_ff, rng));
  }
  p.label_linear = glorot(labels, 2 * label_ff, rng);
  p.label_bias = Vector::Zero(labels);
  return p;
}

BiaffineParams BiaffineParams::zeros_like() const
{
  BiaffineParams p = *this;
  p.for_each_tensor([](const std::string &, auto & tensor) { tensor.setZero(); });
  return p;
}

ModelParams ModelParams::zeros_like() const
{
  ModelParams p;
  p.encoder = encoder.zeros_like();
  p.edge = edge.zeros_like();
  p.label = label.zeros_like();
  if (tree) {
    p.tree = tree->zeros_like();
  }
  return p;
}

Model Model::initialize(const Hyperparams & hyper, LabelVocab labels, LabelVocab tree_labels,
                        std::uint64_t seed)
{
  hyper.validate();
  if (labels.empty()) {
    throw ModelError("enhanced label vocabulary is empty");
  }
  if (hyper.mtl_enabled && tree_labels.empty()) {
    throw ModelError("basic label vocabulary is empty");
  }
  std::mt19937_64 rng(seed);
  Model model;
  model.hyper = hyper;
  model.labels = std::move(labels);
  model.tree_labels = std::move(tree_labels);
  const int dim = hyper.encoder.dim;
  model.params.encoder = EncoderParams::initialize(hyper.encoder, rng);
  model.params.edge = PairScorerParams::initialize(dim, hyper.edge_ff, 1, rng);
  model.params.label = PairScorerParams::initialize(dim, hyper.label_ff, model.labels.size(), rng);
  if (hyper.mtl_enabled) {
    model.params.tree = BiaffineParams::initialize(dim, hyper.edge_ff, hyper.label_ff,
                                                   model.tree_labels.size(), rng);
  }
  return model;
}

std::vector<std::string> node_forms(const Sentence & sentence)
{
  std::vector<std::string> forms;
  forms.reserve(sentence.tokens.size());
  for (const auto & token : sentence.tokens) {
    forms.push_back(token.form.empty() ? std::string("_") : token.form);
  }
  return forms;
}

ModelInput make_input(const Sentence & sentence, const EncoderConfig & config)
{
  ModelInput input;
  input.alignment = subword_tokenize(node_forms(sentence), config);
  input.empty_node.assign(sentence.tokens.size() + 1, false);
  for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
    input.empty_node[i + 1] = sentence.tokens[i].id.is_empty_node();
  }
  return input;
}

GoldTargets make_targets(const Sentence & sentence, const Model & model)
{
  const auto graph = to_graph(sentence);
  GoldTargets gold;
  for (const auto & edge : graph.edges()) {
    const int label = model.labels.id(edge.label);
    if (label == LabelVocab::kFallback) {
      throw ModelError("enhanced label '" + edge.label + "' is not in the training vocabulary");
    }
    gold.edges.push_back({edge.head, edge.dep, label});
  }
  const auto n = sentence.tokens.size();
  gold.tree_head.assign(n + 1, -1);
  gold.tree_label.assign(n + 1, -1);
  if (model.hyper.mtl_enabled) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto & token = sentence.tokens[i];
      if (token.id.is_empty_node() || !token.head) {
        continue;
      }
      const int head = graph.index_of(*token.head);
      if (head < 0 || graph.is_empty_node(head) || head == static_cast<int>(i) + 1) {
        throw ModelError("token " + token.id.str() + " has an invalid basic head");
      }
      const int label = model.tree_labels.id(token.deprel);
      if (label == LabelVocab::kFallback) {
        throw ModelError("basic label '" + token.deprel + "' is not in the training vocabulary");
      }
      gold.tree_head[i + 1] = head;
      gold.tree_label[i + 1] = label;
    }
  }
  return gold;
}

Matrix score_pairs(const Matrix & tokens, const PairScorerParams & params, const Dropout & dropout,
                   PairTrace * trace)
{
  const int n = static_cast<int>(tokens.rows()) - 1;
  const Eigen::Index dim = tokens.cols();
  if (params.hidden_weight.cols() != 2 * dim) {
    throw ModelError("pair scorer expects inputs of width " +
                     std::to_string(params.hidden_weight.cols() / 2));
  }
  const Eigen::Index ff = params.hidden_weight.rows();
  const Matrix head_part = tokens * params.hidden_weight.leftCols(dim).transpose();
  const Matrix dep_part = tokens * params.hidden_weight.rightCols(dim).transpose();
  const Eigen::Index pairs = static_cast<Eigen::Index>(n + 1) * n;
  Matrix pre(pairs, ff);
  for (int h = 0; h <= n; ++h) {
    for (int d = 1; d <= n; ++d) {
      const auto p = ScoreMatrices::pair(h, d, n);
      if (h == d) {
        pre.row(p).setZero();
      } else {
        pre.row(p) = head_part.row(h) + dep_part.row(d) + params.hidden_bias.transpose();
      }
    }
  }
  Matrix activation, mask;
  const Matrix hidden = rectify_with_dropout(pre, dropout.hidden_rate, dropout, activation, mask);
  Matrix out = (hidden * params.output_weight.transpose()).rowwise() + params.output_bias.transpose();
  for (int d = 1; d <= n; ++d) {
    out.row(ScoreMatrices::pair(d, d, n)).setConstant(masked_score());
  }
  if (trace) {
    trace->activation = std::move(activation);
    trace->mask = std::move(mask);
  }
  return out;
}

Matrix score_edges(const Matrix & tokens, const PairScorerParams & params, const Dropout & dropout,
                   PairTrace * trace)
{
  const int n = static_cast<int>(tokens.rows()) - 1;
  const Matrix flat = score_pairs(tokens, params, dropout, trace);
  Matrix arc(n + 1, n);
  for (int h = 0; h <= n; ++h) {
    for (int d = 1; d <= n; ++d) {
      arc(h, d - 1) = flat(ScoreMatrices::pair(h, d, n), 0);
    }
  }
  return arc;
}

Matrix score_labels(const Matrix & tokens, const PairScorerParams & params, const Dropout & dropout,
                    PairTrace * trace)
{
  if (params.output_weight.rows() == 0) {
    throw ModelError("label scorer has an empty label vocabulary");
  }
  return score_pairs(tokens, params, dropout, trace);
}

void biaffine_tree_scores(const Matrix & tokens, const BiaffineParams & params,
                          const std::vector<bool> & empty_node, const Dropout & dropout,
                          ScoreMatrices & scores, BiaffineTrace * trace)
{
  const int n = static_cast<int>(tokens.rows()) - 1;
  BiaffineTrace local;
  BiaffineTrace & t = trace ? *trace : local;
  const double rate = dropout.hidden_rate;
  t.arc_head = project(tokens, params.arc_head_weight, params.arc_head_bias, empty_node, rate,
                       dropout, t.arc_head_act, t.arc_head_mask);
  t.arc_dep = project(tokens, params.arc_dep_weight, params.arc_dep_bias, empty_node, rate, dropout,
                      t.arc_dep_act, t.arc_dep_mask);
  t.label_head = project(tokens, params.label_head_weight, params.label_head_bias, empty_node, rate,
                         dropout, t.label_head_act, t.label_head_mask);
  t.label_dep = project(tokens, params.label_dep_weight, params.label_dep_bias, empty_node, rate,
                        dropout, t.label_dep_act, t.label_dep_mask);

  const Matrix full = (t.arc_head * params.arc_bilinear * t.arc_dep.transpose()).colwise() +
                      t.arc_head * params.arc_head_term;
  scores.tree_arc.resize(n + 1, n);
  for (int h = 0; h <= n; ++h) {
    for (int d = 1; d <= n; ++d) {
      scores.tree_arc(h, d - 1) = tree_candidate(h, d, empty_node) ? full(h, d) : masked_score();
    }
  }

  const auto label_count = static_cast<Eigen::Index>(params.label_bilinear.size());
  const Eigen::Index lff = params.label_head_weight.rows();
  scores.tree_label.resize(static_cast<Eigen::Index>(n + 1) * n, label_count);
  for (Eigen::Index l = 0; l < label_count; ++l) {
    const Vector head_term = t.label_head * params.label_linear.row(l).head(lff).transpose();
    const Vector dep_term = t.label_dep * params.label_linear.row(l).tail(lff).transpose();
    const Matrix z = t.label_head * params.label_bilinear[static_cast<std::size_t>(l)] *
                     t.label_dep.transpose();
    for (int h = 0; h <= n; ++h) {
      for (int d = 1; d <= n; ++d) {
        scores.tree_label(ScoreMatrices::pair(h, d, n), l) =
          tree_candidate(h, d, empty_node)
            ? z(h, d) + head_term(h) + dep_term(d) + params.label_bias(l)
            : masked_score();
      }
    }
  }
}

ScoreMatrices score(const Model & model, const ModelInput & input, const Dropout & dropout,
                    ForwardTrace * trace)
{
  const auto encoded =
    encode(input.alignment, model.params.encoder, dropout, trace ? &trace->encoder : nullptr);
  ScoreMatrices scores;
  scores.n = input.n();
  scores.arc = score_edges(encoded.tokens, model.params.edge, dropout, trace ? &trace->edge : nullptr);
  scores.label =
    score_labels(encoded.tokens, model.params.label, dropout, trace ? &trace->label : nullptr);
  if (model.params.tree) {
    biaffine_tree_scores(encoded.tokens, *model.params.tree, input.empty_node, dropout, scores,
                         trace ? &trace->tree : nullptr);
  }
  if (trace) {
    trace->tokens = encoded.tokens;
  }
  return scores;
}

namespace
{
struct EudParts
{
  double edge = 0.0;
  double label = 0.0;
};

EudParts eud_parts(const ScoreMatrices & scores, const GoldTargets & gold, Matrix * grad_arc,
                   double arc_coef, Matrix * grad_label, double label_coef)
{
  const int n = scores.n;
  EudParts parts;
  if (n == 0) {
    return parts;
  }
  Matrix target = Matrix::Zero(n + 1, n);
  for (const auto & e : gold.edges) {
    target(e.head, e.dep - 1) = 1.0;
  }
  const double candidates = static_cast<double>(n) * n;
  if (grad_arc) {
    grad_arc->setZero(n + 1, n);
  }
  for (int h = 0; h <= n; ++h) {
    for (int d = 1; d <= n; ++d) {
      if (h == d) {
        continue;
      }
      const double s = scores.arc(h, d - 1);
      const double y = target(h, d - 1);
      parts.edge += sigmoid_cross_entropy(s, y);
      if (grad_arc) {
        (*grad_arc)(h, d - 1) = arc_coef * (sigmoid(s) - y) / candidates;
      }
    }
  }
  parts.edge /= candidates;

  if (grad_label) {
    grad_label->setZero(scores.label.rows(), scores.label.cols());
  }
  if (!gold.edges.empty()) {
    const double count = static_cast<double>(gold.edges.size());
    for (const auto & e : gold.edges) {
      const auto row = ScoreMatrices::pair(e.head, e.dep, n);
      const Vector z = scores.label.row(row).transpose();
      parts.label += log_sum_exp(z) - z(e.label);
      if (grad_label) {
        Vector g = softmax(z);
        g(e.label) -= 1.0;
        grad_label->row(row) += (label_coef / count) * g.transpose();
      }
    }
    parts.label /= count;
  }
  return parts;
}

struct TreeParts
{
  double head = 0.0;
  double label = 0.0;
};

TreeParts tree_parts(const ScoreMatrices & scores, const GoldTargets & gold,
                     const std::vector<bool> & empty_node, Matrix * grad_arc, Matrix * grad_label,
                     double coef)
{
  const int n = scores.n;
  TreeParts parts;
  if (grad_arc) {
    grad_arc->setZero(n + 1, n);
  }
  if (grad_label) {
    grad_label->setZero(scores.tree_label.rows(), scores.tree_label.cols());
  }
  int headed = 0;
  for (int d = 1; d <= n; ++d) {
    if (gold.tree_head[static_cast<std::size_t>(d)] >= 0) {
      ++headed;
    }
  }
  if (headed == 0) {
    return parts;
  }
  const double scale = coef / headed;
  for (int d = 1; d <= n; ++d) {
    const int gold_head = gold.tree_head[static_cast<std::size_t>(d)];
    if (gold_head < 0) {
      continue;
    }
    std::vector<int> heads;
    for (int h = 0; h <= n; ++h) {
      if (tree_candidate(h, d, empty_node)) {
        heads.push_back(h);
      }
    }
    Vector z(static_cast<Eigen::Index>(heads.size()));
    Eigen::Index gold_slot = -1;
    for (std::size_t k = 0; k < heads.size(); ++k) {
      z(static_cast<Eigen::Index>(k)) = scores.tree_arc(heads[k], d - 1);
      if (heads[k] == gold_head) {
        gold_slot = static_cast<Eigen::Index>(k);
      }
    }
    if (gold_slot < 0) {
      throw ModelError("gold basic head is not a tree candidate");
    }
    parts.head += log_sum_exp(z) - z(gold_slot);
    if (grad_arc) {
      Vector g = softmax(z);
      g(gold_slot) -= 1.0;
      for (std::size_t k = 0; k < heads.size(); ++k) {
        (*grad_arc)(heads[k], d - 1) = scale * g(static_cast<Eigen::Index>(k));
      }
    }
    const auto row = ScoreMatrices::pair(gold_head, d, n);
    const Vector zl = scores.tree_label.row(row).transpose();
    const int gold_label = gold.tree_label[static_cast<std::size_t>(d)];
    parts.label += log_sum_exp(zl) - zl(gold_label);
    if (grad_label) {
      Vector g = softmax(zl);
      g(gold_label) -= 1.0;
      grad_label->row(row) = scale * g.transpose();
    }
  }
  parts.head /= headed;
  parts.label /= headed;
  return parts;
}

}  // namespace

LossTerms eud_loss(const ScoreMatrices & scores, const GoldTargets & gold, const Hyperparams & hyper)
{
  const auto parts = eud_parts(scores, gold, nullptr, 0.0, nullptr, 0.0);
  LossTerms terms;
  terms.edge_loss = parts.edge;
  terms.label_loss = parts.label;
  terms.eud_loss = hyper.lambda * parts.label + (1.0 - hyper.lambda) * parts.edge;
  terms.total = terms.eud_loss;
  return terms;
}

double tree_loss(const ScoreMatrices & scores, const GoldTargets & gold, const std::vector<bool> & empty_node,
                 double * head_part, double * label_part)
{
  if (!scores.has_tree()) {
    throw ModelError("tree loss requested without a tree head");
  }
  const auto parts = tree_parts(scores, gold, empty_node, nullptr, nullptr, 0.0);
  if (head_part) {
    *head_part = parts.head;
  }
  if (label_part) {
    *label_part = parts.label;
  }
  return parts.head + parts.label;
}

double total_loss(const LossTerms & eud, std::optional<double> tree, double tree_weight)
{
  if (!tree) {
    return eud.eud_loss;
  }
  return (1.0 - tree_weight) * eud.eud_loss + tree_weight * *tree;
}

LossTerms loss_with_gradients(const ScoreMatrices & scores, const GoldTargets & gold,
                              const std::vector<bool> & empty_node, const Hyperparams & hyper,
                              ScoreGradients * grad)
{
  const bool tree = scores.has_tree();
  const double eud_weight = tree ? 1.0 - hyper.mtl_weight : 1.0;
  const auto parts =
    eud_parts(scores, gold, grad ? &grad->arc : nullptr, eud_weight * (1.0 - hyper.lambda),
              grad ? &grad->label : nullptr, eud_weight * hyper.lambda);
  LossTerms terms;
  terms.edge_loss = parts.edge;
  terms.label_loss = parts.label;
  terms.eud_loss = hyper.lambda * parts.label + (1.0 - hyper.lambda) * parts.edge;
  if (tree) {
    const auto tp = tree_parts(scores, gold, empty_node, grad ? &grad->tree_arc : nullptr,
                               grad ? &grad->tree_label : nullptr, hyper.mtl_weight);
    terms.tree_head_loss = tp.head;
    terms.tree_label_loss = tp.label;
    terms.tree_loss = tp.head + tp.label;
  }
  terms.total = total_loss(terms, terms.tree_loss, hyper.mtl_weight);
  return terms;
}

namespace
{
/// Backprop of score_pairs; grad_out is P x outputs with zero rows at self pairs.
void pair_backward(const Matrix & tokens, const PairScorerParams & params, const PairTrace & trace,
                   const Matrix & grad_out, PairScorerParams & grad, Matrix & grad_tokens)
{
  const int n = static_cast<int>(tokens.rows()) - 1;
  const Eigen::Index dim = tokens.cols();
  Matrix hidden = trace.activation;
  if (trace.mask.size() > 0) {
    hidden.array() *= trace.mask.array();
  }
  grad.output_weight += grad_out.transpose() * hidden;
  grad.output_bias += grad_out.colwise().sum().transpose();
  const Matrix grad_pre =
    rectify_backward(grad_out * params.output_weight, trace.activation, trace.mask);
  grad.hidden_bias += grad_pre.colwise().sum().transpose();
  Matrix grad_head = Matrix::Zero(n + 1, grad_pre.cols());
  Matrix grad_dep = Matrix::Zero(n + 1, grad_pre.cols());
  for (int h = 0; h <= n; ++h) {
    for (int d = 1; d <= n; ++d) {
      if (h == d) {
        continue;
      }
      const auto p = ScoreMatrices::pair(h, d, n);
      grad_head.row(h) += grad_pre.row(p);
      grad_dep.row(d) += grad_pre.row(p);
    }
  }
  grad.hidden_weight.leftCols(dim) += grad_head.transpose() * tokens;
  grad.hidden_weight.rightCols(dim) += grad_dep.transpose() * tokens;
  grad_tokens += grad_head * params.hidden_weight.leftCols(dim) +
                 grad_dep * params.hidden_weight.rightCols(dim);
}

void projection_backward(const Matrix & tokens, const Matrix & weight, const Matrix & grad_out,
                         const Matrix & activation, const Matrix & mask, Matrix & grad_weight,
                         Vector & grad_bias, Matrix & grad_tokens)
{
  // Masked (empty) rows have zero activation, so the rectifier gate already blocks them.
  const Matrix grad_pre = rectify_backward(grad_out, activation, mask);
  grad_weight += grad_pre.transpose() * tokens;
  grad_bias += grad_pre.colwise().sum().transpose();
  grad_tokens += grad_pre * weight;
}

void biaffine_backward(const Matrix & tokens, const BiaffineParams & params, const BiaffineTrace & t,
                       const ScoreGradients & grad_scores, const std::vector<bool> & empty_node,
                       BiaffineParams & grad, Matrix & grad_tokens)
{
  const int n = static_cast<int>(tokens.rows()) - 1;
  Matrix grad_full = Matrix::Zero(n + 1, n + 1);
  for (int h = 0; h <= n; ++h) {
    for (int d = 1; d <= n; ++d) {
      if (tree_candidate(h, d, empty_node)) {
        grad_full(h, d) = grad_scores.tree_arc(h, d - 1);
      }
    }
  }
  const Vector row_sums = grad_full.rowwise().sum();
  grad.arc_bilinear += t.arc_head.transpose() * grad_full * t.arc_dep;
  grad.arc_head_term += t.arc_head.transpose() * row_sums;
  const Matrix grad_head = grad_full * t.arc_dep * params.arc_bilinear.transpose() +
                           row_sums * params.arc_head_term.transpose();
  const Matrix grad_dep = grad_full.transpose() * t.arc_head * params.arc_bilinear;
  projection_backward(tokens, params.arc_head_weight, grad_head, t.arc_head_act, t.arc_head_mask,
                      grad.arc_head_weight, grad.arc_head_bias, grad_tokens);
  projection_backward(tokens, params.arc_dep_weight, grad_dep, t.arc_dep_act, t.arc_dep_mask,
                      grad.arc_dep_weight, grad.arc_dep_bias, grad_tokens);

  const Eigen::Index lff = params.label_head_weight.rows();
  Matrix grad_lhead = Matrix::Zero(n + 1, lff);
  Matrix grad_ldep = Matrix::Zero(n + 1, lff);
  for (std::size_t l = 0; l < params.label_bilinear.size(); ++l) {
    const auto li = static_cast<Eigen::Index>(l);
    Matrix gz = Matrix::Zero(n + 1, n + 1);
    for (int h = 0; h <= n; ++h) {
      for (int d = 1; d <= n; ++d) {
        if (tree_candidate(h, d, empty_node)) {
          gz(h, d) = grad_scores.tree_label(ScoreMatrices::pair(h, d, n), li);
        }
      }
    }
    if (gz.isZero(0.0)) {
      continue;
    }
    const Vector rows = gz.rowwise().sum();
    const Vector cols = gz.colwise().sum().transpose();
    const auto & bilinear = params.label_bilinear[l];
    grad.label_bilinear[l] += t.label_head.transpose() * gz * t.label_dep;
    grad.label_linear.row(li).head(lff) += (t.label_head.transpose() * rows).transpose();
    grad.label_linear.row(li).tail(lff) += (t.label_dep.transpose() * cols).transpose();
    grad.label_bias(li) += gz.sum();
    grad_lhead += gz * t.label_dep * bilinear.transpose() +
                  rows * params.label_linear.row(li).head(lff);
    grad_ldep += gz.transpose() * t.label_head * bilinear +
                 cols * params.label_linear.row(li).tail(lff);
  }
  projection_backward(tokens, params.label_head_weight, grad_lhead, t.label_head_act,
                      t.label_head_mask, grad.label_head_weight, grad.label_head_bias, grad_tokens);
  projection_backward(tokens, params.label_dep_weight, grad_ldep, t.label_dep_act, t.label_dep_mask,
                      grad.label_dep_weight, grad.label_dep_bias, grad_tokens);
}

}  // namespace

void backward(const Model & model, const ForwardTrace & trace, const ScoreGradients & grad,
              const std::vector<bool> & empty_node, ModelParams & out)
{
  const auto & tokens = trace.tokens;
  const int n = static_cast<int>(tokens.rows()) - 1;
  Matrix grad_tokens = Matrix::Zero(tokens.rows(), tokens.cols());

  Matrix grad_arc_flat = Matrix::Zero(static_cast<Eigen::Index>(n + 1) * n, 1);
  for (int h = 0; h <= n; ++h) {
    for (int d = 1; d <= n; ++d) {
      if (h != d) {
        grad_arc_flat(ScoreMatrices::pair(h, d, n), 0) = grad.arc(h, d - 1);
      }
    }
  }
  pair_backward(tokens, model.params.edge, trace.edge, grad_arc_flat, out.edge, grad_tokens);

  Matrix grad_label = grad.label;
  for (int d = 1; d <= n; ++d) {
    grad_label.row(ScoreMatrices::pair(d, d, n)).setZero();
  }
  pair_backward(tokens, model.params.label, trace.label, grad_label, out.label, grad_tokens);

  if (model.params.tree) {
    biaffine_backward(tokens, *model.params.tree, trace.tree, grad, empty_node, *out.tree, grad_tokens);
  }
  encode_backward(trace.encoder, model.params.encoder, grad_tokens, out.encoder);
}

LossTerms train_step_gradient(const Model & model, const ModelInput & input, const GoldTargets & gold,
                              const Dropout & dropout, ModelParams & grad)
{
  ForwardTrace trace;
  const auto scores = score(model, input, dropout, &trace);
  ScoreGradients score_grad;
  const auto terms = loss_with_gradients(scores, gold, input.empty_node, model.hyper, &score_grad);
  backward(model, trace, score_grad, input.empty_node, grad);
  return terms;
}

}  // namespace eud

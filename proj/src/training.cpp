#include "eud/training.hpp"

#include "eud/evaluate.hpp"
#include "eud/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace eud
{
namespace
{
std::vector<Eigen::Map<Eigen::VectorXd>> flat_views(ModelParams & params)
{
  std::vector<Eigen::Map<Eigen::VectorXd>> out;
  params.for_each_tensor(
    [&](const std::string &, auto & tensor) { out.emplace_back(tensor.data(), tensor.size()); });
  return out;
}

void set_zero(ModelParams & params)
{
  params.for_each_tensor([](const std::string &, auto & tensor) { tensor.setZero(); });
}

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t epoch, std::uint64_t index, std::uint64_t purpose)
{
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32), static_cast<std::uint32_t>(purpose)};
  return std::mt19937_64(seq);
}

struct Example
{
  ModelInput input;
  GoldTargets gold;
};

}  // namespace

std::vector<Sentence> concat_treebanks(const std::vector<NamedTreebank> & treebanks)
{
  std::vector<Sentence> out;
  for (const auto & bank : treebanks) {
    for (const auto & sentence : bank.sentences) {
      Sentence copy = sentence;
      copy.comments.insert(copy.comments.begin(), "# source = " + bank.name);
      out.push_back(std::move(copy));
    }
  }
  return out;
}

void Optimizer::step(ModelParams & params, ModelParams & grad)
{
  auto p = flat_views(params);
  auto g = flat_views(grad);
  if (p.size() != g.size()) {
    throw TrainingError("gradient layout does not match parameters");
  }
  ++steps_;
  const double lr = config_.learning_rate;
  if (config_.optimizer == OptimizerKind::Sgd) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] -= lr * g[i];
    }
    return;
  }
  if (m_.empty()) {
    for (const auto & t : p) {
      m_.push_back(Eigen::VectorXd::Zero(t.size()));
      v_.push_back(Eigen::VectorXd::Zero(t.size()));
    }
  }
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < p.size(); ++i) {
    m_[i] = b1 * m_[i] + (1.0 - b1) * g[i];
    v_[i] = b2 * v_[i] + (1.0 - b2) * g[i].cwiseAbs2();
    p[i].array() -= lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + config_.epsilon);
  }
}

double dev_elas(const Model & model, const std::vector<Sentence> & sentences)
{
  const auto parsed = parse_sentences(model, sentences);
  return elas(sentences, parsed, false).f1;
}

TrainResult train(const std::vector<Sentence> & train_data, const std::vector<Sentence> & dev_data,
                  const Hyperparams & hyper, const TrainConfig & config, const TrainHooks & hooks)
{
  hyper.validate();
  config.validate();
  TrainResult result;

  std::vector<Sentence> kept;
  for (std::size_t i = 0; i < train_data.size(); ++i) {
    const auto violations = validate_level2(train_data[i]);
    if (train_data[i].tokens.empty() || !violations.empty()) {
      result.skipped.push_back(i);
      if (hooks.warn) {
        hooks.warn("skipping training sentence " + std::to_string(i + 1) + ": " +
                   (violations.empty() ? std::string("no tokens") : violations.front().message));
      }
      continue;
    }
    kept.push_back(train_data[i]);
  }
  if (kept.empty()) {
    throw TrainingError("no valid training sentences");
  }

  auto labels = enhanced_label_vocab(kept);
  if (labels.empty()) {
    throw TrainingError("training data has no enhanced labels");
  }
  auto tree_labels = hyper.mtl_enabled ? basic_label_vocab(kept) : LabelVocab{};
  if (hyper.mtl_enabled && tree_labels.empty()) {
    throw TrainingError("multitask training needs basic dependency labels");
  }
  Model model = Model::initialize(hyper, std::move(labels), std::move(tree_labels), config.seed);

  std::vector<Example> examples;
  examples.reserve(kept.size());
  for (const auto & sentence : kept) {
    examples.push_back({make_input(sentence, hyper.encoder), make_targets(sentence, model)});
  }
  const auto & dev = dev_data.empty() ? kept : dev_data;

  Optimizer optimizer(config);
  ModelParams grad = model.params.zeros_like();
  std::vector<std::size_t> order(examples.size());
  std::vector<double> dev_history;
  double best = -1.0;
  int stale = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto shuffle_rng = stream(config.seed, static_cast<std::uint64_t>(epoch), 0, 1);
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    const std::size_t batch = static_cast<std::size_t>(config.batch_size);
    for (std::size_t start = 0, b = 0; start < order.size(); start += batch, ++b) {
      const std::size_t stop = std::min(order.size(), start + batch);
      set_zero(grad);
      double batch_loss = 0.0;
      for (std::size_t k = start; k < stop; ++k) {
        const auto index = order[k];
        auto rng = stream(config.seed, static_cast<std::uint64_t>(epoch), index, 2);
        const Dropout dropout{hyper.input_dropout, hyper.dropout, &rng};
        batch_loss += train_step_gradient(model, examples[index].input, examples[index].gold, dropout, grad).total;
      }
      if (!std::isfinite(batch_loss)) {
        throw TrainingError("non-finite loss in epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(b + 1));
      }
      const double scale = 1.0 / static_cast<double>(stop - start);
      grad.for_each_tensor([&](const std::string &, auto & tensor) { tensor *= scale; });
      optimizer.step(model.params, grad);
      loss_sum += batch_loss;
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(examples.size());
    try {
      record.dev_elas = dev_elas(model, dev);
    } catch (const std::exception & e) {
      throw TrainingError("dev decode failed in epoch " + std::to_string(epoch) + ": " + e.what());
    }
    dev_history.push_back(record.dev_elas);
    record.improved = record.dev_elas > best;
    if (record.improved) {
      best = record.dev_elas;
      stale = 0;
      result.best = Checkpoint{model, config, epoch, dev_history};
    } else {
      ++stale;
    }
    result.history.push_back(record);
    result.epochs_run = epoch;
    if (hooks.on_epoch) {
      hooks.on_epoch(record);
    }
    if (config.patience > 0 && stale >= config.patience) {
      break;
    }
  }
  return result;
}

}  // namespace eud

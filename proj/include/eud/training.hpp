#pragma once

#include "eud/checkpoint.hpp"
#include "eud/config.hpp"
#include "eud/conllu.hpp"
#include "eud/model.hpp"

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace eud
{
class TrainingError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct NamedTreebank
{
  std::string name;
  std::vector<Sentence> sentences;
};

/// Concatenates in the given order and prepends "# source = <name>" to every sentence.
std::vector<Sentence> concat_treebanks(const std::vector<NamedTreebank> & treebanks);

/// Adam or plain SGD over a flat view of ModelParams.
class Optimizer
{
public:
  explicit Optimizer(const TrainConfig & config) : config_(config) {}

  /// params -= step(grad); both must share the same tensor layout.
  void step(ModelParams & params, ModelParams & grad);
  long long steps() const { return steps_; }

private:
  TrainConfig config_;
  long long steps_ = 0;
  std::vector<Eigen::VectorXd> m_;
  std::vector<Eigen::VectorXd> v_;
};

struct EpochRecord
{
  int epoch = 0;
  double train_loss = 0.0;  // mean total loss over sentences
  double dev_elas = 0.0;    // exact ELAS F1
  bool improved = false;
};

struct TrainResult
{
  Checkpoint best;
  std::vector<EpochRecord> history;
  int epochs_run = 0;
  std::vector<std::size_t> skipped;  // train indices that failed level-2 validation
};

struct TrainHooks
{
  std::function<void(const std::string &)> warn;
  std::function<void(const EpochRecord &)> on_epoch;
};

/// Seeded, single-threaded loop with best-dev model selection. An empty dev set falls
/// back to the (filtered) training set.
TrainResult train(const std::vector<Sentence> & train_data, const std::vector<Sentence> & dev_data,
                  const Hyperparams & hyper, const TrainConfig & config, const TrainHooks & hooks = {});

/// Exact ELAS F1 of the model's parse of `sentences` against themselves.
double dev_elas(const Model & model, const std::vector<Sentence> & sentences);

}  // namespace eud

#include "eud/checkpoint.hpp"
#include "eud/training.hpp"
#include "testkit.hpp"

#include <doctest.h>

#include <algorithm>

using namespace eud;

namespace
{
TrainConfig quick(int epochs, double lr = 0.01)
{
  TrainConfig t;
  t.epochs = epochs;
  t.batch_size = 4;
  t.learning_rate = lr;
  t.seed = 5;
  t.patience = 0;
  return t;
}

std::string params_bytes(const Model & model)
{
  return serialize_checkpoint(Checkpoint{model, TrainConfig{}, 0, {}});
}

}  // namespace

TEST_CASE("concatenation keeps order, size, and tags the source")
{
  const auto a = testkit::random_treebank(1, 3, testkit::default_shape());
  const auto b = testkit::random_treebank(2, 4, testkit::default_shape());
  const auto joined = concat_treebanks({{"A", a}, {"B", b}});
  REQUIRE(joined.size() == 7);
  CHECK(joined[0].comments.front() == "# source = A");
  CHECK(joined[3].comments.front() == "# source = B");
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(joined[i].tokens == a[i].tokens);
  }
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(joined[3 + i].tokens == b[i].tokens);
    CHECK(std::equal(b[i].comments.begin(), b[i].comments.end(), joined[3 + i].comments.begin() + 1));
  }
  const auto va = enhanced_label_vocab(a);
  const auto vb = enhanced_label_vocab(b);
  const auto vj = enhanced_label_vocab(joined);
  for (const auto * v : {&va, &vb}) {
    for (int i = 0; i < v->size(); ++i) {
      CHECK(vj.id(v->label(i)) != LabelVocab::kFallback);
    }
  }
  for (int i = 0; i < vj.size(); ++i) {
    CHECK((va.id(vj.label(i)) != LabelVocab::kFallback || vb.id(vj.label(i)) != LabelVocab::kFallback));
  }
}

TEST_CASE("a zero learning rate leaves parameters at their initial values")
{
  const auto bank = testkit::overfit_treebank();
  const auto hyper = testkit::small_hyper();
  for (const auto kind : {OptimizerKind::Adam, OptimizerKind::Sgd}) {
    auto config = quick(2, 0.0);
    config.optimizer = kind;
    const auto result = train(bank, {}, hyper, config);
    const auto initial = Model::initialize(hyper, enhanced_label_vocab(bank), LabelVocab{}, config.seed);
    CHECK(params_bytes(result.best.model) == params_bytes(initial));
  }
}

TEST_CASE("patience zero runs every epoch and training is deterministic")
{
  const auto bank = testkit::overfit_treebank();
  const auto config = quick(4);
  const auto first = train(bank, {}, testkit::small_hyper(), config);
  const auto second = train(bank, {}, testkit::small_hyper(), config);
  CHECK(first.epochs_run == 4);
  CHECK(first.history.size() == 4);
  CHECK(serialize_checkpoint(first.best) == serialize_checkpoint(second.best));
  for (std::size_t i = 0; i < first.history.size(); ++i) {
    CHECK(first.history[i].train_loss == second.history[i].train_loss);
  }
  auto other = config;
  other.seed = 6;
  CHECK(serialize_checkpoint(train(bank, {}, testkit::small_hyper(), other).best) !=
        serialize_checkpoint(first.best));
}

TEST_CASE("early stopping and best checkpoint selection")
{
  const auto bank = testkit::overfit_treebank();
  auto config = quick(40, 0.0);
  config.patience = 2;
  const auto result = train(bank, {}, testkit::small_hyper(), config);
  // Nothing can improve after the first epoch.
  CHECK(result.epochs_run == 3);
  CHECK(result.best.epoch == 1);
  CHECK(result.history[0].improved);
  CHECK_FALSE(result.history[1].improved);
}

TEST_CASE("one sentence is memorized")
{
  const std::vector<Sentence> one{testkit::overfit_treebank()[0]};
  const auto hyper = testkit::small_hyper();
  const auto result = train(one, {}, hyper, quick(200, 0.02));
  // Without dropout or a tree head the logged loss is the EUD loss itself.
  CHECK(result.history.back().train_loss < 0.01);
  CHECK(result.history.back().train_loss < result.history.front().train_loss);
  CHECK(dev_elas(result.best.model, one) == 1.0);
}

TEST_CASE("invalid sentences are skipped with a warning")
{
  auto bank = testkit::overfit_treebank();
  bank[2].tokens[1].deps.front().head = NodeId{99, 0};
  bank.push_back(Sentence{});
  std::vector<std::string> warnings;
  TrainHooks hooks;
  hooks.warn = [&](const std::string & w) { warnings.push_back(w); };
  const auto result = train(bank, {}, testkit::small_hyper(), quick(1), hooks);
  CHECK(result.skipped == std::vector<std::size_t>{2, 20});
  REQUIRE(warnings.size() == 2);
  CHECK(warnings[0].find("sentence 3") != std::string::npos);
  CHECK_THROWS_AS(train({Sentence{}}, {}, testkit::small_hyper(), quick(1)), TrainingError);
}

TEST_CASE("multitask training needs basic labels")
{
  auto bank = testkit::overfit_treebank();
  for (auto & s : bank) {
    for (auto & t : s.tokens) {
      t.head.reset();
      t.deprel.clear();
    }
  }
  CHECK_THROWS_AS(train(bank, {}, testkit::small_hyper(true), quick(1)), TrainingError);
}

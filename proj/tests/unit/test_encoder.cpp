#include "eud/encoder.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace eud;

namespace
{
EncoderConfig small_config(int layers = 2)
{
  EncoderConfig c;
  c.dim = 6;
  c.vocab_size = 50;
  c.layers = layers;
  c.window = 2;
  return c;
}

}  // namespace

TEST_CASE("single short token is one piece")
{
  const auto a = subword_tokenize({"a"}, EncoderConfig{});
  CHECK(a.piece_count() == 1);
  CHECK(a.token_first == std::vector<int>{0});
}

TEST_CASE("pieces are concatenated in token order")
{
  // "abcd" has 4 code points: whole-token piece plus two trigrams.
  const auto a = subword_tokenize({"abcd", "c"}, EncoderConfig{});
  CHECK(a.piece_count() == 4);
  CHECK(a.token_first == std::vector<int>{0, 3});
  // Multi-byte characters count once.
  const auto u = subword_tokenize({"naïve"}, EncoderConfig{});
  CHECK(u.piece_count() == 4);
  const auto three = subword_tokenize({"abc"}, EncoderConfig{});
  CHECK(three.piece_count() == 1);
}

TEST_CASE("ten-token sentence alignment is strictly increasing and in range")
{
  const std::vector<std::string> tokens{"The", "quick", "brown", "fox", "jumps", "over", "the", "lazy", "dog", "."};
  EncoderConfig config;
  const auto a = subword_tokenize(tokens, config);
  REQUIRE(a.token_count() == 10);
  CHECK(a.token_first.front() == 0);
  CHECK(a.token_first.back() < a.piece_count());
  for (std::size_t i = 1; i < a.token_first.size(); ++i) {
    CHECK(a.token_first[i] > a.token_first[i - 1]);
  }
  for (const int p : a.pieces) {
    CHECK(p >= 0);
    CHECK(p < config.vocab_size);
  }
  CHECK(subword_tokenize(tokens, config).pieces == a.pieces);
  // Whole-token hash differs from a trigram with the same spelling.
  CHECK(subword_tokenize({"fox"}, config).pieces[0] != subword_tokenize({"xfox"}, config).pieces[2]);
}

TEST_CASE("filter_first picks first-subword rows")
{
  Matrix e(3, 2);
  e << 1, 2, 3, 4, 5, 6;
  SubwordAlignment a{{7, 8, 9}, {0, 2}};
  const Matrix r = filter_first(e, a);
  REQUIRE(r.rows() == 2);
  CHECK(r.row(0) == e.row(0));
  CHECK(r.row(1) == e.row(2));

  SubwordAlignment identity{{1, 2, 3}, {0, 1, 2}};
  CHECK(filter_first(e, identity) == e);

  SubwordAlignment bad{{1}, {0, 3}};
  CHECK_THROWS_AS(filter_first(e, bad), std::out_of_range);
}

TEST_CASE("filter_first rows are copies of subword rows")
{
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int n_pieces = 1 + static_cast<int>(rng() % 12);
    const Matrix e = Matrix::Random(n_pieces, 4);
    SubwordAlignment a;
    a.pieces.assign(static_cast<std::size_t>(n_pieces), 0);
    for (int p = 0; p < n_pieces; ++p) {
      if (p == 0 || rng() % 2 == 0) {
        a.token_first.push_back(p);
      }
    }
    const Matrix r = filter_first(e, a);
    for (Eigen::Index j = 0; j < r.rows(); ++j) {
      bool found = false;
      for (Eigen::Index i = 0; i < e.rows(); ++i) {
        found = found || r.row(j) == e.row(i);
      }
      CHECK(found);
    }
  }
}

TEST_CASE("encode shapes, ROOT row, and determinism")
{
  std::mt19937_64 rng(1);
  const auto config = small_config();
  const auto params = EncoderParams::initialize(config, rng);
  const auto a = subword_tokenize({"hello"}, config);
  const auto out = encode(a, params);
  CHECK(out.tokens.rows() == 2);
  CHECK(out.tokens.cols() == config.dim);
  CHECK(out.subwords.rows() == a.piece_count());
  CHECK(out.tokens.row(0) == params.root.transpose());
  const auto again = encode(a, params);
  CHECK(again.tokens == out.tokens);

  const auto b = subword_tokenize({"x", "yy", "hello", "world"}, config);
  const auto longer = encode(b, params);
  CHECK(longer.tokens.rows() == 5);
  CHECK(longer.tokens.row(0) == params.root.transpose());
  for (int j = 0; j < 4; ++j) {
    CHECK(longer.tokens.row(j + 1) == longer.subwords.row(b.token_first[static_cast<std::size_t>(j)]));
  }
}

TEST_CASE("with no mixing layers R is the embedding of each first piece")
{
  std::mt19937_64 rng(2);
  const auto config = small_config(0);
  const auto params = EncoderParams::initialize(config, rng);
  const auto a = subword_tokenize({"abcdef", "g", "hij"}, config);
  const auto out = encode(a, params);
  for (int j = 0; j < 3; ++j) {
    CHECK(out.tokens.row(j + 1) == params.embedding.row(a.pieces[static_cast<std::size_t>(a.token_first[static_cast<std::size_t>(j)])]));
  }
}

TEST_CASE("dropout changes activations only when active")
{
  std::mt19937_64 rng(4);
  const auto config = small_config();
  const auto params = EncoderParams::initialize(config, rng);
  const auto a = subword_tokenize({"abcdef", "ghijk"}, config);
  std::mt19937_64 drop_rng(9);
  const auto dropped = encode(a, params, Dropout{0.35, 0.35, &drop_rng});
  const auto plain = encode(a, params);
  CHECK(dropped.tokens != plain.tokens);
  CHECK(encode(a, params, Dropout{0.35, 0.35, nullptr}).tokens == plain.tokens);
}

TEST_CASE("inverted dropout preserves the expected value")
{
  std::mt19937_64 rng(5);
  const double rate = 0.35;
  const Matrix mask = dropout_mask(400, 400, rate, rng);
  const double mean = mask.mean();
  CHECK(std::abs(mean - 1.0) < 0.01);
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    const double v = mask.data()[i];
    CHECK((v == 0.0 || std::abs(v - 1.0 / (1.0 - rate)) < 1e-15));
  }
}

TEST_CASE("mismatched parameters are a configuration error")
{
  std::mt19937_64 rng(6);
  auto config = small_config();
  auto params = EncoderParams::initialize(config, rng);
  params.config.dim = 8;
  CHECK_THROWS_AS(encode(subword_tokenize({"a"}, config), params), EncoderConfigError);
  auto bad_vocab = small_config();
  bad_vocab.vocab_size = 0;
  CHECK_THROWS_AS(EncoderParams::initialize(bad_vocab, rng), EncoderConfigError);
  auto out_of_range = EncoderParams::initialize(config, rng);
  SubwordAlignment a{{config.vocab_size}, {0}};
  CHECK_THROWS_AS(encode(a, out_of_range), EncoderConfigError);
}

TEST_CASE("encoder gradients match central differences")
{
  std::mt19937_64 rng(7);
  auto config = small_config();
  config.dim = 5;
  config.vocab_size = 30;
  auto params = EncoderParams::initialize(config, rng);
  for (auto & layer : params.layers) {
    layer.bias = Vector::Random(config.dim) * 0.3;
  }
  const auto a = subword_tokenize({"abcde", "fg", "hijkl", "m"}, config);
  const Matrix weights = Matrix::Random(5, config.dim);
  auto loss = [&] { return (encode(a, params).tokens.array() * weights.array()).sum(); };

  EncoderTrace trace;
  encode(a, params, Dropout{}, &trace);
  auto grad = params.zeros_like();
  encode_backward(trace, params, weights, grad);

  std::vector<Eigen::Map<Eigen::VectorXd>> analytic;
  grad.for_each_tensor([&](const std::string &, auto & t) { analytic.emplace_back(t.data(), t.size()); });
  std::size_t index = 0;
  params.for_each_tensor([&](const std::string & name, auto & tensor) {
    const auto & g = analytic[index++];
    double worst = 0.0;
    for (Eigen::Index i = 0; i < tensor.size(); ++i) {
      const double saved = tensor.data()[i];
      tensor.data()[i] = saved + 1e-4;
      const double up = loss();
      tensor.data()[i] = saved - 1e-4;
      const double down = loss();
      tensor.data()[i] = saved;
      const double numeric = (up - down) / 2e-4;
      worst = std::max(worst, std::abs(numeric - g(i)) / std::max({std::abs(numeric), std::abs(g(i)), 1e-6}));
    }
    INFO(name);
    CHECK(worst < 1e-4);
  });
}

#include "eud/encoder.hpp"

namespace eud
{
namespace
{
std::vector<std::string_view> code_points(std::string_view text)
{
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t length = 1;
    if (lead >= 0xF0) {
      length = 4;
    } else if (lead >= 0xE0) {
      length = 3;
    } else if (lead >= 0xC0) {
      length = 2;
    }
    length = std::min(length, text.size() - i);
    out.push_back(text.substr(i, length));
    i += length;
  }
  return out;
}

/// Average of rows within +-window, zero padded at the edges.
Matrix window_mix(const Matrix & rows, int window)
{
  const Eigen::Index n = rows.rows();
  Matrix out = Matrix::Zero(n, rows.cols());
  const double scale = 1.0 / static_cast<double>(2 * window + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto lo = std::max<Eigen::Index>(0, i - window);
    const auto hi = std::min<Eigen::Index>(n - 1, i + window);
    out.row(i) = rows.middleRows(lo, hi - lo + 1).colwise().sum() * scale;
  }
  return out;
}

}  // namespace

std::uint64_t fnv1a(std::string_view text, std::uint64_t seed)
{
  std::uint64_t hash = seed;
  for (const char c : text) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 1099511628211ULL;
  }
  return hash;
}

EncoderParams EncoderParams::initialize(const EncoderConfig & config, std::mt19937_64 & rng)
{
  if (config.dim <= 0 || config.vocab_size <= 0 || config.layers < 0 || config.window < 0 ||
      config.ngram <= 0) {
    throw EncoderConfigError("encoder dimensions must be positive");
  }
  EncoderParams params;
  params.config = config;
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(config.dim)));
  params.embedding.resize(config.vocab_size, config.dim);
  for (Eigen::Index j = 0; j < params.embedding.cols(); ++j) {
    for (Eigen::Index i = 0; i < params.embedding.rows(); ++i) {
      params.embedding(i, j) = normal(rng);
    }
  }
  for (int l = 0; l < config.layers; ++l) {
    params.layers.push_back({glorot(config.dim, config.dim, rng), Vector::Zero(config.dim)});
  }
  params.root.resize(config.dim);
  for (Eigen::Index i = 0; i < params.root.size(); ++i) {
    params.root(i) = normal(rng);
  }
  return params;
}

EncoderParams EncoderParams::zeros_like() const
{
  EncoderParams out;
  out.config = config;
  out.embedding = Matrix::Zero(embedding.rows(), embedding.cols());
  for (const auto & layer : layers) {
    out.layers.push_back(
      {Matrix::Zero(layer.weight.rows(), layer.weight.cols()), Vector::Zero(layer.bias.size())});
  }
  out.root = Vector::Zero(root.size());
  return out;
}

SubwordAlignment subword_tokenize(const std::vector<std::string> & tokens, const EncoderConfig & config)
{
  SubwordAlignment alignment;
  const auto vocab = static_cast<std::uint64_t>(config.vocab_size);
  const auto ngram = static_cast<std::size_t>(config.ngram);
  for (const auto & token : tokens) {
    alignment.token_first.push_back(alignment.piece_count());
    alignment.pieces.push_back(static_cast<int>(fnv1a(token, fnv1a("word:")) % vocab));
    const auto chars = code_points(token);
    if (chars.size() <= ngram) {
      continue;
    }
    for (std::size_t start = 0; start + ngram <= chars.size(); ++start) {
      std::string gram;
      for (std::size_t k = 0; k < ngram; ++k) {
        gram += chars[start + k];
      }
      alignment.pieces.push_back(static_cast<int>(fnv1a(gram, fnv1a("gram:")) % vocab));
    }
  }
  return alignment;
}

Matrix filter_first(const Matrix & subwords, const SubwordAlignment & alignment)
{
  Matrix out(alignment.token_count(), subwords.cols());
  for (int j = 0; j < alignment.token_count(); ++j) {
    const int position = alignment.token_first[static_cast<std::size_t>(j)];
    if (position < 0 || position >= subwords.rows()) {
      throw std::out_of_range("first-subword position " + std::to_string(position) +
                              " outside " + std::to_string(subwords.rows()) + " pieces");
    }
    out.row(j) = subwords.row(position);
  }
  return out;
}

EncodedSentence encode(const SubwordAlignment & alignment, const EncoderParams & params,
                       const Dropout & dropout, EncoderTrace * trace)
{
  const auto & config = params.config;
  if (params.embedding.cols() != config.dim || params.root.size() != config.dim ||
      params.embedding.rows() != config.vocab_size ||
      params.layers.size() != static_cast<std::size_t>(config.layers)) {
    throw EncoderConfigError("encoder parameters do not match the configured dimensions");
  }
  const Eigen::Index pieces = alignment.piece_count();
  Matrix hidden(pieces, config.dim);
  for (Eigen::Index i = 0; i < pieces; ++i) {
    const int id = alignment.pieces[static_cast<std::size_t>(i)];
    if (id < 0 || id >= config.vocab_size) {
      throw EncoderConfigError("subword id " + std::to_string(id) + " outside the vocabulary");
    }
    hidden.row(i) = params.embedding.row(id);
  }
  if (trace) {
    *trace = EncoderTrace{};
    trace->alignment = alignment;
  }
  if (dropout.active() && dropout.input_rate > 0.0) {
    Matrix mask = dropout_mask(pieces, config.dim, dropout.input_rate, *dropout.rng);
    hidden.array() *= mask.array();
    if (trace) {
      trace->input_mask = std::move(mask);
    }
  }
  for (const auto & layer : params.layers) {
    Matrix mixed = window_mix(hidden, config.window);
    Matrix activation = relu((mixed * layer.weight).rowwise() + layer.bias.transpose());
    Matrix update = activation;
    Matrix mask;
    if (dropout.active() && dropout.hidden_rate > 0.0) {
      mask = dropout_mask(pieces, config.dim, dropout.hidden_rate, *dropout.rng);
      update.array() *= mask.array();
    }
    if (trace) {
      trace->layer_inputs.push_back(hidden);
      trace->mixed.push_back(std::move(mixed));
      trace->activations.push_back(std::move(activation));
      trace->masks.push_back(std::move(mask));
    }
    hidden += update;
  }
  EncodedSentence out;
  out.tokens.resize(alignment.token_count() + 1, config.dim);
  out.tokens.row(0) = params.root.transpose();
  out.tokens.bottomRows(alignment.token_count()) = filter_first(hidden, alignment);
  out.subwords = std::move(hidden);
  return out;
}

void encode_backward(const EncoderTrace & trace, const EncoderParams & params,
                     const Matrix & grad_tokens, EncoderParams & grad)
{
  const auto & alignment = trace.alignment;
  const int dim = params.config.dim;
  grad.root += grad_tokens.row(0).transpose();
  Matrix grad_hidden = Matrix::Zero(alignment.piece_count(), dim);
  for (int j = 0; j < alignment.token_count(); ++j) {
    grad_hidden.row(alignment.token_first[static_cast<std::size_t>(j)]) += grad_tokens.row(j + 1);
  }
  for (int l = static_cast<int>(params.layers.size()) - 1; l >= 0; --l) {
    const auto idx = static_cast<std::size_t>(l);
    Matrix grad_pre = grad_hidden;
    if (trace.masks[idx].size() > 0) {
      grad_pre.array() *= trace.masks[idx].array();
    }
    grad_pre.array() *= (trace.activations[idx].array() > 0.0).cast<double>();
    grad.layers[idx].weight += trace.mixed[idx].transpose() * grad_pre;
    grad.layers[idx].bias += grad_pre.colwise().sum().transpose();
    // The window average is symmetric, so its adjoint is itself.
    grad_hidden += window_mix(grad_pre * params.layers[idx].weight.transpose(), params.config.window);
  }
  if (trace.input_mask.size() > 0) {
    grad_hidden.array() *= trace.input_mask.array();
  }
  for (int i = 0; i < alignment.piece_count(); ++i) {
    grad.embedding.row(alignment.pieces[static_cast<std::size_t>(i)]) += grad_hidden.row(i);
  }
}

}  // namespace eud

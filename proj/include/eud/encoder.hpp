#pragma once

#include "eud/tensor.hpp"

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace eud
{
/// Subword pieces of a sentence and the position of each token's first piece.
struct SubwordAlignment
{
  std::vector<int> pieces;
  std::vector<int> token_first;

  int piece_count() const { return static_cast<int>(pieces.size()); }
  int token_count() const { return static_cast<int>(token_first.size()); }
};

struct EncoderConfig
{
  int dim = 768;
  int vocab_size = 16384;
  int layers = 2;
  int window = 2;
  int ngram = 3;
};

class EncoderConfigError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct MixLayer
{
  Matrix weight;  // dim x dim, applied as rows * weight
  Vector bias;
};

struct EncoderParams
{
  EncoderConfig config;
  Matrix embedding;  // vocab_size x dim
  std::vector<MixLayer> layers;
  Vector root;

  static EncoderParams initialize(const EncoderConfig & config, std::mt19937_64 & rng);
  /// Same shapes, all zeros.
  EncoderParams zeros_like() const;

  template <typename F>
  void for_each_tensor(F && f)
  {
    f("encoder.embedding", embedding);
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto prefix = "encoder.mix" + std::to_string(i);
      f(prefix + ".weight", layers[i].weight);
      f(prefix + ".bias", layers[i].bias);
    }
    f("encoder.root", root);
  }
};

/// E holds every subword vector; R row 0 is ROOT, rows 1..n the first-subword vectors.
struct EncodedSentence
{
  Matrix subwords;
  Matrix tokens;
};

/// Intermediate values kept for the backward pass.
struct EncoderTrace
{
  SubwordAlignment alignment;
  Matrix input_mask;                 // empty when dropout is off
  std::vector<Matrix> layer_inputs;  // H_0 .. H_{L-1}
  std::vector<Matrix> mixed;         // windowed averages fed to each layer
  std::vector<Matrix> activations;   // rectified, before dropout
  std::vector<Matrix> masks;
};

/// Deterministic hashed segmentation. Each token yields its whole-token hash first, then
/// (for tokens longer than the n-gram length) every character n-gram.
SubwordAlignment subword_tokenize(const std::vector<std::string> & tokens, const EncoderConfig & config);

/// Rows of E at each token's first piece.
Matrix filter_first(const Matrix & subwords, const SubwordAlignment & alignment);

EncodedSentence encode(const SubwordAlignment & alignment, const EncoderParams & params,
                       const Dropout & dropout = {}, EncoderTrace * trace = nullptr);

/// Accumulates into `grad` the gradient of a loss whose gradient w.r.t. R is `grad_tokens`.
void encode_backward(const EncoderTrace & trace, const EncoderParams & params,
                     const Matrix & grad_tokens, EncoderParams & grad);

std::uint64_t fnv1a(std::string_view text, std::uint64_t seed = 14695981039346656037ULL);

}  // namespace eud

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <random>

namespace eud
{
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;

/// Value stored in score slots that are not candidates (self pairs, masked nodes).
template <typename Scalar = double>
constexpr Scalar masked_score() { return -std::numeric_limits<Scalar>::infinity(); }

template <typename Scalar>
Scalar sigmoid(Scalar x)
{
  if (x >= Scalar(0)) {
    return Scalar(1) / (Scalar(1) + std::exp(-x));
  }
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

/// log(1 + exp(x)) without overflow.
template <typename Scalar>
Scalar softplus(Scalar x)
{
  return std::max(x, Scalar(0)) + std::log1p(std::exp(-std::abs(x)));
}

/// Binary cross-entropy of a logit against a 0/1 target, computed from the raw score.
template <typename Scalar>
Scalar sigmoid_cross_entropy(Scalar logit, Scalar target)
{
  return softplus(logit) - target * logit;
}

template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::DenseBase<Derived>& x)
{
  using Scalar = typename Derived::Scalar;
  const Scalar top = x.maxCoeff();
  if (!std::isfinite(top)) {
    return top;
  }
  return top + std::log((x.derived().array() - top).exp().sum());
}

template <typename Derived>
VectorX<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& x)
{
  using Scalar = typename Derived::Scalar;
  const Scalar top = x.maxCoeff();
  VectorX<Scalar> e = (x.array() - top).exp().matrix();
  return e / e.sum();
}

template <typename Derived>
VectorX<typename Derived::Scalar> log_softmax(const Eigen::MatrixBase<Derived>& x)
{
  return (x.array() - log_sum_exp(x)).matrix();
}

/// Elementwise rectifier.
template <typename Derived>
auto relu(const Eigen::MatrixBase<Derived>& x)
{
  return x.cwiseMax(typename Derived::Scalar(0));
}

/// Inverted-dropout keep mask: entries are 0 or 1/(1-rate).
inline Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, std::mt19937_64& rng)
{
  Matrix mask(rows, cols);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double scale = 1.0 / (1.0 - rate);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      mask(i, j) = uniform(rng) < rate ? 0.0 : scale;
    }
  }
  return mask;
}

/// Glorot-uniform initialisation.
inline Matrix glorot(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng)
{
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> uniform(-limit, limit);
  Matrix out(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      out(i, j) = uniform(rng);
    }
  }
  return out;
}

/// Stochastic state threaded through a forward pass; inactive when rng is null.
struct Dropout
{
  double input_rate = 0.0;
  double hidden_rate = 0.0;
  std::mt19937_64 * rng = nullptr;

  bool active() const { return rng != nullptr; }
};

}  // namespace eud

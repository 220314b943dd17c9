#pragma once

#include "../core.hpp"

namespace ffcnn {

struct LinearMap {
  Matrix weights;  // out x in
  Vector bias;     // out

  int input_dim() const { return static_cast<int>(weights.cols()); }
  int output_dim() const { return static_cast<int>(weights.rows()); }

  Matrix apply(const Matrix& inputs) const {
    require(inputs.cols() == weights.cols(), "LinearMap::apply: dimension mismatch");
    return (inputs * weights.transpose()).rowwise() + bias.transpose();
  }
};

// Ridge-regularized least squares fit of targets ~ inputs * W^T + b.
// The ridge strength scales with the data: lambda = lambda_scale *
// trace(G) / dim(G), where G is the Gram matrix of the bias-augmented
// inputs, so the damping is a relative perturbation rather than an
// absolute one.
inline LinearMap least_squares_fit(const Matrix& inputs, const Matrix& targets,
                                   double lambda_scale = 1e-6) {
  const auto n = inputs.rows();
  const auto d = inputs.cols();
  require(n >= 1, "least_squares_fit: empty input");
  require(targets.rows() == n, "least_squares_fit: row count mismatch");
  require(inputs.allFinite() && targets.allFinite(),
          "least_squares_fit: non-finite input");
  require(lambda_scale >= 0.0, "least_squares_fit: negative lambda_scale");

  // Gram of [inputs | 1] assembled blockwise.
  Matrix gram(d + 1, d + 1);
  gram.topLeftCorner(d, d).noalias() = inputs.transpose() * inputs;
  gram.col(d).head(d) = inputs.colwise().sum().transpose();
  gram.row(d).head(d) = gram.col(d).head(d).transpose();
  gram(d, d) = static_cast<double>(n);

  Matrix rhs(d + 1, targets.cols());
  rhs.topRows(d).noalias() = inputs.transpose() * targets;
  rhs.row(d) = targets.colwise().sum();

  double lambda = lambda_scale * gram.trace() / static_cast<double>(d + 1);
  gram.diagonal().array() += lambda;

  Matrix theta = gram.ldlt().solve(rhs);
  require(theta.allFinite(), "least_squares_fit: solve failed");

  LinearMap map;
  map.weights = theta.topRows(d).transpose();
  map.bias = theta.row(d).transpose();
  return map;
}

}  // namespace ffcnn

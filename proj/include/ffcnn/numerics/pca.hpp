#pragma once

#include "../core.hpp"

namespace ffcnn {

struct PCABasis {
  Vector mean;         // d
  Matrix components;   // d x m, columns ordered by descending eigenvalue
  Vector eigenvalues;  // m, nonincreasing, clamped at zero

  int input_dim() const { return static_cast<int>(mean.size()); }
  int output_dim() const { return static_cast<int>(components.cols()); }
};

// How many components to keep.
struct PCATarget {
  enum class Kind { Fixed, Energy };
  Kind kind = Kind::Fixed;
  int dim = 0;
  double energy = 0.0;

  static PCATarget fixed(int m) {
    PCATarget t;
    t.kind = Kind::Fixed;
    t.dim = m;
    return t;
  }
  static PCATarget by_energy(double e) {
    PCATarget t;
    t.kind = Kind::Energy;
    t.energy = e;
    return t;
  }
};

// Smallest m whose cumulative share of the (nonincreasing, nonnegative)
// eigenvalue mass reaches `energy`. Zero total mass keeps one component.
inline int energy_dim(const Vector& eigenvalues, double energy) {
  require(eigenvalues.size() > 0, "energy_dim: empty spectrum");
  require(energy > 0.0 && energy <= 1.0, "energy_dim: energy must be in (0,1]");
  double total = eigenvalues.sum();
  if (total <= 0.0) return 1;
  double cum = 0.0;
  for (int i = 0; i < eigenvalues.size(); ++i) {
    cum += eigenvalues[i];
    // tiny slack so energy = 1.0 is reachable despite rounding
    if (cum >= energy * total - 1e-12 * total) return i + 1;
  }
  return static_cast<int>(eigenvalues.size());
}

namespace detail {

// Deterministic sign: the largest-magnitude entry of each component is
// positive; ties on magnitude resolve to the lowest index.
inline void fix_component_signs(Matrix& components) {
  for (int c = 0; c < components.cols(); ++c) {
    int lead = 0;
    for (int r = 1; r < components.rows(); ++r)
      if (std::abs(components(r, c)) > std::abs(components(lead, c))) lead = r;
    if (components(lead, c) < 0.0) components.col(c) = -components.col(c);
  }
}

}  // namespace detail

// Eigendecomposition of the sample covariance (1/(n-1) normalization).
// Components come out orthonormal, eigenvalue-ordered, sign-fixed.
inline PCABasis fit_pca(const Matrix& samples, PCATarget target) {
  const int n = static_cast<int>(samples.rows());
  const int d = static_cast<int>(samples.cols());
  require(n >= 2, "fit_pca: need at least 2 samples");
  require(d >= 1, "fit_pca: need at least 1 feature");
  require(samples.allFinite(), "fit_pca: non-finite input");

  PCABasis basis;
  basis.mean = samples.colwise().mean();
  Matrix centered = samples.rowwise() - basis.mean.transpose();
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  cov = ((cov + cov.transpose()) * 0.5).eval();  // enforce symmetry

  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  require(eig.info() == Eigen::Success, "fit_pca: eigendecomposition failed");

  // Eigen returns ascending order; flip to descending and clamp the tiny
  // negatives rounding produces on rank-deficient covariances.
  Vector evals = eig.eigenvalues().reverse();
  Matrix evecs = eig.eigenvectors().rowwise().reverse();
  for (int i = 0; i < evals.size(); ++i) evals[i] = std::max(evals[i], 0.0);

  int m = 0;
  if (target.kind == PCATarget::Kind::Fixed) {
    require(target.dim >= 1 && target.dim <= d, "fit_pca: target dim out of range");
    m = target.dim;
  } else {
    m = energy_dim(evals, target.energy);
  }

  basis.components = evecs.leftCols(m);
  basis.eigenvalues = evals.head(m);
  detail::fix_component_signs(basis.components);
  return basis;
}

inline Matrix project_pca(const PCABasis& basis, const Matrix& samples) {
  require(samples.cols() == basis.mean.size(), "project_pca: dimension mismatch");
  return (samples.rowwise() - basis.mean.transpose()) * basis.components;
}

inline Matrix back_project_pca(const PCABasis& basis, const Matrix& projected) {
  require(projected.cols() == basis.components.cols(),
          "back_project_pca: dimension mismatch");
  return (projected * basis.components.transpose()).rowwise() +
         basis.mean.transpose();
}

}  // namespace ffcnn

#pragma once

#include "../core.hpp"

namespace ffcnn {

struct Clustering {
  Matrix centroids;             // k x d
  std::vector<int> assignment;  // n, values in [0,k)
  double inertia = 0.0;         // sum of squared distances to assigned centroid
  int iterations = 0;

  int k() const { return static_cast<int>(centroids.rows()); }
};

namespace detail {

// Squared distances of every sample to every centroid, n x k.
inline Matrix pairwise_sq(const Matrix& samples, const Matrix& centroids) {
  Vector sn = samples.rowwise().squaredNorm();
  Vector cn = centroids.rowwise().squaredNorm();
  Matrix d2 = -2.0 * (samples * centroids.transpose());
  d2.colwise() += sn;
  d2.rowwise() += cn.transpose();
  return d2.cwiseMax(0.0);
}

// k-means++ seeding: first centroid uniform, later ones proportional to the
// squared distance to the nearest centroid so far.
inline Matrix kmeanspp(const Matrix& samples, int k, Rng& rng) {
  const auto n = samples.rows();
  Matrix centroids(k, samples.cols());
  centroids.row(0) = samples.row(rng.next_index(n));
  Vector d2 =
      (samples.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double r = rng.next_unit() * total;
      double cum = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        cum += d2[i];
        if (cum > r) {
          pick = i;
          break;
        }
      }
    } else {
      // all remaining mass zero (duplicate points): fall back to uniform
      pick = static_cast<Eigen::Index>(rng.next_index(n));
    }
    centroids.row(c) = samples.row(pick);
    d2 = d2.cwiseMin(
        (samples.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }
  return centroids;
}

}  // namespace detail

// Lloyd's algorithm with k-means++ seeding. Deterministic for a given seed:
// distance ties assign to the lowest cluster index, and an emptied cluster is
// re-seeded with the farthest point of the largest surviving cluster (lowest
// index on ties). Stops when the relative inertia improvement drops below
// tol or assignments stop changing.
inline Clustering kmeans(const Matrix& samples, int k, std::uint64_t seed,
                         int max_iter = 300, double tol = 1e-4) {
  const auto n = samples.rows();
  const auto d = samples.cols();
  require(n >= 1, "kmeans: empty input");
  require(k >= 1 && k <= n, "kmeans: k out of range");
  require(samples.allFinite(), "kmeans: non-finite input");

  Rng rng(seed);
  Matrix centroids = detail::kmeanspp(samples, k, rng);

  Clustering result;
  result.assignment.assign(n, 0);
  double prev_inertia = -1.0;

  for (int iter = 0; iter < max_iter; ++iter) {
    // assignment step
    Matrix d2 = detail::pairwise_sq(samples, centroids);
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      for (int c = 1; c < k; ++c)
        if (d2(i, c) < d2(i, best)) best = c;
      result.assignment[i] = best;
      inertia += d2(i, best);
    }
    result.iterations = iter + 1;
    result.centroids = centroids;
    result.inertia = inertia;

    if (prev_inertia >= 0.0) {
      double improvement = prev_inertia - inertia;
      if (improvement <= tol * std::max(prev_inertia, 1e-300)) break;
    }
    prev_inertia = inertia;

    // update step
    Matrix sums = Matrix::Zero(k, d);
    std::vector<Eigen::Index> counts(k, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(result.assignment[i]) += samples.row(i);
      ++counts[result.assignment[i]];
    }
    for (int c = 0; c < k; ++c)
      if (counts[c] > 0) centroids.row(c) = sums.row(c) / static_cast<double>(counts[c]);

    // deterministic empty-cluster rule
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      int donor = 0;
      for (int x = 1; x < k; ++x)
        if (counts[x] > counts[donor]) donor = x;
      Eigen::Index far = -1;
      double far_d2 = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (result.assignment[i] != donor) continue;
        double dist = (samples.row(i) - centroids.row(donor)).squaredNorm();
        if (dist > far_d2) {
          far_d2 = dist;
          far = i;
        }
      }
      centroids.row(c) = samples.row(far);
      result.assignment[far] = c;
      --counts[donor];
      ++counts[c];
    }
  }
  return result;
}

}  // namespace ffcnn

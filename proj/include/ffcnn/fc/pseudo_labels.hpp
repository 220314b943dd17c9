#pragma once

#include "../numerics/kmeans.hpp"

namespace ffcnn {

// Intra-class clustering for one least-squares stage: class c's samples are
// split into its own quota of k-means clusters, and the union of clusters
// (class-pure by construction) becomes the stage's pseudo-label alphabet.
// Cluster ids are assigned contiguously in class order.
struct PseudoLabeling {
  int cluster_count = 0;
  std::vector<int> cluster_of_sample;
  std::vector<int> class_of_cluster;
  std::vector<int> quota;  // clusters actually allotted per class
};

inline PseudoLabeling make_pseudo_labels(const Matrix& features,
                                         const std::vector<int>& labels,
                                         int class_count, int target_clusters,
                                         std::uint64_t seed) {
  const auto n = features.rows();
  require(n == static_cast<Eigen::Index>(labels.size()),
          "make_pseudo_labels: feature/label count mismatch");
  require(class_count >= 1, "make_pseudo_labels: class_count must be positive");
  require(target_clusters >= class_count,
          "make_pseudo_labels: need at least one cluster per class");

  std::vector<std::vector<int>> rows_of_class(class_count);
  for (Eigen::Index i = 0; i < n; ++i) {
    require(labels[i] >= 0 && labels[i] < class_count,
            "make_pseudo_labels: label out of range");
    rows_of_class[labels[i]].push_back(static_cast<int>(i));
  }

  PseudoLabeling out;
  out.cluster_of_sample.assign(n, -1);
  out.quota.assign(class_count, 0);

  // target_clusters split as evenly as possible; the remainder goes to the
  // lowest class indices. A class with fewer samples than its quota (or none
  // at all) just keeps fewer clusters.
  const int base = target_clusters / class_count;
  const int extra = target_clusters % class_count;
  for (int c = 0; c < class_count; ++c) {
    int want = base + (c < extra ? 1 : 0);
    int have = static_cast<int>(rows_of_class[c].size());
    int k = std::min(want, have);
    out.quota[c] = k;
    if (k == 0) continue;

    Matrix x(have, features.cols());
    for (int i = 0; i < have; ++i) x.row(i) = features.row(rows_of_class[c][i]);
    Clustering clusters = kmeans(x, k, derive_seed(seed, 7, c));
    for (int i = 0; i < have; ++i)
      out.cluster_of_sample[rows_of_class[c][i]] =
          out.cluster_count + clusters.assignment[i];
    for (int j = 0; j < k; ++j) out.class_of_cluster.push_back(c);
    out.cluster_count += k;
  }
  return out;
}

inline Matrix one_hot(const std::vector<int>& ids, int dim) {
  Matrix out = Matrix::Zero(ids.size(), dim);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    require(ids[i] >= 0 && ids[i] < dim, "one_hot: id out of range");
    out(static_cast<Eigen::Index>(i), ids[i]) = 1.0;
  }
  return out;
}

}  // namespace ffcnn

#pragma once

#include "../numerics/least_squares.hpp"
#include "pseudo_labels.hpp"

namespace ffcnn {

// Stage widths of the least-squares FC cascade, final entry = class count.
// Hidden stages regress onto intra-class pseudo-labels and rectify; the last
// stage regresses onto the true one-hot labels and stays linear.
struct FCArch {
  std::vector<int> stage_dims;  // e.g. {120, 84, 10}
  int class_count = 10;

  void validate() const {
    require(!stage_dims.empty(), "fc arch: no stages");
    require(stage_dims.back() == class_count,
            "fc arch: last stage width must equal the class count");
    for (std::size_t i = 1; i < stage_dims.size(); ++i)
      require(stage_dims[i] < stage_dims[i - 1],
              "fc arch: stage widths must strictly decrease");
    require(stage_dims.front() >= class_count, "fc arch: widths below class count");
  }
};

struct FCStage {
  LinearMap map;
  bool rectified = true;

  Matrix apply(const Matrix& x) const {
    Matrix y = map.apply(x);
    if (rectified) y = y.cwiseMax(0.0);
    return y;
  }
};

struct FCModel {
  std::vector<FCStage> stages;

  int output_dim() const { return stages.back().map.output_dim(); }
};

inline FCStage fit_fc_stage(const Matrix& features, const Matrix& targets,
                            bool rectified, double lambda_scale = 1e-6) {
  FCStage stage;
  stage.map = least_squares_fit(features, targets, lambda_scale);
  stage.rectified = rectified;
  return stage;
}

// The full cascade. Each hidden stage re-clusters its own *input* features,
// so later stages see progressively class-shaped geometry. A hidden stage
// can come out narrower than the arch asks when small classes shrink their
// cluster quotas; `quota_shrunk` reports how many stage widths did.
inline FCModel fit_fc_module(const Matrix& features, const std::vector<int>& labels,
                             const FCArch& arch, std::uint64_t seed,
                             double lambda_scale = 1e-6,
                             int* quota_shrunk = nullptr) {
  arch.validate();
  require(features.rows() >= 2, "fit_fc_module: need at least 2 samples");

  FCModel model;
  if (quota_shrunk) *quota_shrunk = 0;
  Matrix x = features;
  for (std::size_t s = 0; s + 1 < arch.stage_dims.size(); ++s) {
    PseudoLabeling pl = make_pseudo_labels(x, labels, arch.class_count,
                                           arch.stage_dims[s], derive_seed(seed, s));
    if (quota_shrunk && pl.cluster_count < arch.stage_dims[s]) ++*quota_shrunk;
    FCStage stage = fit_fc_stage(x, one_hot(pl.cluster_of_sample, pl.cluster_count),
                                 /*rectified=*/true, lambda_scale);
    x = stage.apply(x);
    model.stages.push_back(std::move(stage));
  }
  model.stages.push_back(fit_fc_stage(x, one_hot(labels, arch.class_count),
                                      /*rectified=*/false, lambda_scale));
  return model;
}

inline Matrix apply_fc(const FCModel& model, const Matrix& features) {
  require(!model.stages.empty(), "apply_fc: empty model");
  Matrix x = features;
  for (const auto& stage : model.stages) x = stage.apply(x);
  return x;
}

}  // namespace ffcnn

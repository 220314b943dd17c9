#pragma once

#include "saab.hpp"

#include <limits>

namespace ffcnn {

struct ConvLayerSpec {
  int filter_size = 5;
  int kernel_count = 6;
};

// Exactly two Saab layers, each followed by (crop-to-even +) 2x2 max pool.
struct ConvArch {
  ConvLayerSpec layer1;
  ConvLayerSpec layer2;

  void validate() const {
    for (const auto& l : {layer1, layer2}) {
      require(l.filter_size == 3 || l.filter_size == 5,
              "conv arch: filter size must be 3 or 5");
      require(l.kernel_count >= 1, "conv arch: kernel count must be positive");
    }
  }
};

struct ConvModel {
  SaabLayer layer1;
  SaabLayer layer2;
};

// Pooled outputs of both layers for a whole set.
struct ConvOutputs {
  FeatureMap conv1;
  FeatureMap conv2;
};

namespace detail {

inline FeatureMap pool_stage(const FeatureMap& responses) {
  return max_pool(crop_to_even(responses));
}

// Fit one layer from `maps` without materializing every patch: stream image
// batches, track the exact max patch norm over all patches, and accumulate
// covariance from a seeded subsample of at most `cov_cap` patch rows.
inline SaabLayer fit_layer_streaming(const FeatureMap& maps, const ConvLayerSpec& spec,
                                     std::int64_t cov_cap, std::uint64_t seed) {
  const int s = spec.filter_size;
  require(s <= maps.width && s <= maps.height,
          "fit_conv_pipeline: filter size exceeds map extent");
  const std::int64_t per_image = patches_per_image(maps, s);
  const std::int64_t total = per_image * maps.count;
  const int dim = patch_dim(maps, s);
  require(spec.kernel_count <= dim, "fit_conv_pipeline: more kernels than patch dim");

  // Global patch indices entering the covariance, ascending.
  std::vector<std::int64_t> sampled;
  if (total <= cov_cap) {
    sampled.resize(total);
    for (std::int64_t i = 0; i < total; ++i) sampled[i] = i;
  } else {
    require(total <= std::numeric_limits<int>::max(),
            "fit_conv_pipeline: patch count overflow");
    Rng rng(seed);
    auto ints = sample_without_replacement(static_cast<int>(total),
                                           static_cast<int>(cov_cap), rng);
    sampled.assign(ints.begin(), ints.end());
  }

  SaabMoments moments(dim);
  const int batch =
      std::max(1, static_cast<int>(16'000'000 / std::max<std::int64_t>(1, per_image * dim)));
  std::size_t cursor = 0;
  std::vector<std::int64_t> local;
  for (int begin = 0; begin < maps.count; begin += batch) {
    int end = std::min(maps.count, begin + batch);
    PatchMatrixF rows = extract_patch_block(maps, s, begin, end);
    const std::int64_t lo = begin * per_image;
    const std::int64_t hi = end * per_image;
    local.clear();
    while (cursor < sampled.size() && sampled[cursor] < hi) {
      local.push_back(sampled[cursor] - lo);
      ++cursor;
    }
    moments.add(rows, local);
  }
  return fit_saab_from_moments(moments, spec.kernel_count, maps.spectral, s);
}

}  // namespace detail

struct ConvFitResult {
  ConvModel model;
  ConvOutputs train_outputs;
};

// Forward pass through both fitted layers; set need_conv2 = false when only
// the layer-1 maps feed the downstream features.
inline ConvOutputs conv_forward(const ConvModel& model, const FeatureMap& input,
                                bool need_conv2 = true) {
  ConvOutputs out;
  out.conv1 = detail::pool_stage(apply_saab(input, model.layer1));
  if (need_conv2) out.conv2 = detail::pool_stage(apply_saab(out.conv1, model.layer2));
  return out;
}

inline ConvOutputs conv_forward(const ConvModel& model, const LabeledImageSet& set,
                                bool need_conv2 = true) {
  return conv_forward(model, from_images(set), need_conv2);
}

// Fit both layers on a training set. Covariances see at most
// `cov_cap` seeded-subsampled patches per layer; the bias of each layer
// still reflects the exact max patch norm over all training patches.
inline ConvFitResult fit_conv_pipeline(const LabeledImageSet& train, const ConvArch& arch,
                                       std::uint64_t seed,
                                       std::int64_t cov_cap = 200000) {
  arch.validate();
  require(train.count() >= 1, "fit_conv_pipeline: empty training set");

  ConvFitResult result;
  FeatureMap input = from_images(train);
  result.model.layer1 =
      detail::fit_layer_streaming(input, arch.layer1, cov_cap, derive_seed(seed, 101));
  result.train_outputs.conv1 =
      detail::pool_stage(apply_saab(input, result.model.layer1));
  result.model.layer2 = detail::fit_layer_streaming(
      result.train_outputs.conv1, arch.layer2, cov_cap, derive_seed(seed, 102));
  result.train_outputs.conv2 =
      detail::pool_stage(apply_saab(result.train_outputs.conv1, result.model.layer2));
  return result;
}

}  // namespace ffcnn

#pragma once

#include "feature_map.hpp"

namespace ffcnn {

inline int patch_dim(const FeatureMap& maps, int size) {
  return maps.spectral * size * size;
}

inline std::int64_t patches_per_image(const FeatureMap& maps, int size) {
  return std::int64_t(maps.width - size + 1) * (maps.height - size + 1);
}

namespace detail {

// Fill `rows` (row-major, patch_dim wide) with every size x size patch of
// images [begin, end), stride 1, no padding. Patch layout is channel-major:
// [channel][dr][dc]; patches of one image are ordered by (row, col).
template <typename Scalar>
void fill_patches(const FeatureMap& maps, int size, int begin, int end,
                  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& rows) {
  const int oh = maps.height - size + 1;
  const int ow = maps.width - size + 1;
  const int dim = patch_dim(maps, size);
  rows.resize(std::int64_t(end - begin) * oh * ow, dim);
  std::int64_t row = 0;
  for (int i = begin; i < end; ++i) {
    for (int r = 0; r < oh; ++r) {
      for (int c = 0; c < ow; ++c, ++row) {
        Scalar* dst = rows.data() + row * dim;
        for (int ch = 0; ch < maps.spectral; ++ch) {
          const float* src = maps.channel(i, ch) + r * maps.width + c;
          for (int dr = 0; dr < size; ++dr) {
            for (int dc = 0; dc < size; ++dc)
              *dst++ = static_cast<Scalar>(src[dr * maps.width + dc]);
          }
        }
      }
    }
  }
}

}  // namespace detail

using PatchMatrixF =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// All patches of images [begin, end), float32, one patch per row.
inline PatchMatrixF extract_patch_block(const FeatureMap& maps, int size,
                                        int begin, int end) {
  require(size >= 1 && size <= maps.width && size <= maps.height,
          "extract_patch_block: filter size exceeds map extent");
  require(begin >= 0 && begin <= end && end <= maps.count,
          "extract_patch_block: bad image range");
  PatchMatrixF rows;
  detail::fill_patches(maps, size, begin, end, rows);
  return rows;
}

// Every patch of every image, f64. Row count = count * (W-s+1) * (H-s+1).
inline Matrix extract_patches(const FeatureMap& maps, int size) {
  require(size >= 1 && size <= maps.width && size <= maps.height,
          "extract_patches: filter size exceeds map extent");
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows;
  detail::fill_patches(maps, size, 0, maps.count, rows);
  return rows;
}

// Seeded subsample of at most `cap` patch rows (all of them if they fit).
inline Matrix extract_patches(const FeatureMap& maps, int size,
                              std::int64_t cap, std::uint64_t seed) {
  require(cap >= 1, "extract_patches: cap must be positive");
  Matrix all = extract_patches(maps, size);
  if (all.rows() <= cap) return all;
  Rng rng(seed);
  std::vector<int> keep =
      sample_without_replacement(static_cast<int>(all.rows()),
                                 static_cast<int>(cap), rng);
  Matrix out(cap, all.cols());
  for (std::int64_t i = 0; i < cap; ++i) out.row(i) = all.row(keep[i]);
  return out;
}

}  // namespace ffcnn

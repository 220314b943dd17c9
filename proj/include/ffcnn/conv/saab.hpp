#pragma once

#include "../numerics/pca.hpp"
#include "patches.hpp"

namespace ffcnn {

// One Saab layer: an affine map on flattened patches. Row 0 of `kernels` is
// the constant DC kernel 1/sqrt(N); the remaining rows are PCA components of
// the DC-removed training patches. A single nonnegative bias added to every
// response guarantees the subsequent clipping never fires on training
// patches, which is what makes the cascade linear on the training manifold.
struct SaabLayer {
  Matrix kernels;  // M x N
  double bias = 0.0;
  int input_channels = 0;
  int filter_size = 0;

  int kernel_count() const { return static_cast<int>(kernels.rows()); }
  int input_dim() const { return static_cast<int>(kernels.cols()); }
};

namespace detail {

// Accumulated second-order statistics of DC-removed patches plus the max
// squared patch norm, enough to fit a layer without holding patches.
struct SaabMoments {
  std::int64_t count = 0;
  Vector sum;   // of DC-removed patches
  Matrix gram;  // of DC-removed patches
  double max_sqnorm = 0.0;
  int dim = 0;

  explicit SaabMoments(int n) : sum(Vector::Zero(n)), gram(Matrix::Zero(n, n)), dim(n) {}

  // `rows` holds raw patches; `sampled` selects which of them enter the
  // covariance (the max norm always sees every row).
  void add(const PatchMatrixF& rows, const std::vector<std::int64_t>& sampled) {
    const int n = dim;
    for (std::int64_t r = 0; r < rows.rows(); ++r) {
      double sq = rows.row(r).cast<double>().squaredNorm();
      max_sqnorm = std::max(max_sqnorm, sq);
    }
    if (sampled.empty()) return;
    Matrix z(sampled.size(), n);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < sampled.size(); ++i) {
      Vector x = rows.row(sampled[i]).cast<double>();
      z.row(i) = (x.array() - x.sum() * inv_n).transpose();  // remove DC
    }
    sum += z.colwise().sum().transpose();
    gram.noalias() += z.transpose() * z;
    count += static_cast<std::int64_t>(sampled.size());
  }
};

// Orthonormal basis of the hyperplane orthogonal to the constant direction,
// via the Householder reflection that maps it onto -e0. Column j is then an
// exact unit vector with zero mean, and the DC row stays exactly constant.
inline Matrix dc_complement_basis(int n) {
  Vector a0 = Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  Vector v = a0;
  v[0] += 1.0;  // a0[0] > 0, so this choice is the numerically safe one
  double beta = 2.0 / v.squaredNorm();
  Matrix q(n, n - 1);
  for (int j = 0; j < n - 1; ++j) {
    q.col(j) = -beta * v[j + 1] * v;
    q(j + 1, j) += 1.0;
  }
  return q;
}

inline SaabLayer fit_saab_from_moments(const SaabMoments& m, int kernel_count,
                                       int input_channels, int filter_size) {
  const int n = m.dim;
  require(kernel_count >= 1 && kernel_count <= n,
          "fit_saab: kernel count out of range");
  require(m.count >= 2, "fit_saab: need at least 2 patches");

  SaabLayer layer;
  layer.input_channels = input_channels;
  layer.filter_size = filter_size;
  layer.bias = std::sqrt(m.max_sqnorm);
  layer.kernels.resize(kernel_count, n);
  layer.kernels.row(0).setConstant(1.0 / std::sqrt(static_cast<double>(n)));
  if (kernel_count == 1) return layer;

  Vector mean = m.sum / static_cast<double>(m.count);
  Matrix cov = (m.gram - static_cast<double>(m.count) * mean * mean.transpose()) /
               static_cast<double>(m.count - 1);
  cov = ((cov + cov.transpose()) * 0.5).eval();

  // Diagonalize inside the DC-orthogonal subspace so AC kernels are exactly
  // orthonormal to the DC row no matter how the covariance rounds.
  Matrix q = dc_complement_basis(n);
  Matrix reduced = q.transpose() * cov * q;
  reduced = ((reduced + reduced.transpose()) * 0.5).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(reduced);
  require(eig.info() == Eigen::Success, "fit_saab: eigendecomposition failed");

  Matrix ac = q * eig.eigenvectors().rowwise().reverse().leftCols(kernel_count - 1);
  detail::fix_component_signs(ac);
  layer.kernels.bottomRows(kernel_count - 1) = ac.transpose();
  return layer;
}

}  // namespace detail

// Fit from an explicit patch matrix (one patch per row).
inline SaabLayer fit_saab(const Matrix& patches, int kernel_count,
                          int input_channels = 1, int filter_size = 0) {
  require(patches.rows() >= 2, "fit_saab: need at least 2 patches");
  require(patches.allFinite(), "fit_saab: non-finite input");
  detail::SaabMoments m(static_cast<int>(patches.cols()));
  const double inv_n = 1.0 / static_cast<double>(patches.cols());
  for (Eigen::Index r = 0; r < patches.rows(); ++r) {
    Vector x = patches.row(r).transpose();
    m.max_sqnorm = std::max(m.max_sqnorm, x.squaredNorm());
    Vector z = x.array() - x.sum() * inv_n;
    m.sum += z;
    m.gram.noalias() += z * z.transpose();
    ++m.count;
  }
  if (filter_size == 0)
    filter_size = static_cast<int>(std::lround(
        std::sqrt(static_cast<double>(patches.cols()) / input_channels)));
  return detail::fit_saab_from_moments(m, kernel_count, input_channels, filter_size);
}

// Responses max(0, k.x + bias) for every patch of every image; output
// channel k is kernel k's response map, spatial size (W-s+1) x (H-s+1).
inline FeatureMap apply_saab(const FeatureMap& maps, const SaabLayer& layer) {
  require(maps.spectral == layer.input_channels, "apply_saab: channel mismatch");
  const int s = layer.filter_size;
  const int oh = maps.height - s + 1;
  const int ow = maps.width - s + 1;
  require(oh >= 1 && ow >= 1, "apply_saab: filter size exceeds map extent");

  FeatureMap out = FeatureMap::zeros(maps.count, layer.kernel_count(), oh, ow);
  const MatrixF kernels_f = layer.kernels.cast<float>();
  const float bias_f = static_cast<float>(layer.bias);
  const int batch = std::max(
      1, static_cast<int>(16'000'000 / std::max<std::int64_t>(
                              1, patches_per_image(maps, s) * layer.input_dim())));
  for (int begin = 0; begin < maps.count; begin += batch) {
    int end = std::min(maps.count, begin + batch);
    PatchMatrixF rows = extract_patch_block(maps, s, begin, end);
    MatrixF resp = rows * kernels_f.transpose();  // (patches) x M
    resp = (resp.array() + bias_f).cwiseMax(0.0f);
    const std::int64_t per = std::int64_t(oh) * ow;
    for (int i = begin; i < end; ++i) {
      float* dst = out.image(i);
      const std::int64_t base = std::int64_t(i - begin) * per;
      for (int k = 0; k < layer.kernel_count(); ++k)
        for (std::int64_t p = 0; p < per; ++p) dst[k * per + p] = resp(base + p, k);
    }
  }
  return out;
}

// Drop the last row/column when the extent is odd, so 2x2 pooling tiles.
inline FeatureMap crop_to_even(const FeatureMap& maps) {
  int h = maps.height - maps.height % 2;
  int w = maps.width - maps.width % 2;
  if (h == maps.height && w == maps.width) return maps;
  FeatureMap out = FeatureMap::zeros(maps.count, maps.spectral, h, w);
  for (int i = 0; i < maps.count; ++i)
    for (int ch = 0; ch < maps.spectral; ++ch) {
      const float* src = maps.channel(i, ch);
      float* dst = out.image(i) + std::int64_t(ch) * out.spatial();
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) dst[r * w + c] = src[r * maps.width + c];
    }
  return out;
}

// Non-overlapping 2x2 max pooling; both extents must be even.
inline FeatureMap max_pool(const FeatureMap& maps) {
  require(maps.height % 2 == 0 && maps.width % 2 == 0,
          "max_pool: extents must be even (crop_to_even first)");
  FeatureMap out =
      FeatureMap::zeros(maps.count, maps.spectral, maps.height / 2, maps.width / 2);
  for (int i = 0; i < maps.count; ++i)
    for (int ch = 0; ch < maps.spectral; ++ch) {
      const float* src = maps.channel(i, ch);
      float* dst = out.image(i) + std::int64_t(ch) * out.spatial();
      for (int r = 0; r < out.height; ++r)
        for (int c = 0; c < out.width; ++c) {
          const float* cell = src + 2 * r * maps.width + 2 * c;
          float m = std::max(std::max(cell[0], cell[1]),
                             std::max(cell[maps.width], cell[maps.width + 1]));
          dst[r * out.width + c] = m;
        }
    }
  return out;
}

}  // namespace ffcnn

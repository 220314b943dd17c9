#pragma once

#include "../numerics/pca.hpp"
#include "feature_map.hpp"

#include <ostream>

namespace ffcnn {

// Channel-wise PCA: each spectral channel's spatial map (W*H values) gets
// its own PCA down to `target_dim` coefficients; per-image features are the
// channel-order concatenation. Cross-channel covariance is deliberately
// ignored — responses of distinct Saab kernels are close to uncorrelated,
// so the block-diagonal approximation buys a much smaller model.
struct CPCABank {
  std::vector<PCABasis> per_channel;
  int width = 0;
  int height = 0;

  int channel_dim() const {
    return per_channel.empty() ? 0 : per_channel.front().output_dim();
  }
  int feature_dim() const {
    int total = 0;
    for (const auto& b : per_channel) total += b.output_dim();
    return total;
  }
};

inline CPCABank fit_cpca(const FeatureMap& maps, int target_dim) {
  require(target_dim >= 1 && target_dim < maps.spatial(),
          "fit_cpca: target dim must be below the spatial size");
  CPCABank bank;
  bank.width = maps.width;
  bank.height = maps.height;
  bank.per_channel.reserve(maps.spectral);
  for (int ch = 0; ch < maps.spectral; ++ch)
    bank.per_channel.push_back(
        fit_pca(channel_spatial_matrix(maps, ch), PCATarget::fixed(target_dim)));
  return bank;
}

inline Matrix apply_cpca(const CPCABank& bank, const FeatureMap& maps) {
  require(static_cast<int>(bank.per_channel.size()) == maps.spectral,
          "apply_cpca: channel count mismatch");
  require(bank.width == maps.width && bank.height == maps.height,
          "apply_cpca: spatial size mismatch");
  Matrix out(maps.count, bank.feature_dim());
  int col = 0;
  for (int ch = 0; ch < maps.spectral; ++ch) {
    const auto& basis = bank.per_channel[ch];
    out.middleCols(col, basis.output_dim()) =
        project_pca(basis, channel_spatial_matrix(maps, ch));
    col += basis.output_dim();
  }
  return out;
}

// Pearson correlation of spatial positions within one channel, across the
// set's images. Positions whose response never varies are flagged and their
// rows/columns zeroed (no correlation is defined for them).
struct ChannelCorrelation {
  Matrix corr;
  std::vector<std::uint8_t> degenerate;
};

inline ChannelCorrelation channel_correlation(const FeatureMap& maps, int ch) {
  Matrix x = channel_spatial_matrix(maps, ch);
  const auto n = x.rows();
  require(n >= 2, "channel_correlation: need at least 2 images");
  Matrix centered = x.rowwise() - x.colwise().mean();
  Vector sd = (centered.colwise().squaredNorm() / double(n - 1)).cwiseSqrt();

  ChannelCorrelation result;
  result.degenerate.assign(x.cols(), 0);
  for (Eigen::Index p = 0; p < x.cols(); ++p)
    if (sd[p] < 1e-12)
      result.degenerate[p] = 1;
    else
      centered.col(p) /= sd[p];
  result.corr = (centered.transpose() * centered) / double(n - 1);
  for (Eigen::Index p = 0; p < x.cols(); ++p) {
    if (result.degenerate[p]) {
      result.corr.row(p).setZero();
      result.corr.col(p).setZero();
    } else {
      result.corr(p, p) = 1.0;
    }
  }
  return result;
}

inline void write_correlation_csv(const ChannelCorrelation& cc, std::ostream& os) {
  os << "row,col,correlation\n";
  for (Eigen::Index r = 0; r < cc.corr.rows(); ++r)
    for (Eigen::Index c = 0; c < cc.corr.cols(); ++c)
      os << r << ',' << c << ',' << cc.corr(r, c) << '\n';
}

}  // namespace ffcnn

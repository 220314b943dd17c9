#pragma once

#include "../conv/cpca.hpp"
#include "config.hpp"

namespace ffcnn {

// Fitted per-channel slice: which spatial positions enter the PCA, the PCA
// itself, and which of its components survive. Empty index lists mean "all".
struct ChannelView {
  std::vector<int> positions;
  PCABasis basis;
  std::vector<int> components;

  int output_dim() const {
    return components.empty() ? basis.output_dim()
                              : static_cast<int>(components.size());
  }
};

struct FeatureViewState {
  ViewKind kind = ViewKind::Conv2;
  int source_layer = 2;  // 1 or 2
  std::vector<ChannelView> channels;

  int feature_dim() const {
    int total = 0;
    for (const auto& ch : channels) total += ch.output_dim();
    return total;
  }
};

inline bool view_needs_conv2(ViewKind kind) {
  return kind == ViewKind::Conv2 || kind == ViewKind::Conv2Rd;
}

namespace detail {

inline std::vector<int> checker_positions(int height, int width, bool even_parity) {
  std::vector<int> out;
  out.reserve((height * width + 1) / 2);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c)
      if (((r + c) % 2 == 0) == even_parity) out.push_back(r * width + c);
  return out;
}

inline std::vector<int> seeded_fraction(int total, double fraction, Rng& rng,
                                        const char* what) {
  int keep = static_cast<int>(fraction * total);
  require(keep >= 1, std::string("feature view: lambda keeps no ") + what);
  return sample_without_replacement(total, keep, rng);
}

inline Matrix gather_columns(const Matrix& x, const std::vector<int>& cols) {
  if (cols.empty()) return x;
  Matrix out(x.rows(), cols.size());
  for (std::size_t i = 0; i < cols.size(); ++i) out.col(i) = x.col(cols[i]);
  return out;
}

}  // namespace detail

// Fit a view on the training conv outputs. Every random draw comes from a
// stream derived from (seed, view kind, channel), so a view is reproducible
// from the base config alone.
inline FeatureViewState select_feature_view(const ConvOutputs& train_outputs,
                                            const FeatureViewSpec& spec,
                                            std::uint64_t seed) {
  spec.validate();
  FeatureViewState state;
  state.kind = spec.kind;
  state.source_layer = view_needs_conv2(spec.kind) ? 2 : 1;
  const FeatureMap& maps =
      state.source_layer == 2 ? train_outputs.conv2 : train_outputs.conv1;
  require(maps.count > 0, "select_feature_view: missing conv outputs");
  const int target = state.source_layer == 2 ? spec.k2 : spec.k1;

  for (int ch = 0; ch < maps.spectral; ++ch) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(spec.kind), ch));
    ChannelView view;
    switch (spec.kind) {
      case ViewKind::Conv2:
        break;
      case ViewKind::Conv1CheckerA:
        view.positions = detail::checker_positions(maps.height, maps.width, true);
        break;
      case ViewKind::Conv1CheckerB:
        view.positions = detail::checker_positions(maps.height, maps.width, false);
        break;
      case ViewKind::Conv1Rd:
        view.positions =
            detail::seeded_fraction(maps.spatial(), spec.lambda0, rng, "positions");
        break;
      case ViewKind::Conv2Rd:
        break;
    }

    Matrix channel = detail::gather_columns(channel_spatial_matrix(maps, ch),
                                            view.positions);
    int avail = static_cast<int>(channel.cols());
    require(target < avail,
            "select_feature_view: channel PCA dim must be below the position count");
    view.basis = fit_pca(channel, PCATarget::fixed(target));

    if (spec.kind == ViewKind::Conv1Rd)
      view.components = detail::seeded_fraction(target, spec.lambda1, rng, "components");
    else if (spec.kind == ViewKind::Conv2Rd)
      view.components = detail::seeded_fraction(target, spec.lambda2, rng, "components");

    state.channels.push_back(std::move(view));
  }
  return state;
}

// Project a set's conv outputs through the fitted view: n x feature_dim, f64.
inline Matrix apply_view(const FeatureViewState& state, const ConvOutputs& outputs) {
  const FeatureMap& maps = state.source_layer == 2 ? outputs.conv2 : outputs.conv1;
  require(static_cast<int>(state.channels.size()) == maps.spectral,
          "apply_view: channel count mismatch");
  Matrix out(maps.count, state.feature_dim());
  int col = 0;
  for (int ch = 0; ch < maps.spectral; ++ch) {
    const ChannelView& view = state.channels[ch];
    Matrix channel = detail::gather_columns(channel_spatial_matrix(maps, ch),
                                            view.positions);
    Matrix projected = project_pca(view.basis, channel);
    Matrix kept = detail::gather_columns(projected, view.components);
    out.middleCols(col, kept.cols()) = kept;
    col += static_cast<int>(kept.cols());
  }
  return out;
}

}  // namespace ffcnn

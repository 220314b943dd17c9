#pragma once

#include "../data/dataset.hpp"

namespace ffcnn {

// Response tensor for a whole image set: [image][channel][row][col], float32.
struct FeatureMap {
  int count = 0;
  int spectral = 0;  // channels
  int height = 0;
  int width = 0;
  std::vector<float> data;

  std::int64_t per_image() const {
    return std::int64_t(spectral) * height * width;
  }
  int spatial() const { return height * width; }
  const float* image(int i) const { return data.data() + i * per_image(); }
  float* image(int i) { return data.data() + i * per_image(); }
  const float* channel(int i, int ch) const {
    return image(i) + std::int64_t(ch) * spatial();
  }
  float& at(int i, int ch, int r, int c) {
    return data[i * per_image() + std::int64_t(ch) * spatial() + r * width + c];
  }
  float at(int i, int ch, int r, int c) const {
    return data[i * per_image() + std::int64_t(ch) * spatial() + r * width + c];
  }

  static FeatureMap zeros(int count, int spectral, int height, int width) {
    FeatureMap m;
    m.count = count;
    m.spectral = spectral;
    m.height = height;
    m.width = width;
    m.data.assign(std::size_t(count) * spectral * height * width, 0.0f);
    return m;
  }

  // Copy of images [begin, end).
  FeatureMap slice(int begin, int end) const {
    FeatureMap m;
    m.count = end - begin;
    m.spectral = spectral;
    m.height = height;
    m.width = width;
    m.data.assign(data.begin() + begin * per_image(),
                  data.begin() + end * per_image());
    return m;
  }
};

inline FeatureMap from_images(const LabeledImageSet& set) {
  FeatureMap m;
  m.count = set.count();
  m.spectral = set.channels;
  m.height = set.height;
  m.width = set.width;
  m.data = set.pixels;
  return m;
}

// One spectral channel flattened across space: n x (height*width), f64,
// spatial index = row * width + col. This is the layout channel-wise PCA
// and the feature views operate on.
inline Matrix channel_spatial_matrix(const FeatureMap& maps, int ch) {
  require(ch >= 0 && ch < maps.spectral, "channel_spatial_matrix: bad channel");
  Matrix out(maps.count, maps.spatial());
  for (int i = 0; i < maps.count; ++i) {
    const float* src = maps.channel(i, ch);
    for (int p = 0; p < maps.spatial(); ++p) out(i, p) = src[p];
  }
  return out;
}

}  // namespace ffcnn

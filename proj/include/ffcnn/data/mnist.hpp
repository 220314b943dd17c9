#pragma once

#include "dataset.hpp"

namespace ffcnn {

namespace detail {

inline std::uint32_t read_be32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return std::uint32_t(b[0]) << 24 | std::uint32_t(b[1]) << 16 |
         std::uint32_t(b[2]) << 8 | std::uint32_t(b[3]);
}

}  // namespace detail

// IDX image/label pair -> 32x32 single-channel set. The native 28x28 digits
// are centered with a 2-pixel zero frame so both datasets share one spatial
// pipeline; intensities are scaled to [0,1] by 1/255.
inline LabeledImageSet load_mnist(const std::string& images_path,
                                  const std::string& labels_path) {
  std::ifstream imgs(images_path, std::ios::binary);
  if (!imgs.good()) throw DataError("load_mnist: cannot open " + images_path);
  std::ifstream labs(labels_path, std::ios::binary);
  if (!labs.good()) throw DataError("load_mnist: cannot open " + labels_path);

  if (detail::read_be32(imgs) != 0x00000803u)
    throw DataError("load_mnist: bad image magic in " + images_path);
  std::uint32_t count = detail::read_be32(imgs);
  std::uint32_t rows = detail::read_be32(imgs);
  std::uint32_t cols = detail::read_be32(imgs);
  if (rows != 28 || cols != 28)
    throw DataError("load_mnist: expected 28x28 images in " + images_path);

  if (detail::read_be32(labs) != 0x00000801u)
    throw DataError("load_mnist: bad label magic in " + labels_path);
  std::uint32_t label_count = detail::read_be32(labs);
  if (label_count != count)
    throw DataError("load_mnist: image/label count mismatch");

  LabeledImageSet set;
  set.name = "mnist";
  set.channels = 1;
  set.height = 32;
  set.width = 32;
  set.class_count = 10;
  set.pixels.assign(std::size_t(count) * 32 * 32, 0.0f);
  set.labels.resize(count);
  set.indices.resize(count);

  std::vector<unsigned char> raw(28 * 28);
  for (std::uint32_t i = 0; i < count; ++i) {
    imgs.read(reinterpret_cast<char*>(raw.data()), 28 * 28);
    if (!imgs.good()) throw DataError("load_mnist: truncated image file");
    float* out = set.pixels.data() + std::size_t(i) * 32 * 32;
    for (int r = 0; r < 28; ++r)
      for (int c = 0; c < 28; ++c)
        out[(r + 2) * 32 + (c + 2)] = raw[r * 28 + c] * (1.0f / 255.0f);
    int label = labs.get();
    if (label < 0 || label > 9) throw DataError("load_mnist: bad label value");
    set.labels[i] = label;
    set.indices[i] = i;
  }
  return set;
}

}  // namespace ffcnn

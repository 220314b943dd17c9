#pragma once

#include "../core.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

namespace ffcnn {

// A set of same-shaped multi-channel images with labels. Pixels are float32
// in [0,1], laid out [image][channel][row][col]. `indices` remembers each
// image's row in the originating file so subsets stay traceable.
struct LabeledImageSet {
  std::string name;  // "mnist", "cifar10", ...
  int channels = 0;
  int height = 0;
  int width = 0;
  int class_count = 0;
  std::vector<float> pixels;
  std::vector<int> labels;
  std::vector<std::int64_t> indices;

  int count() const { return static_cast<int>(labels.size()); }
  int image_size() const { return channels * height * width; }
  const float* image(int i) const { return pixels.data() + std::int64_t(i) * image_size(); }
  float* image(int i) { return pixels.data() + std::int64_t(i) * image_size(); }
};

inline std::vector<int> class_histogram(const LabeledImageSet& set) {
  std::vector<int> counts(set.class_count, 0);
  for (int label : set.labels) {
    require(label >= 0 && label < set.class_count, "class_histogram: label out of range");
    ++counts[label];
  }
  return counts;
}

// Rows of `set` listed in `rows`, in that order.
inline LabeledImageSet take_rows(const LabeledImageSet& set, const std::vector<int>& rows) {
  LabeledImageSet out;
  out.name = set.name;
  out.channels = set.channels;
  out.height = set.height;
  out.width = set.width;
  out.class_count = set.class_count;
  out.pixels.resize(std::size_t(rows.size()) * set.image_size());
  out.labels.reserve(rows.size());
  out.indices.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    int r = rows[i];
    require(r >= 0 && r < set.count(), "take_rows: row out of range");
    std::memcpy(out.pixels.data() + i * set.image_size(), set.image(r),
                sizeof(float) * set.image_size());
    out.labels.push_back(set.labels[r]);
    out.indices.push_back(set.indices[r]);
  }
  return out;
}

// Seeded per-class subsample of `per_class` images from every class,
// returned in ascending original order. Classes are drawn in label order
// from one generator, so the result is a pure function of (set, n, seed).
inline LabeledImageSet subset(const LabeledImageSet& set, int per_class,
                              std::uint64_t seed) {
  require(per_class >= 1, "subset: per_class must be positive");
  std::vector<std::vector<int>> by_class(set.class_count);
  for (int i = 0; i < set.count(); ++i) by_class[set.labels[i]].push_back(i);

  Rng rng(seed);
  std::vector<int> chosen;
  for (int c = 0; c < set.class_count; ++c) {
    auto& rows = by_class[c];
    require(static_cast<int>(rows.size()) >= per_class,
            "subset: class " + std::to_string(c) + " has too few samples");
    for (int i = 0; i < per_class; ++i) {
      std::size_t j = i + rng.next_index(rows.size() - i);
      std::swap(rows[i], rows[j]);
    }
    chosen.insert(chosen.end(), rows.begin(), rows.begin() + per_class);
  }
  std::sort(chosen.begin(), chosen.end());
  return take_rows(set, chosen);
}

// --- raw tensor round-trip (debug/test format) ---------------------------

namespace detail {

inline void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
         std::uint32_t(b[3]) << 24;
}

}  // namespace detail

inline void dump_tensor(const LabeledImageSet& set, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), "dump_tensor: cannot open " + path);
  os.write("FFTD", 4);
  detail::write_u32(os, static_cast<std::uint32_t>(set.count()));
  detail::write_u32(os, static_cast<std::uint32_t>(set.channels));
  detail::write_u32(os, static_cast<std::uint32_t>(set.height));
  detail::write_u32(os, static_cast<std::uint32_t>(set.width));
  detail::write_u32(os, static_cast<std::uint32_t>(set.class_count));
  detail::write_u32(os, static_cast<std::uint32_t>(set.name.size()));
  os.write(set.name.data(), static_cast<std::streamsize>(set.name.size()));
  os.write(reinterpret_cast<const char*>(set.pixels.data()),
           static_cast<std::streamsize>(set.pixels.size() * sizeof(float)));
  for (int label : set.labels) detail::write_u32(os, static_cast<std::uint32_t>(label));
  for (auto idx : set.indices) {
    detail::write_u32(os, static_cast<std::uint32_t>(idx & 0xffffffffu));
    detail::write_u32(os, static_cast<std::uint32_t>(std::uint64_t(idx) >> 32));
  }
  require(os.good(), "dump_tensor: write failed for " + path);
}

inline LabeledImageSet load_tensor(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is.good()) throw DataError("load_tensor: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is.good() || std::memcmp(magic, "FFTD", 4) != 0)
    throw DataError("load_tensor: bad magic in " + path);
  LabeledImageSet set;
  int count = static_cast<int>(detail::read_u32(is));
  set.channels = static_cast<int>(detail::read_u32(is));
  set.height = static_cast<int>(detail::read_u32(is));
  set.width = static_cast<int>(detail::read_u32(is));
  set.class_count = static_cast<int>(detail::read_u32(is));
  std::uint32_t name_len = detail::read_u32(is);
  set.name.resize(name_len);
  is.read(set.name.data(), name_len);
  set.pixels.resize(std::size_t(count) * set.image_size());
  is.read(reinterpret_cast<char*>(set.pixels.data()),
          static_cast<std::streamsize>(set.pixels.size() * sizeof(float)));
  set.labels.resize(count);
  for (int i = 0; i < count; ++i) set.labels[i] = static_cast<int>(detail::read_u32(is));
  set.indices.resize(count);
  for (int i = 0; i < count; ++i) {
    std::uint64_t lo = detail::read_u32(is);
    std::uint64_t hi = detail::read_u32(is);
    set.indices[i] = static_cast<std::int64_t>(lo | (hi << 32));
  }
  if (!is.good()) throw DataError("load_tensor: truncated file " + path);
  return set;
}

}  // namespace ffcnn

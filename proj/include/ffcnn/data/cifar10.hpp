#pragma once

#include "dataset.hpp"

namespace ffcnn {

// CIFAR-10 binary batches: 10000 records of (label byte, 1024 R, 1024 G,
// 1024 B) each. Batches concatenate in the order given; `indices` number
// records across the whole concatenation.
inline LabeledImageSet load_cifar10(const std::vector<std::string>& batch_paths) {
  require(!batch_paths.empty(), "load_cifar10: no batch files given");
  constexpr int kRecord = 1 + 3 * 1024;

  LabeledImageSet set;
  set.name = "cifar10";
  set.channels = 3;
  set.height = 32;
  set.width = 32;
  set.class_count = 10;

  std::vector<unsigned char> rec(kRecord);
  std::int64_t next_index = 0;
  for (const auto& path : batch_paths) {
    std::ifstream is(path, std::ios::binary);
    if (!is.good()) throw DataError("load_cifar10: cannot open " + path);
    is.seekg(0, std::ios::end);
    std::int64_t size = is.tellg();
    is.seekg(0, std::ios::beg);
    if (size <= 0 || size % kRecord != 0)
      throw DataError("load_cifar10: " + path + " is not a whole number of records");
    std::int64_t records = size / kRecord;
    for (std::int64_t r = 0; r < records; ++r) {
      is.read(reinterpret_cast<char*>(rec.data()), kRecord);
      if (!is.good()) throw DataError("load_cifar10: truncated batch " + path);
      if (rec[0] > 9) throw DataError("load_cifar10: bad label value in " + path);
      set.labels.push_back(rec[0]);
      set.indices.push_back(next_index++);
      std::size_t base = set.pixels.size();
      set.pixels.resize(base + 3 * 1024);
      for (int p = 0; p < 3 * 1024; ++p)
        set.pixels[base + p] = rec[1 + p] * (1.0f / 255.0f);
    }
  }
  return set;
}

}  // namespace ffcnn

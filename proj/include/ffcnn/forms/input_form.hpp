#pragma once

#include "../data/dataset.hpp"

#include <limits>

namespace ffcnn {

// Single-channel views of the input plus the identity RGB form. The Laws
// forms are 3x3 texture energy filters applied to the luminance image.
enum class InputForm {
  Rgb,
  Gray,
  YCbCrY,
  YCbCrCb,
  YCbCrCr,
  LabL,
  LabA,
  LabB,
  Laws1,
  Laws2,
  Laws3,
  Laws4,
  Laws5,
  Laws6,
  Laws7,
  Laws8,
  Laws9,
};

inline const char* to_string(InputForm f) {
  switch (f) {
    case InputForm::Rgb: return "rgb";
    case InputForm::Gray: return "gray";
    case InputForm::YCbCrY: return "ycbcr-y";
    case InputForm::YCbCrCb: return "ycbcr-cb";
    case InputForm::YCbCrCr: return "ycbcr-cr";
    case InputForm::LabL: return "lab-l";
    case InputForm::LabA: return "lab-a";
    case InputForm::LabB: return "lab-b";
    case InputForm::Laws1: return "laws-l1";
    case InputForm::Laws2: return "laws-l2";
    case InputForm::Laws3: return "laws-l3";
    case InputForm::Laws4: return "laws-l4";
    case InputForm::Laws5: return "laws-l5";
    case InputForm::Laws6: return "laws-l6";
    case InputForm::Laws7: return "laws-l7";
    case InputForm::Laws8: return "laws-l8";
    case InputForm::Laws9: return "laws-l9";
  }
  return "?";
}

inline InputForm input_form_from_string(const std::string& s) {
  for (int i = 0; i <= static_cast<int>(InputForm::Laws9); ++i) {
    auto f = static_cast<InputForm>(i);
    if (s == to_string(f)) return f;
  }
  throw ConfigError("unknown input form '" + s + "'");
}

inline int form_channels(InputForm f) { return f == InputForm::Rgb ? 3 : 1; }

namespace detail {

inline LabeledImageSet like(const LabeledImageSet& set, int channels) {
  LabeledImageSet out;
  out.name = set.name;
  out.channels = channels;
  out.height = set.height;
  out.width = set.width;
  out.class_count = set.class_count;
  out.labels = set.labels;
  out.indices = set.indices;
  out.pixels.resize(std::size_t(set.count()) * channels * set.height * set.width);
  return out;
}

// sRGB decoding for the Lab conversion.
inline double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

inline double lab_f(double t) {
  constexpr double cube = 216.0 / 24389.0;   // (6/29)^3
  constexpr double slope = 841.0 / 108.0;    // (29/6)^2 / 3
  return t > cube ? std::cbrt(t) : slope * t + 4.0 / 29.0;
}

}  // namespace detail

// BT.601 luma. Single-channel input passes through unchanged.
inline LabeledImageSet to_grayscale(const LabeledImageSet& set) {
  if (set.channels == 1) return set;
  require(set.channels == 3, "to_grayscale: expected 1 or 3 channels");
  LabeledImageSet out = detail::like(set, 1);
  const int plane = set.height * set.width;
  for (int i = 0; i < set.count(); ++i) {
    const float* in = set.image(i);
    float* dst = out.image(i);
    for (int p = 0; p < plane; ++p)
      dst[p] = 0.299f * in[p] + 0.587f * in[plane + p] + 0.114f * in[2 * plane + p];
  }
  return out;
}

// Full-range BT.601 YCbCr; every channel lands in [0,1] (chroma offset 0.5).
inline LabeledImageSet to_ycbcr(const LabeledImageSet& set) {
  require(set.channels == 3, "to_ycbcr: expected 3 channels");
  LabeledImageSet out = detail::like(set, 3);
  const int plane = set.height * set.width;
  for (int i = 0; i < set.count(); ++i) {
    const float* in = set.image(i);
    float* dst = out.image(i);
    for (int p = 0; p < plane; ++p) {
      float r = in[p], g = in[plane + p], b = in[2 * plane + p];
      dst[p] = 0.299f * r + 0.587f * g + 0.114f * b;
      dst[plane + p] = 0.5f - 0.168736f * r - 0.331264f * g + 0.5f * b;
      dst[2 * plane + p] = 0.5f + 0.5f * r - 0.418688f * g - 0.081312f * b;
    }
  }
  return out;
}

// CIELAB via sRGB linearization and D65 white, rescaled to [0,1]:
// L*/100, (a*+128)/255, (b*+128)/255.
inline LabeledImageSet to_lab(const LabeledImageSet& set) {
  require(set.channels == 3, "to_lab: expected 3 channels");
  LabeledImageSet out = detail::like(set, 3);
  const int plane = set.height * set.width;
  constexpr double xn = 0.95047, yn = 1.0, zn = 1.08883;
  for (int i = 0; i < set.count(); ++i) {
    const float* in = set.image(i);
    float* dst = out.image(i);
    for (int p = 0; p < plane; ++p) {
      double r = detail::srgb_to_linear(in[p]);
      double g = detail::srgb_to_linear(in[plane + p]);
      double b = detail::srgb_to_linear(in[2 * plane + p]);
      double fx = detail::lab_f((0.4124564 * r + 0.3575761 * g + 0.1804375 * b) / xn);
      double fy = detail::lab_f((0.2126729 * r + 0.7151522 * g + 0.0721750 * b) / yn);
      double fz = detail::lab_f((0.0193339 * r + 0.1191920 * g + 0.9503041 * b) / zn);
      double lstar = 116.0 * fy - 16.0;
      double astar = 500.0 * (fx - fy);
      double bstar = 200.0 * (fy - fz);
      dst[p] = static_cast<float>(lstar / 100.0);
      dst[plane + p] = static_cast<float>((astar + 128.0) / 255.0);
      dst[2 * plane + p] = static_cast<float>((bstar + 128.0) / 255.0);
    }
  }
  return out;
}

// Laws 1-D bases: L3 (level), E3 (edge), S3 (spot).
// Kernel k = outer(vertical, horizontal) in the fixed order below.
inline Eigen::Matrix3d laws_kernel(int id) {
  require(id >= 1 && id <= 9, "laws_kernel: id must be in 1..9");
  const Eigen::Vector3d l3(1, 2, 1), e3(-1, 0, 1), s3(-1, 2, -1);
  const Eigen::Vector3d* table[9][2] = {
      {&l3, &l3}, {&e3, &e3}, {&s3, &s3}, {&l3, &s3}, {&s3, &l3},
      {&l3, &e3}, {&e3, &l3}, {&s3, &e3}, {&e3, &s3}};
  return (*table[id - 1][0]) * table[id - 1][1]->transpose();
}

// 3x3 cross-correlation (no kernel flip) with zero padding, then per-image
// min-max rescale to [0,1]; a constant response maps to all zeros.
inline LabeledImageSet laws_filter(const LabeledImageSet& set, int kernel_id) {
  require(set.channels == 1, "laws_filter: expected a single-channel set");
  Eigen::Matrix3d k = laws_kernel(kernel_id);
  LabeledImageSet out = detail::like(set, 1);
  const int h = set.height, w = set.width;
  std::vector<double> resp(std::size_t(h) * w);
  for (int i = 0; i < set.count(); ++i) {
    const float* in = set.image(i);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        double acc = 0.0;
        for (int dr = -1; dr <= 1; ++dr) {
          int rr = r + dr;
          if (rr < 0 || rr >= h) continue;
          for (int dc = -1; dc <= 1; ++dc) {
            int cc = c + dc;
            if (cc < 0 || cc >= w) continue;
            acc += k(dr + 1, dc + 1) * in[rr * w + cc];
          }
        }
        resp[r * w + c] = acc;
        lo = std::min(lo, acc);
        hi = std::max(hi, acc);
      }
    }
    float* dst = out.image(i);
    if (hi > lo) {
      double scale = 1.0 / (hi - lo);
      for (std::size_t p = 0; p < resp.size(); ++p)
        dst[p] = static_cast<float>((resp[p] - lo) * scale);
    } else {
      std::fill(dst, dst + resp.size(), 0.0f);
    }
  }
  return out;
}

namespace detail {

inline LabeledImageSet pick_channel(const LabeledImageSet& set, int ch) {
  LabeledImageSet out = like(set, 1);
  const int plane = set.height * set.width;
  for (int i = 0; i < set.count(); ++i)
    std::memcpy(out.image(i), set.image(i) + std::size_t(ch) * plane,
                sizeof(float) * plane);
  return out;
}

}  // namespace detail

// The single entry point base classifiers use.
inline LabeledImageSet apply_input_form(const LabeledImageSet& set, InputForm form) {
  switch (form) {
    case InputForm::Rgb:
      require(set.channels == 3, "input form 'rgb' needs 3-channel data");
      return set;
    case InputForm::Gray:
      return to_grayscale(set);
    case InputForm::YCbCrY:
      return detail::pick_channel(to_ycbcr(set), 0);
    case InputForm::YCbCrCb:
      return detail::pick_channel(to_ycbcr(set), 1);
    case InputForm::YCbCrCr:
      return detail::pick_channel(to_ycbcr(set), 2);
    case InputForm::LabL:
      return detail::pick_channel(to_lab(set), 0);
    case InputForm::LabA:
      return detail::pick_channel(to_lab(set), 1);
    case InputForm::LabB:
      return detail::pick_channel(to_lab(set), 2);
    default: {
      int id = static_cast<int>(form) - static_cast<int>(InputForm::Laws1) + 1;
      return laws_filter(to_grayscale(set), id);
    }
  }
}

}  // namespace ffcnn

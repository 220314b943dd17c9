#pragma once

#include "../conv/pipeline.hpp"
#include "../fc/fc_model.hpp"
#include "../forms/input_form.hpp"

namespace ffcnn {

// Which slice of the conv outputs feeds the FC cascade.
//   conv2            - channel-wise PCA of the full layer-2 maps
//   conv1-checker-a/b - layer-1 maps on one parity of the spatial checkerboard
//   conv1-rd         - layer-1 maps on random positions, random components
//   conv2-rd         - layer-2 maps, random subset of PCA components
enum class ViewKind { Conv2, Conv1CheckerA, Conv1CheckerB, Conv1Rd, Conv2Rd };

inline const char* to_string(ViewKind k) {
  switch (k) {
    case ViewKind::Conv2: return "conv2";
    case ViewKind::Conv1CheckerA: return "conv1-checker-a";
    case ViewKind::Conv1CheckerB: return "conv1-checker-b";
    case ViewKind::Conv1Rd: return "conv1-rd";
    case ViewKind::Conv2Rd: return "conv2-rd";
  }
  return "?";
}

inline ViewKind view_kind_from_string(const std::string& s) {
  for (int i = 0; i <= static_cast<int>(ViewKind::Conv2Rd); ++i) {
    auto k = static_cast<ViewKind>(i);
    if (s == to_string(k)) return k;
  }
  throw ConfigError("unknown feature view '" + s + "'");
}

struct FeatureViewSpec {
  ViewKind kind = ViewKind::Conv2;
  double lambda0 = 0.75;  // share of layer-1 positions kept by conv1-rd
  double lambda1 = 0.75;  // share of layer-1 components kept by conv1-rd
  double lambda2 = 0.75;  // share of layer-2 components kept by conv2-rd
  int k1 = 30;            // channel PCA dim on layer-1 maps
  int k2 = 20;            // channel PCA dim on layer-2 maps

  void validate() const {
    for (double l : {lambda0, lambda1, lambda2})
      require(l > 0.0 && l <= 1.0, "feature view: lambda must be in (0,1]");
    require(k1 >= 1 && k2 >= 1, "feature view: channel dims must be positive");
  }
};

// Which diversity family a base belongs to; reports group by this tag.
enum class SchemeTag { S1, S2, S3 };

inline const char* to_string(SchemeTag t) {
  switch (t) {
    case SchemeTag::S1: return "s1";
    case SchemeTag::S2: return "s2";
    case SchemeTag::S3: return "s3";
  }
  return "?";
}

inline SchemeTag scheme_tag_from_string(const std::string& s) {
  for (int i = 0; i <= static_cast<int>(SchemeTag::S3); ++i) {
    auto t = static_cast<SchemeTag>(i);
    if (s == to_string(t)) return t;
  }
  throw ConfigError("unknown scheme tag '" + s + "'");
}

// Everything needed to train one base classifier, reproducibly.
struct BaseConfig {
  InputForm form = InputForm::Gray;
  ConvArch arch;
  FeatureViewSpec view;
  FCArch fc;
  std::uint64_t seed = 0;
  SchemeTag tag = SchemeTag::S1;

  void validate() const {
    arch.validate();
    view.validate();
    fc.validate();
  }

  bool operator==(const BaseConfig& o) const {
    return form == o.form && arch.layer1.filter_size == o.arch.layer1.filter_size &&
           arch.layer1.kernel_count == o.arch.layer1.kernel_count &&
           arch.layer2.filter_size == o.arch.layer2.filter_size &&
           arch.layer2.kernel_count == o.arch.layer2.kernel_count &&
           view.kind == o.view.kind && view.lambda0 == o.view.lambda0 &&
           view.lambda1 == o.view.lambda1 && view.lambda2 == o.view.lambda2 &&
           view.k1 == o.view.k1 && view.k2 == o.view.k2 &&
           fc.stage_dims == o.fc.stage_dims && fc.class_count == o.fc.class_count &&
           seed == o.seed && tag == o.tag;
  }
};

}  // namespace ffcnn

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "ffcnn/ffcnn.hpp"
#include "support/synth.hpp"

using namespace ffcnn;

namespace {

// One shared conv fit on 32x32 digits with the stock (5,6)/(5,16) stack:
// conv1 28 -> pool 14x14, conv2 10 -> pool 5x5.
struct StandardFit {
  LabeledImageSet train;
  ConvFitResult fit;
};

const StandardFit& standard_fit() {
  static StandardFit s = [] {
    StandardFit out;
    out.train = synth::digits(4, 10, 9001, 32, 32);
    ConvArch arch;
    arch.layer1 = {5, 6};
    arch.layer2 = {5, 16};
    out.fit = fit_conv_pipeline(out.train, arch, 12);
    return out;
  }();
  return s;
}

FeatureViewSpec spec_of(ViewKind kind) {
  FeatureViewSpec spec;
  spec.kind = kind;
  return spec;
}

}  // namespace

TEST_CASE("standard feature views produce the documented dimensions") {
  const auto& s = standard_fit();
  const ConvOutputs& outs = s.fit.train_outputs;
  REQUIRE(outs.conv1.spectral == 6);
  REQUIRE(outs.conv1.height == 14);
  REQUIRE(outs.conv1.width == 14);
  REQUIRE(outs.conv2.spectral == 16);
  REQUIRE(outs.conv2.height == 5);
  REQUIRE(outs.conv2.width == 5);

  SECTION("conv2 keeps every position and projects each channel to k2") {
    FeatureViewState v = select_feature_view(outs, spec_of(ViewKind::Conv2), 3);
    REQUIRE(v.source_layer == 2);
    REQUIRE(v.channels.size() == 16);
    for (const auto& ch : v.channels) {
      REQUIRE(ch.positions.empty());
      REQUIRE(ch.components.empty());
      REQUIRE(ch.output_dim() == 20);
    }
    REQUIRE(v.feature_dim() == 320);
    Matrix f = apply_view(v, outs);
    REQUIRE(f.rows() == s.train.count());
    REQUIRE(f.cols() == 320);
  }

  SECTION("checker views split the layer-1 grid by parity") {
    FeatureViewState a = select_feature_view(outs, spec_of(ViewKind::Conv1CheckerA), 3);
    FeatureViewState b = select_feature_view(outs, spec_of(ViewKind::Conv1CheckerB), 3);
    REQUIRE(a.source_layer == 1);
    REQUIRE(a.feature_dim() == 180);
    REQUIRE(b.feature_dim() == 180);
    REQUIRE(a.channels[0].positions.size() == 98);
    REQUIRE(b.channels[0].positions.size() == 98);
    for (int p : a.channels[0].positions) REQUIRE((p / 14 + p % 14) % 2 == 0);
    for (int p : b.channels[0].positions) REQUIRE((p / 14 + p % 14) % 2 == 1);

    // Together the parities tile the full 14x14 grid.
    std::vector<int> merged;
    std::merge(a.channels[0].positions.begin(), a.channels[0].positions.end(),
               b.channels[0].positions.begin(), b.channels[0].positions.end(),
               std::back_inserter(merged));
    REQUIRE(merged.size() == 196);
    for (int i = 0; i < 196; ++i) REQUIRE(merged[i] == i);
    REQUIRE(apply_view(a, outs).cols() == 180);
  }

  SECTION("conv1-rd keeps a seeded fraction of positions and components") {
    FeatureViewState v = select_feature_view(outs, spec_of(ViewKind::Conv1Rd), 3);
    REQUIRE(v.channels.size() == 6);
    for (const auto& ch : v.channels) {
      REQUIRE(ch.positions.size() == 147);  // floor(0.75 * 196)
      REQUIRE(std::is_sorted(ch.positions.begin(), ch.positions.end()));
      REQUIRE(ch.positions.front() >= 0);
      REQUIRE(ch.positions.back() < 196);
      REQUIRE(std::adjacent_find(ch.positions.begin(), ch.positions.end()) ==
              ch.positions.end());
      REQUIRE(ch.components.size() == 22);  // floor(0.75 * 30)
      for (int c : ch.components) {
        REQUIRE(c >= 0);
        REQUIRE(c < 30);
      }
      REQUIRE(ch.output_dim() == 22);
    }
    REQUIRE(v.feature_dim() == 132);
    REQUIRE(apply_view(v, outs).cols() == 132);
  }

  SECTION("conv2-rd keeps all positions but drops components") {
    FeatureViewState v = select_feature_view(outs, spec_of(ViewKind::Conv2Rd), 3);
    REQUIRE(v.source_layer == 2);
    for (const auto& ch : v.channels) {
      REQUIRE(ch.positions.empty());
      REQUIRE(ch.components.size() == 15);  // floor(0.75 * 20)
      for (int c : ch.components) {
        REQUIRE(c >= 0);
        REQUIRE(c < 20);
      }
    }
    REQUIRE(v.feature_dim() == 240);
    REQUIRE(apply_view(v, outs).cols() == 240);
  }
}

TEST_CASE("view selection draws are seeded per view and channel") {
  const auto& s = standard_fit();
  const ConvOutputs& outs = s.fit.train_outputs;
  FeatureViewSpec spec = spec_of(ViewKind::Conv1Rd);

  FeatureViewState v1 = select_feature_view(outs, spec, 77);
  FeatureViewState v2 = select_feature_view(outs, spec, 77);
  for (std::size_t ch = 0; ch < v1.channels.size(); ++ch) {
    REQUIRE(v1.channels[ch].positions == v2.channels[ch].positions);
    REQUIRE(v1.channels[ch].components == v2.channels[ch].components);
  }

  FeatureViewState v3 = select_feature_view(outs, spec, 78);
  bool any_differs = false;
  for (std::size_t ch = 0; ch < v1.channels.size(); ++ch)
    if (v1.channels[ch].positions != v3.channels[ch].positions) any_differs = true;
  REQUIRE(any_differs);

  // Channels get independent streams, so their draws should not coincide.
  REQUIRE(v1.channels[0].positions != v1.channels[1].positions);
}

TEST_CASE("view selection rejects infeasible targets") {
  const auto& s = standard_fit();
  const ConvOutputs& outs = s.fit.train_outputs;

  FeatureViewSpec spec = spec_of(ViewKind::Conv2);
  spec.k2 = 25;  // conv2 has exactly 25 positions per channel
  REQUIRE_THROWS_AS(select_feature_view(outs, spec, 1), std::invalid_argument);
  spec.k2 = 24;
  REQUIRE_NOTHROW(select_feature_view(outs, spec, 1));

  FeatureViewSpec starved = spec_of(ViewKind::Conv1Rd);
  starved.lambda0 = 0.004;  // floor(0.004 * 196) = 0 positions
  REQUIRE_THROWS_AS(select_feature_view(outs, starved, 1), std::invalid_argument);

  FeatureViewSpec bad = spec_of(ViewKind::Conv2);
  bad.lambda1 = 0.0;
  REQUIRE_THROWS_AS(select_feature_view(outs, bad, 1), std::invalid_argument);
}

TEST_CASE("shape chains for the four filter pairs") {
  LabeledImageSet train = synth::digits(2, 10, 501, 32, 32);
  struct Case {
    int f1, f2, conv1_hw, conv2_hw;
  };
  // 32 -f1-> crop-to-even -> pool, then again with f2.
  const Case cases[] = {
      {5, 5, 14, 5},  // 28 -> 14, 10 -> 5
      {3, 5, 15, 5},  // 30 -> 15, 11 -> 10 -> 5
      {5, 3, 14, 6},  // 28 -> 14, 12 -> 6
      {3, 3, 15, 6},  // 30 -> 15, 13 -> 12 -> 6
  };
  for (const Case& c : cases) {
    ConvArch arch;
    arch.layer1 = {c.f1, 4};
    arch.layer2 = {c.f2, 8};
    ConvFitResult fit = fit_conv_pipeline(train, arch, 99);
    CAPTURE(c.f1, c.f2);
    REQUIRE(fit.train_outputs.conv1.height == c.conv1_hw);
    REQUIRE(fit.train_outputs.conv1.width == c.conv1_hw);
    REQUIRE(fit.train_outputs.conv2.height == c.conv2_hw);
    REQUIRE(fit.train_outputs.conv2.width == c.conv2_hw);
    REQUIRE(fit.train_outputs.conv2.spectral == 8);
  }
}

namespace {

BaseConfig small_config() {
  BaseConfig config;
  config.form = InputForm::Gray;
  config.arch.layer1 = {5, 4};
  config.arch.layer2 = {3, 8};  // 18 -> 14 -> 7 -> 5 -> crop 4 -> pool 2x2
  config.view.kind = ViewKind::Conv2;
  config.view.k2 = 3;
  config.fc.stage_dims = {8, 6, 4};
  config.fc.class_count = 4;
  config.seed = 7;
  return config;
}

}  // namespace

TEST_CASE("train decisions match a fresh prediction on the training set") {
  LabeledImageSet train = synth::digits(6, 4, 41, 18, 18);
  BaseConfig config = small_config();

  Matrix train_decisions;
  BaseClassifier clf = train_base(config, train, &train_decisions);
  REQUIRE(train_decisions.rows() == train.count());
  REQUIRE(train_decisions.cols() == 4);
  REQUIRE(clf.view.feature_dim() == 8 * 3);

  Prediction pred = predict_base(clf, train);
  REQUIRE((pred.decisions - train_decisions).cwiseAbs().maxCoeff() < 1e-9);
  REQUIRE(pred.labels == decision_labels(train_decisions));
  REQUIRE(accuracy(pred.labels, train.labels) >= 0.8);
}

TEST_CASE("base training is deterministic in config and seed") {
  LabeledImageSet train = synth::digits(6, 4, 41, 18, 18);
  LabeledImageSet test = synth::digits(5, 4, 42, 18, 18);
  BaseConfig config = small_config();

  BaseClassifier a = train_base(config, train);
  BaseClassifier b = train_base(config, train);
  Matrix da = predict_base(a, test).decisions;
  Matrix db = predict_base(b, test).decisions;
  REQUIRE((da - db).norm() == 0.0);

  BaseConfig other = config;
  other.seed = 8;
  Matrix dc = predict_base(train_base(other, train), test).decisions;
  REQUIRE((da - dc).norm() > 0.0);
}

TEST_CASE("layer-1 views skip the second conv stage at prediction time") {
  LabeledImageSet train = synth::digits(6, 4, 41, 18, 18);
  LabeledImageSet test = synth::digits(5, 4, 42, 18, 18);
  BaseConfig config = small_config();
  config.view.kind = ViewKind::Conv1CheckerB;  // 24 odd-parity cells on 7x7
  config.view.k1 = 5;

  BaseClassifier clf = train_base(config, train);
  REQUIRE(clf.view.source_layer == 1);
  REQUIRE(clf.view.feature_dim() == 4 * 5);
  REQUIRE_FALSE(view_needs_conv2(clf.view.kind));

  Prediction pred = predict_base(clf, test);
  REQUIRE(static_cast<int>(pred.labels.size()) == test.count());
  REQUIRE(pred.decisions.cols() == 4);

  // The conv1 maps do not depend on the second layer, so the prediction must
  // agree with a forward pass that also materializes conv2.
  LabeledImageSet formed = apply_input_form(test, config.form);
  ConvOutputs full = conv_forward(clf.conv, formed, true);
  Matrix via_full = apply_fc(clf.fc, apply_view(clf.view, full));
  REQUIRE((pred.decisions - via_full).norm() == 0.0);
}

TEST_CASE("decision labels break ties toward the lowest class") {
  Matrix d(2, 3);
  d << 0.2, 0.7, 0.7,  //
      0.5, 0.4, 0.5;
  REQUIRE(decision_labels(d) == std::vector<int>{1, 0});
}

TEST_CASE("base configs compare by every field") {
  BaseConfig a = small_config();
  BaseConfig b = a;
  REQUIRE(a == b);
  b.seed = 8;
  REQUIRE_FALSE(a == b);
  b = a;
  b.view.k2 = 4;
  REQUIRE_FALSE(a == b);
  b = a;
  b.tag = SchemeTag::S2;
  REQUIRE_FALSE(a == b);
}

#pragma once

#include "feature_view.hpp"

namespace ffcnn {

// One feedforward-designed network: input form -> two Saab conv stages ->
// feature view -> least-squares FC cascade. Every stage is fitted in one
// pass from statistics; nothing is backpropagated.
struct BaseClassifier {
  BaseConfig config;
  ConvModel conv;
  FeatureViewState view;
  FCModel fc;
};

struct Prediction {
  Matrix decisions;         // n x class_count, raw FC outputs
  std::vector<int> labels;  // row argmax, ties to the lowest class
};

inline std::vector<int> decision_labels(const Matrix& decisions) {
  std::vector<int> labels(decisions.rows());
  for (Eigen::Index i = 0; i < decisions.rows(); ++i)
    labels[i] = argmax_index(decisions.row(i).transpose());
  return labels;
}

// The fitted module's decisions on its own training set fall out of the fit
// for free; pass `train_decisions` to collect them (ensembles fuse these).
inline BaseClassifier train_base(const BaseConfig& config,
                                 const LabeledImageSet& train,
                                 Matrix* train_decisions = nullptr) {
  config.validate();
  require(train.class_count == config.fc.class_count,
          "train_base: class count mismatch between data and fc arch");

  BaseClassifier clf;
  clf.config = config;
  LabeledImageSet formed = apply_input_form(train, config.form);
  ConvFitResult conv = fit_conv_pipeline(formed, config.arch, config.seed);
  clf.conv = std::move(conv.model);
  clf.view = select_feature_view(conv.train_outputs, config.view, config.seed);
  Matrix features = apply_view(clf.view, conv.train_outputs);
  clf.fc = fit_fc_module(features, train.labels, config.fc,
                         derive_seed(config.seed, 55));
  if (train_decisions) *train_decisions = apply_fc(clf.fc, features);
  return clf;
}

inline Prediction predict_base(const BaseClassifier& clf,
                               const LabeledImageSet& set) {
  LabeledImageSet formed = apply_input_form(set, clf.config.form);
  ConvOutputs outputs = conv_forward(clf.conv, formed,
                                     view_needs_conv2(clf.view.kind));
  Prediction pred;
  pred.decisions = apply_fc(clf.fc, apply_view(clf.view, outputs));
  pred.labels = decision_labels(pred.decisions);
  return pred;
}

inline double accuracy(const std::vector<int>& predicted,
                       const std::vector<int>& truth) {
  require(predicted.size() == truth.size() && !truth.empty(),
          "accuracy: size mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (predicted[i] == truth[i]) ++hits;
  return static_cast<double>(hits) / truth.size();
}

}  // namespace ffcnn

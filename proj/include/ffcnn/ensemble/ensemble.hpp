#pragma once

#include "../base/classifier.hpp"
#include "../svm/svm.hpp"
#include "confidence.hpp"
#include "diversity.hpp"

#include <atomic>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>

namespace ffcnn {

// Run fn(0..count-1) on up to `workers` threads. Results must be written to
// pre-sized slots so the outcome is identical to the serial order.
inline void parallel_for(int count, int workers,
                         const std::function<void(int)>& fn) {
  workers = std::max(1, std::min(workers, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  for (int w = 0; w < workers; ++w) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

struct EnsembleOptions {
  double fusion_energy = 0.995;
  SVMParams svm;
  double t1 = 0.98;
  double t2 = 0.7;
  bool hard_stage = false;
  std::uint64_t hard_seed_offset = 1000;
  int workers = 1;
};

// Horizontal concatenation of per-base decision matrices, roster order.
inline Matrix fuse(const std::vector<Matrix>& decisions) {
  require(!decisions.empty(), "fuse: no decision matrices");
  const auto n = decisions.front().rows();
  int total = 0;
  for (const auto& d : decisions) {
    require(d.rows() == n, "fuse: row count mismatch");
    total += static_cast<int>(d.cols());
  }
  Matrix fused(n, total);
  int col = 0;
  for (const auto& d : decisions) {
    fused.middleCols(col, d.cols()) = d;
    col += static_cast<int>(d.cols());
  }
  return fused;
}

// PCA (by energy) + RBF SVM on the fused decision vectors.
inline std::pair<PCABasis, SVMModel> fit_meta(const Matrix& fused,
                                              const std::vector<int>& labels,
                                              double energy,
                                              const SVMParams& params) {
  PCABasis basis = fit_pca(fused, PCATarget::by_energy(energy));
  SVMModel svm = fit_svm(project_pca(basis, fused), labels, params);
  return {std::move(basis), std::move(svm)};
}

struct EnsembleModel {
  std::vector<BaseClassifier> bases;
  PCABasis fusion;
  SVMModel meta;
  double t1 = 0.98;
  double t2 = 0.7;
  std::unique_ptr<EnsembleModel> hard;  // second stage, optional

  int class_count() const { return bases.front().config.fc.class_count; }
};

struct EnsemblePrediction {
  std::vector<int> labels;  // argmax of p_final, ties to the lowest class
  Matrix p_final;           // n x class_count meta decision scores
  std::vector<std::vector<int>> base_labels;
  std::vector<Matrix> base_decisions;
};

inline EnsemblePrediction predict_ensemble(const EnsembleModel& model,
                                           const LabeledImageSet& set,
                                           int workers = 1) {
  EnsemblePrediction out;
  out.base_decisions.resize(model.bases.size());
  out.base_labels.resize(model.bases.size());
  parallel_for(static_cast<int>(model.bases.size()), workers, [&](int i) {
    Prediction p = predict_base(model.bases[i], set);
    out.base_decisions[i] = std::move(p.decisions);
    out.base_labels[i] = std::move(p.labels);
  });
  Matrix fused = fuse(out.base_decisions);
  out.p_final = decision_scores(model.meta, project_pca(model.fusion, fused));
  out.labels = decision_labels(out.p_final);
  return out;
}

namespace detail {

inline int distinct_labels(const std::vector<int>& labels) {
  std::vector<int> sorted = labels;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  return static_cast<int>(sorted.size());
}

}  // namespace detail

// Training-set predictions produced as a side effect of fitting, so callers
// reporting train accuracy don't have to run the forward pass twice.
struct EnsembleFitDiagnostics {
  std::vector<std::vector<int>> base_train_labels;
  std::vector<int> train_labels;  // fused ensemble labels on the training set
  int hard_count = 0;             // rows routed to the second stage (0 if none)
};

// Train every base on `train`, fuse their decision vectors, and fit the
// meta-classifier. With opts.hard_stage, the ensemble re-scores its own
// training set, and a reseeded copy of the roster is trained on the
// low-confidence slice (skipped if that slice covers fewer than 2 classes).
inline EnsembleModel fit_ensemble(const std::vector<BaseConfig>& roster,
                                  const LabeledImageSet& train,
                                  const EnsembleOptions& opts,
                                  EnsembleFitDiagnostics* diag = nullptr) {
  require(!roster.empty(), "fit_ensemble: empty roster");
  for (const auto& cfg : roster)
    require(cfg.fc.class_count == train.class_count,
            "fit_ensemble: class count mismatch");

  EnsembleModel model;
  model.t1 = opts.t1;
  model.t2 = opts.t2;
  model.bases.resize(roster.size());
  std::vector<Matrix> train_decisions(roster.size());
  parallel_for(static_cast<int>(roster.size()), opts.workers, [&](int i) {
    model.bases[i] = train_base(roster[i], train, &train_decisions[i]);
  });

  Matrix fused = fuse(train_decisions);
  auto meta = fit_meta(fused, train.labels, opts.fusion_energy, opts.svm);
  model.fusion = std::move(meta.first);
  model.meta = std::move(meta.second);

  std::vector<std::vector<int>> base_labels(roster.size());
  for (std::size_t i = 0; i < roster.size(); ++i)
    base_labels[i] = decision_labels(train_decisions[i]);
  if (diag) {
    Matrix p_final = decision_scores(model.meta, project_pca(model.fusion, fused));
    diag->train_labels = decision_labels(p_final);
    diag->base_train_labels = base_labels;
  }

  if (opts.hard_stage) {
    Matrix p_final = decision_scores(model.meta, project_pca(model.fusion, fused));
    auto records = confidence_scores(p_final, base_labels, opts.t1, opts.t2);
    EasyHardSplit split = split_easy_hard(records);
    if (diag) diag->hard_count = static_cast<int>(split.hard_rows.size());
    if (!split.hard_rows.empty()) {
      LabeledImageSet hard_train = take_rows(train, split.hard_rows);
      if (detail::distinct_labels(hard_train.labels) >= 2) {
        std::vector<BaseConfig> hard_roster = roster;
        for (auto& cfg : hard_roster) cfg.seed += opts.hard_seed_offset;
        EnsembleOptions hard_opts = opts;
        hard_opts.hard_stage = false;
        model.hard = std::make_unique<EnsembleModel>(
            fit_ensemble(hard_roster, hard_train, hard_opts));
      }
    }
  }
  return model;
}

struct TwoStagePrediction {
  std::vector<int> labels;         // final: stage-2 label on hard rows
  std::vector<int> stage1_labels;  // plain ensemble labels
  std::vector<std::vector<int>> base_labels;
  std::vector<ConfidenceRecord> records;
  std::vector<int> hard_rows;
  std::vector<int> hard_labels;  // stage-2 labels aligned with hard_rows
};

inline TwoStagePrediction predict_two_stage(const EnsembleModel& model,
                                            const LabeledImageSet& set,
                                            int workers = 1) {
  EnsemblePrediction s1 = predict_ensemble(model, set, workers);
  TwoStagePrediction out;
  out.stage1_labels = s1.labels;
  out.labels = s1.labels;
  out.base_labels = std::move(s1.base_labels);
  out.records = confidence_scores(s1.p_final, out.base_labels, model.t1, model.t2);
  out.hard_rows = split_easy_hard(out.records).hard_rows;
  if (model.hard && !out.hard_rows.empty()) {
    LabeledImageSet hard_set = take_rows(set, out.hard_rows);
    EnsemblePrediction s2 = predict_ensemble(*model.hard, hard_set, workers);
    out.hard_labels = s2.labels;
    for (std::size_t k = 0; k < out.hard_rows.size(); ++k)
      out.labels[out.hard_rows[k]] = s2.labels[k];
  }
  return out;
}

}  // namespace ffcnn

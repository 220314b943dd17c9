#pragma once

#include "../data/dataset.hpp"

namespace ffcnn {

// Per-sample confidence of an ensemble decision:
//   cs1 - the winning class probability from the meta-classifier
//   cs2 - the share of base classifiers agreeing with the plurality label
// A sample is hard only when BOTH fall below their thresholds.
struct ConfidenceRecord {
  double cs1 = 0.0;
  double cs2 = 0.0;
  bool is_hard = false;
};

// Plurality label among the base votes; ties go to the lowest label.
inline int plurality_label(const std::vector<int>& votes, int class_count) {
  std::vector<int> counts(class_count, 0);
  for (int v : votes) {
    require(v >= 0 && v < class_count, "plurality_label: label out of range");
    ++counts[v];
  }
  int best = 0;
  for (int c = 1; c < class_count; ++c)
    if (counts[c] > counts[best]) best = c;
  return best;
}

// p_final: n x class_count rows on the simplex (meta decision scores);
// base_labels: one n-vector of per-sample labels per base classifier.
inline std::vector<ConfidenceRecord> confidence_scores(
    const Matrix& p_final, const std::vector<std::vector<int>>& base_labels,
    double t1, double t2) {
  const auto n = p_final.rows();
  const int class_count = static_cast<int>(p_final.cols());
  require(!base_labels.empty(), "confidence_scores: no base labels");
  for (const auto& v : base_labels)
    require(static_cast<Eigen::Index>(v.size()) == n,
            "confidence_scores: base label length mismatch");
  require(t1 >= 0.0 && t1 <= 1.0 && t2 >= 0.0 && t2 <= 1.0,
          "confidence_scores: thresholds must be in [0,1]");

  const double total = static_cast<double>(base_labels.size());
  std::vector<ConfidenceRecord> records(n);
  std::vector<int> votes(base_labels.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t m = 0; m < base_labels.size(); ++m) votes[m] = base_labels[m][i];
    int top = plurality_label(votes, class_count);
    int agree = 0;
    for (int v : votes) agree += (v == top);
    ConfidenceRecord& r = records[i];
    r.cs1 = p_final.row(i).maxCoeff();
    r.cs2 = agree / total;
    r.is_hard = r.cs1 < t1 && r.cs2 < t2;
  }
  return records;
}

struct EasyHardSplit {
  std::vector<int> easy_rows;
  std::vector<int> hard_rows;
};

inline EasyHardSplit split_easy_hard(const std::vector<ConfidenceRecord>& records) {
  EasyHardSplit split;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].is_hard)
      split.hard_rows.push_back(static_cast<int>(i));
    else
      split.easy_rows.push_back(static_cast<int>(i));
  }
  return split;
}

}  // namespace ffcnn

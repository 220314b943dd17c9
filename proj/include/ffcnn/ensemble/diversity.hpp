#pragma once

#include "../core.hpp"

namespace ffcnn {

// Yule's Q between two correctness vectors (1 = that classifier got the
// sample right). Q = (N11*N00 - N01*N10) / (N11*N00 + N01*N10); a zero
// denominator has no defined association and is flagged, value 0.
struct QStat {
  double value = 0.0;
  bool degenerate = false;
};

inline QStat q_statistic(const std::vector<std::uint8_t>& a,
                         const std::vector<std::uint8_t>& b) {
  require(a.size() == b.size() && !a.empty(), "q_statistic: size mismatch");
  double n11 = 0, n00 = 0, n10 = 0, n01 = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] && b[i]) ++n11;
    else if (!a[i] && !b[i]) ++n00;
    else if (a[i]) ++n10;
    else ++n01;
  }
  QStat q;
  double denom = n11 * n00 + n01 * n10;
  if (denom == 0.0) {
    q.degenerate = true;
  } else {
    q.value = (n11 * n00 - n01 * n10) / denom;
  }
  return q;
}

struct PairDiversity {
  int i = 0;
  int j = 0;
  double q = 0.0;
  bool degenerate = false;
};

// Disagreement entropy of an L-member pool: per sample, min(l, L-l) correct
// votes scaled by (L - ceil(L/2)), averaged. 0 = unanimous everywhere,
// 1 = maximally split everywhere.
inline double entropy_measure(const std::vector<std::vector<std::uint8_t>>& correctness) {
  const std::size_t L = correctness.size();
  require(L >= 2, "entropy_measure: need at least 2 members");
  const std::size_t n = correctness.front().size();
  require(n > 0, "entropy_measure: empty correctness vectors");
  for (const auto& row : correctness)
    require(row.size() == n, "entropy_measure: ragged correctness matrix");

  const double scale = 1.0 / (static_cast<double>(L) - std::ceil(L / 2.0));
  double total = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    std::size_t correct = 0;
    for (std::size_t m = 0; m < L; ++m) correct += correctness[m][s];
    total += scale * std::min(correct, L - correct);
  }
  return total / static_cast<double>(n);
}

struct DiversityReport {
  double mean_q = 0.0;  // degenerate pairs enter as 0
  double entropy = 0.0;
  std::vector<PairDiversity> pairs;
};

inline DiversityReport diversity_report(
    const std::vector<std::vector<std::uint8_t>>& correctness) {
  DiversityReport report;
  const int L = static_cast<int>(correctness.size());
  double sum = 0.0;
  for (int i = 0; i < L; ++i)
    for (int j = i + 1; j < L; ++j) {
      QStat q = q_statistic(correctness[i], correctness[j]);
      report.pairs.push_back({i, j, q.value, q.degenerate});
      sum += q.value;
    }
  if (!report.pairs.empty()) sum /= static_cast<double>(report.pairs.size());
  report.mean_q = sum;
  report.entropy = entropy_measure(correctness);
  return report;
}

}  // namespace ffcnn

#pragma once

#include "../core.hpp"

#include <deque>
#include <unordered_map>

namespace ffcnn {

struct SVMParams {
  double C = 1.0;
  double gamma = 0.0;  // 0 = auto: 1 / (dim * var of the standardized data)
  double tol = 1e-3;   // KKT violation gap at which a pair solve stops
  int max_passes = 100;  // iteration cap = max_passes * pair sample count
  int cache_mb = 256;    // kernel row cache per pair solve

  void validate() const {
    require(C > 0.0, "svm: C must be positive");
    require(gamma >= 0.0, "svm: gamma must be nonnegative");
    require(tol > 0.0, "svm: tol must be positive");
    require(max_passes >= 1, "svm: max_passes must be positive");
  }
};

// One one-vs-one problem: decision f(x) = sum coef_t K(sv_t, x) + intercept,
// positive toward class_a. Solver diagnostics ride along for inspection.
struct BinarySVM {
  int class_a = 0;
  int class_b = 0;
  Matrix support_vectors;  // rows in standardized feature space
  Vector coef;             // alpha_t * y_t
  double intercept = 0.0;
  double dual_objective = 0.0;
  double kkt_gap = 0.0;
  std::int64_t iterations = 0;
};

struct SVMModel {
  std::vector<int> classes;  // sorted distinct training labels
  Vector feature_mean;
  Vector feature_scale;
  double gamma = 0.0;
  SVMParams params;
  std::vector<BinarySVM> pairs;

  int class_count() const { return static_cast<int>(classes.size()); }
  int feature_dim() const { return static_cast<int>(feature_mean.size()); }
};

namespace detail {

// RBF kernel rows over one pair's samples, computed on demand and kept in a
// FIFO-bounded cache. K(i,i) = 1 for every i, which the solver exploits.
class KernelRows {
 public:
  KernelRows(const Matrix& x, double gamma, std::size_t budget_bytes)
      : x_(x), sqn_(x.rowwise().squaredNorm()), gamma_(gamma) {
    std::size_t row_bytes = sizeof(double) * static_cast<std::size_t>(x.rows());
    capacity_ = std::max<std::size_t>(2, budget_bytes / std::max<std::size_t>(1, row_bytes));
  }

  // The reference stays valid until the call after the next one: the most
  // recently returned row is pinned against eviction, so a caller may hold
  // row(i) while fetching row(j).
  const Vector& row(int i) {
    auto it = cache_.find(i);
    if (it != cache_.end()) {
      pinned_ = i;
      return it->second;
    }
    if (cache_.size() >= capacity_) {
      if (order_.front() == pinned_ && order_.size() > 1) {
        order_.push_back(order_.front());
        order_.pop_front();
      }
      cache_.erase(order_.front());
      order_.pop_front();
    }
    Vector k = (-gamma_ *
                (sqn_.array() + sqn_[i] - 2.0 * (x_ * x_.row(i).transpose()).array()))
                   .exp();
    order_.push_back(i);
    pinned_ = i;
    return cache_.emplace(i, std::move(k)).first->second;
  }

 private:
  const Matrix& x_;
  Vector sqn_;
  double gamma_;
  std::size_t capacity_;
  int pinned_ = -1;
  std::unordered_map<int, Vector> cache_;
  std::deque<int> order_;
};

struct SmoResult {
  Vector alpha;
  double intercept = 0.0;
  double dual_objective = 0.0;
  double kkt_gap = 0.0;
  std::int64_t iterations = 0;
};

// Sequential minimal optimization with maximal-violating-pair selection and
// a second-order choice of the partner index. The full gradient is kept in
// memory, so each iteration is two cached kernel rows plus O(m) updates.
// Deterministic: all scans run in index order with strict improvement.
inline SmoResult solve_smo(const Matrix& x, const std::vector<int>& y, double C,
                           double gamma, double tol, std::int64_t max_iter,
                           std::size_t cache_bytes) {
  const int m = static_cast<int>(x.rows());
  constexpr double tau = 1e-12;
  KernelRows kernel(x, gamma, cache_bytes);

  SmoResult r;
  r.alpha = Vector::Zero(m);
  Vector grad = Vector::Constant(m, -1.0);

  auto in_up = [&](int t) {
    return y[t] > 0 ? r.alpha[t] < C : r.alpha[t] > 0.0;
  };
  auto in_low = [&](int t) {
    return y[t] > 0 ? r.alpha[t] > 0.0 : r.alpha[t] < C;
  };

  while (r.iterations < max_iter) {
    // first index: maximal violation among the upward-movable set
    int i = -1;
    double gmax = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < m; ++t) {
      if (!in_up(t)) continue;
      double v = -y[t] * grad[t];
      if (v > gmax) {
        gmax = v;
        i = t;
      }
    }
    if (i < 0) break;  // nothing can move up; optimal under the box

    const Vector& ki = kernel.row(i);

    // second index: best second-order objective decrease among violators
    int j = -1;
    double gmax2 = -std::numeric_limits<double>::infinity();
    double best_obj = 0.0;
    for (int t = 0; t < m; ++t) {
      if (!in_low(t)) continue;
      double yg = y[t] * grad[t];
      if (yg > gmax2) gmax2 = yg;
      double grad_diff = gmax + yg;
      if (grad_diff > 0.0) {
        double quad = std::max(tau, 2.0 - 2.0 * ki[t]);
        double obj = -(grad_diff * grad_diff) / quad;
        if (obj < best_obj) {
          best_obj = obj;
          j = t;
        }
      }
    }
    r.kkt_gap = gmax + gmax2;
    if (r.kkt_gap <= tol || j < 0) break;

    const Vector& kj = kernel.row(j);
    double old_ai = r.alpha[i], old_aj = r.alpha[j];
    double quad = std::max(tau, 2.0 - 2.0 * ki[j]);

    if (y[i] != y[j]) {
      double delta = (-grad[i] - grad[j]) / quad;
      double diff = old_ai - old_aj;
      r.alpha[i] += delta;
      r.alpha[j] += delta;
      if (diff > 0.0) {
        if (r.alpha[j] < 0.0) {
          r.alpha[j] = 0.0;
          r.alpha[i] = diff;
        }
      } else {
        if (r.alpha[i] < 0.0) {
          r.alpha[i] = 0.0;
          r.alpha[j] = -diff;
        }
      }
      if (diff > 0.0) {
        if (r.alpha[i] > C) {
          r.alpha[i] = C;
          r.alpha[j] = C - diff;
        }
      } else {
        if (r.alpha[j] > C) {
          r.alpha[j] = C;
          r.alpha[i] = C + diff;
        }
      }
    } else {
      double delta = (grad[i] - grad[j]) / quad;
      double sum = old_ai + old_aj;
      r.alpha[i] -= delta;
      r.alpha[j] += delta;
      if (sum > C) {
        if (r.alpha[i] > C) {
          r.alpha[i] = C;
          r.alpha[j] = sum - C;
        }
      } else {
        if (r.alpha[j] < 0.0) {
          r.alpha[j] = 0.0;
          r.alpha[i] = sum;
        }
      }
      if (sum > C) {
        if (r.alpha[j] > C) {
          r.alpha[j] = C;
          r.alpha[i] = sum - C;
        }
      } else {
        if (r.alpha[i] < 0.0) {
          r.alpha[i] = 0.0;
          r.alpha[j] = sum;
        }
      }
    }

    double dai = r.alpha[i] - old_ai;
    double daj = r.alpha[j] - old_aj;
    for (int t = 0; t < m; ++t)
      grad[t] += y[t] * (y[i] * dai * ki[t] + y[j] * daj * kj[t]);
    ++r.iterations;
  }

  // intercept from the free vectors; box-saturated fallback is the midpoint
  // of the feasible interval
  double free_sum = 0.0;
  int free_count = 0;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  for (int t = 0; t < m; ++t) {
    double v = -y[t] * grad[t];
    if (r.alpha[t] > 0.0 && r.alpha[t] < C) {
      free_sum += v;
      ++free_count;
    }
    if (in_up(t)) lower = std::max(lower, v);
    if (in_low(t)) upper = std::min(upper, v);
  }
  r.intercept = free_count > 0 ? free_sum / free_count : 0.5 * (lower + upper);
  // obj = sum alpha - 1/2 a^T Q a, and grad = Q a - 1 folds that into:
  for (int t = 0; t < m; ++t) r.dual_objective += 0.5 * r.alpha[t] * (1.0 - grad[t]);
  return r;
}

// exp(-gamma * squared distance) block between row sets a and b.
inline Matrix rbf_block(const Matrix& a, const Matrix& b, double gamma) {
  Vector an = a.rowwise().squaredNorm();
  Vector bn = b.rowwise().squaredNorm();
  Matrix d2 = -2.0 * (a * b.transpose());
  d2.colwise() += an;
  d2.rowwise() += bn.transpose();
  return (-gamma * d2.cwiseMax(0.0)).array().exp();
}

}  // namespace detail

// One-vs-one RBF SVM. Features are standardized inside fit (statistics kept
// in the model); every unordered class pair gets a dedicated SMO solve.
inline SVMModel fit_svm(const Matrix& x, const std::vector<int>& y,
                        const SVMParams& params = {}) {
  params.validate();
  const auto n = x.rows();
  const auto d = x.cols();
  require(n == static_cast<Eigen::Index>(y.size()), "fit_svm: row/label mismatch");
  require(n >= 2, "fit_svm: need at least 2 samples");
  require(x.allFinite(), "fit_svm: non-finite input");

  SVMModel model;
  model.params = params;
  model.classes = y;
  std::sort(model.classes.begin(), model.classes.end());
  model.classes.erase(std::unique(model.classes.begin(), model.classes.end()),
                      model.classes.end());
  require(model.classes.size() >= 2, "fit_svm: need at least 2 classes");

  model.feature_mean = x.colwise().mean();
  Matrix centered = x.rowwise() - model.feature_mean.transpose();
  model.feature_scale =
      (centered.colwise().squaredNorm() / double(n - 1)).cwiseSqrt();
  for (Eigen::Index c = 0; c < d; ++c)
    if (model.feature_scale[c] < 1e-12) model.feature_scale[c] = 1.0;
  Matrix xs = centered.array().rowwise() / model.feature_scale.transpose().array();

  if (params.gamma > 0.0) {
    model.gamma = params.gamma;
  } else {
    double var = xs.array().square().sum() / double(n * d);
    model.gamma = 1.0 / (double(d) * std::max(var, 1e-12));
  }

  std::vector<std::vector<int>> rows_of(model.classes.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    int c = static_cast<int>(std::lower_bound(model.classes.begin(), model.classes.end(),
                                              y[i]) -
                             model.classes.begin());
    rows_of[c].push_back(static_cast<int>(i));
  }

  const std::size_t cache_bytes = std::size_t(params.cache_mb) << 20;
  for (std::size_t a = 0; a < model.classes.size(); ++a) {
    for (std::size_t b = a + 1; b < model.classes.size(); ++b) {
      const auto& ra = rows_of[a];
      const auto& rb = rows_of[b];
      const int m = static_cast<int>(ra.size() + rb.size());
      Matrix px(m, d);
      std::vector<int> py(m);
      for (std::size_t i = 0; i < ra.size(); ++i) {
        px.row(i) = xs.row(ra[i]);
        py[i] = +1;
      }
      for (std::size_t i = 0; i < rb.size(); ++i) {
        px.row(ra.size() + i) = xs.row(rb[i]);
        py[ra.size() + i] = -1;
      }
      std::int64_t max_iter =
          std::max<std::int64_t>(1000, std::int64_t(params.max_passes) * m);
      detail::SmoResult r = detail::solve_smo(px, py, params.C, model.gamma,
                                              params.tol, max_iter, cache_bytes);

      BinarySVM pair;
      pair.class_a = model.classes[a];
      pair.class_b = model.classes[b];
      pair.intercept = r.intercept;
      pair.dual_objective = r.dual_objective;
      pair.kkt_gap = r.kkt_gap;
      pair.iterations = r.iterations;
      std::vector<int> sv;
      for (int t = 0; t < m; ++t)
        if (r.alpha[t] > 1e-12 * params.C) sv.push_back(t);
      pair.support_vectors.resize(sv.size(), d);
      pair.coef.resize(sv.size());
      for (std::size_t t = 0; t < sv.size(); ++t) {
        pair.support_vectors.row(t) = px.row(sv[t]);
        pair.coef[t] = r.alpha[sv[t]] * py[sv[t]];
      }
      model.pairs.push_back(std::move(pair));
    }
  }
  return model;
}

namespace detail {

// Per-row vote counts and per-class summed signed margins for a query block.
struct VoteTally {
  Matrix votes;    // n x class_count
  Matrix margins;  // n x class_count, + toward the class
};

inline VoteTally tally_votes(const SVMModel& model, const Matrix& x) {
  require(x.cols() == model.feature_dim(), "svm: feature dim mismatch");
  Matrix xs = (x.rowwise() - model.feature_mean.transpose()).array().rowwise() /
              model.feature_scale.transpose().array();
  VoteTally tally;
  tally.votes = Matrix::Zero(x.rows(), model.class_count());
  tally.margins = Matrix::Zero(x.rows(), model.class_count());
  auto index_of = [&](int label) {
    return static_cast<int>(std::lower_bound(model.classes.begin(), model.classes.end(),
                                             label) -
                            model.classes.begin());
  };
  for (const auto& pair : model.pairs) {
    Vector f = rbf_block(xs, pair.support_vectors, model.gamma) * pair.coef;
    f.array() += pair.intercept;
    int a = index_of(pair.class_a), b = index_of(pair.class_b);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (f[i] > 0.0)
        tally.votes(i, a) += 1.0;
      else
        tally.votes(i, b) += 1.0;
      tally.margins(i, a) += f[i];
      tally.margins(i, b) -= f[i];
    }
  }
  return tally;
}

inline int vote_winner(const Eigen::Ref<const Vector>& votes,
                       const Eigen::Ref<const Vector>& margins) {
  int best = 0;
  for (int c = 1; c < votes.size(); ++c) {
    if (votes[c] > votes[best] ||
        (votes[c] == votes[best] && margins[c] > margins[best]))
      best = c;
  }
  return best;
}

}  // namespace detail

// Majority vote over the pair decisions; ties break by summed signed margin,
// then by the lowest class index.
inline std::vector<int> predict_svm(const SVMModel& model, const Matrix& x) {
  detail::VoteTally tally = detail::tally_votes(model, x);
  std::vector<int> out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    out[i] = model.classes[detail::vote_winner(tally.votes.row(i).transpose(),
                                               tally.margins.row(i).transpose())];
  return out;
}

// Per-class confidence rows on the probability simplex, ordered like
// model.classes. Two classes reduce to a plain sigmoid of the single
// decision value; with more classes the vote histogram dominates and a
// small sigmoid term of the mean margin breaks plateau ties smoothly.
inline Matrix decision_scores(const SVMModel& model, const Matrix& x) {
  const int cc = model.class_count();
  if (cc == 2) {
    Matrix xs = (x.rowwise() - model.feature_mean.transpose()).array().rowwise() /
                model.feature_scale.transpose().array();
    const auto& pair = model.pairs.front();
    Vector f = detail::rbf_block(xs, pair.support_vectors, model.gamma) * pair.coef;
    f.array() += pair.intercept;
    Matrix scores(x.rows(), 2);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      scores(i, 0) = sigmoid(f[i]);
      scores(i, 1) = 1.0 - scores(i, 0);
    }
    return scores;
  }
  detail::VoteTally tally = detail::tally_votes(model, x);
  Matrix scores(x.rows(), cc);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double total = 0.0;
    for (int c = 0; c < cc; ++c) {
      double mean_margin = tally.margins(i, c) / double(cc - 1);
      scores(i, c) = tally.votes(i, c) + 1e-3 * sigmoid(mean_margin);
      total += scores(i, c);
    }
    scores.row(i) /= total;
  }
  return scores;
}

}  // namespace ffcnn

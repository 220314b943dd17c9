#pragma once

#include "../data/cifar10.hpp"
#include "../data/mnist.hpp"
#include "../io/model_file.hpp"
#include "config.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>

namespace ffcnn {

// Relative dataset paths resolve against $FFCNN_DATA_ROOT (falling back to
// the working directory), so configs stay machine-independent.
inline std::string resolve_data_path(const std::string& path) {
  if (path.empty() || path.front() == '/') return path;
  if (const char* root = std::getenv("FFCNN_DATA_ROOT"))
    return std::string(root) + "/" + path;
  return path;
}

inline LabeledImageSet load_split(const DatasetConfig& ds, bool train) {
  if (ds.name == "mnist") {
    return load_mnist(resolve_data_path(train ? ds.train_images : ds.test_images),
                      resolve_data_path(train ? ds.train_labels : ds.test_labels));
  }
  std::vector<std::string> paths;
  for (const auto& p : train ? ds.train_batches : ds.test_batches)
    paths.push_back(resolve_data_path(p));
  return load_cifar10(paths);
}

inline LabeledImageSet load_train_set(const DatasetConfig& ds) {
  LabeledImageSet set = load_split(ds, true);
  if (ds.per_class > 0) set = subset(set, ds.per_class, ds.subset_seed);
  return set;
}

inline EnsembleOptions ensemble_options(const ExperimentConfig& exp, int workers) {
  EnsembleOptions opts;
  opts.fusion_energy = exp.ensemble.energy;
  opts.svm.C = exp.ensemble.svm_c;
  opts.svm.gamma = exp.ensemble.svm_gamma;
  opts.svm.tol = exp.ensemble.svm_tol;
  opts.svm.max_passes = exp.ensemble.svm_max_passes;
  opts.t1 = exp.ensemble.t1;
  opts.t2 = exp.ensemble.t2;
  opts.hard_stage = exp.ensemble.hard_stage;
  opts.hard_seed_offset = exp.ensemble.hard_seed_offset;
  opts.workers = workers;
  return opts;
}

namespace detail {

inline std::string csv_double(double v) { return fmt_double(v); }

inline std::string base_label_text(const BaseConfig& cfg) {
  std::ostringstream os;
  os << to_string(cfg.form) << '/' << to_string(cfg.view.kind) << '/'
     << cfg.arch.layer1.filter_size << 'x' << cfg.arch.layer2.filter_size << "/s"
     << cfg.seed;
  return os.str();
}

inline std::ofstream open_out(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  std::ofstream os(dir + "/" + name);
  require(os.good(), "cannot open " + dir + "/" + name + " for writing");
  return os;
}

}  // namespace detail

// --- train ----------------------------------------------------------------

// Trains the configured ensemble, saves <out>/model.ffcn, and writes
// <out>/train_report.csv with one row per base plus the fused result.
inline int run_train(const ExperimentConfig& exp, int workers,
                     std::ostream& log = std::cout) {
  LabeledImageSet train = load_train_set(exp.dataset);
  std::vector<BaseConfig> roster = exp.roster();
  EnsembleOptions opts = ensemble_options(exp, workers);

  EnsembleFitDiagnostics diag;
  EnsembleModel model = fit_ensemble(roster, train, opts, &diag);

  std::ofstream csv = detail::open_out(exp.out_dir, "train_report.csv");
  csv << "kind,name,count,accuracy\n";
  for (std::size_t i = 0; i < roster.size(); ++i) {
    double acc = accuracy(diag.base_train_labels[i], train.labels);
    csv << "base," << i << ':' << detail::base_label_text(roster[i]) << ','
        << train.count() << ',' << detail::csv_double(acc) << '\n';
    log << "base " << i << " (" << detail::base_label_text(roster[i])
        << ") train accuracy " << acc << "\n";
  }
  double ens_acc = accuracy(diag.train_labels, train.labels);
  csv << "ensemble,ff," << train.count() << ',' << detail::csv_double(ens_acc) << '\n';
  log << "ensemble train accuracy " << ens_acc << "\n";
  if (model.hard)
    log << "hard stage trained on " << diag.hard_count << " low-confidence rows\n";

  save_model(model, exp.out_dir + "/model.ffcn");
  log << "model written to " << exp.out_dir << "/model.ffcn\n";
  return 0;
}

// --- eval -------------------------------------------------------------------

inline double subset_accuracy(const std::vector<int>& predicted,
                              const std::vector<int>& truth,
                              const std::vector<int>& rows) {
  if (rows.empty()) return 0.0;
  int hits = 0;
  for (int r : rows) hits += predicted[r] == truth[r];
  return static_cast<double>(hits) / rows.size();
}

// Evaluates a saved model: per-base accuracy, the fused ensemble, the
// easy/hard split, and the two-stage result. Writes eval_report.csv and
// confidence.csv into the output directory.
inline int run_eval(const ExperimentConfig& exp, const std::string& model_path,
                    int workers, std::ostream& log = std::cout) {
  EnsembleModel model = load_model(model_path);
  LabeledImageSet test = load_split(exp.dataset, false);

  TwoStagePrediction pred = predict_two_stage(model, test, workers);
  EasyHardSplit split = split_easy_hard(pred.records);

  std::ofstream csv = detail::open_out(exp.out_dir, "eval_report.csv");
  csv << "kind,name,count,accuracy\n";
  for (std::size_t i = 0; i < model.bases.size(); ++i) {
    double acc = accuracy(pred.base_labels[i], test.labels);
    csv << "base," << i << ':' << detail::base_label_text(model.bases[i].config)
        << ',' << test.count() << ',' << detail::csv_double(acc) << '\n';
  }
  double ff = accuracy(pred.stage1_labels, test.labels);
  double ff_plus = accuracy(pred.labels, test.labels);
  double easy = subset_accuracy(pred.stage1_labels, test.labels, split.easy_rows);
  double hard = subset_accuracy(pred.stage1_labels, test.labels, split.hard_rows);
  csv << "ensemble,ff," << test.count() << ',' << detail::csv_double(ff) << '\n';
  csv << "split,easy," << split.easy_rows.size() << ',' << detail::csv_double(easy)
      << '\n';
  csv << "split,hard," << split.hard_rows.size() << ',' << detail::csv_double(hard)
      << '\n';
  if (model.hard && !split.hard_rows.empty()) {
    double hard_plus = subset_accuracy(pred.labels, test.labels, split.hard_rows);
    csv << "split,hard_plus," << split.hard_rows.size() << ','
        << detail::csv_double(hard_plus) << '\n';
  } else {
    csv << "split,hard_plus," << split.hard_rows.size() << ",\n";
  }
  csv << "ensemble,ff_plus," << test.count() << ',' << detail::csv_double(ff_plus)
      << '\n';

  std::ofstream conf = detail::open_out(exp.out_dir, "confidence.csv");
  conf << "index,cs1,cs2,is_hard\n";
  for (std::size_t i = 0; i < pred.records.size(); ++i)
    conf << test.indices[i] << ',' << detail::csv_double(pred.records[i].cs1) << ','
         << detail::csv_double(pred.records[i].cs2) << ','
         << (pred.records[i].is_hard ? 1 : 0) << '\n';

  log << "test accuracy " << ff << " (two-stage " << ff_plus << "), "
      << split.hard_rows.size() << " hard samples\n";
  return 0;
}

// --- report -----------------------------------------------------------------

inline int run_report(const ExperimentConfig& exp, const std::string& model_path,
                      const std::string& kind, int workers,
                      std::ostream& log = std::cout) {
  EnsembleModel model = load_model(model_path);
  LabeledImageSet test = load_split(exp.dataset, false);

  if (kind == "diversity") {
    EnsemblePrediction pred = predict_ensemble(model, test, workers);
    std::vector<std::vector<std::uint8_t>> correct(model.bases.size());
    for (std::size_t m = 0; m < model.bases.size(); ++m) {
      correct[m].resize(test.count());
      for (int i = 0; i < test.count(); ++i)
        correct[m][i] = pred.base_labels[m][i] == test.labels[i];
    }
    std::ofstream csv = detail::open_out(exp.out_dir, "diversity.csv");
    csv << "scheme,members,pairs,mean_q,entropy\n";
    auto emit = [&](const std::string& name, const std::vector<std::size_t>& members) {
      if (members.size() < 2) {
        csv << name << ',' << members.size() << ",0,nan,nan\n";
        return;
      }
      std::vector<std::vector<std::uint8_t>> rows;
      for (auto m : members) rows.push_back(correct[m]);
      DiversityReport report = diversity_report(rows);
      csv << name << ',' << members.size() << ',' << report.pairs.size() << ','
          << detail::csv_double(report.mean_q) << ','
          << detail::csv_double(report.entropy) << '\n';
      log << name << ": mean Q " << report.mean_q << ", entropy " << report.entropy
          << "\n";
    };
    for (SchemeTag tag : {SchemeTag::S1, SchemeTag::S2, SchemeTag::S3}) {
      std::vector<std::size_t> members;
      for (std::size_t m = 0; m < model.bases.size(); ++m)
        if (model.bases[m].config.tag == tag) members.push_back(m);
      emit(to_string(tag), members);
    }
    std::vector<std::size_t> all(model.bases.size());
    for (std::size_t m = 0; m < all.size(); ++m) all[m] = m;
    emit("all", all);
    return 0;
  }

  if (kind == "correlation") {
    // spatial correlation inside each layer-2 channel of the first base
    const BaseClassifier& base = model.bases.front();
    LabeledImageSet formed = apply_input_form(test, base.config.form);
    ConvOutputs outputs = conv_forward(base.conv, formed, true);
    std::ofstream csv = detail::open_out(exp.out_dir, "correlation.csv");
    csv << "channel,row,col,correlation\n";
    for (int ch = 0; ch < outputs.conv2.spectral; ++ch) {
      ChannelCorrelation cc = channel_correlation(outputs.conv2, ch);
      for (Eigen::Index r = 0; r < cc.corr.rows(); ++r)
        for (Eigen::Index c = 0; c < cc.corr.cols(); ++c)
          csv << ch << ',' << r << ',' << c << ','
              << detail::csv_double(cc.corr(r, c)) << '\n';
    }
    log << "correlation written for " << outputs.conv2.spectral << " channels\n";
    return 0;
  }

  if (kind == "size-sweep") {
    // accuracy of the prefix ensemble as bases join, meta refit per prefix
    LabeledImageSet train = load_train_set(exp.dataset);
    std::vector<Matrix> train_dec(model.bases.size());
    std::vector<Matrix> test_dec(model.bases.size());
    parallel_for(static_cast<int>(model.bases.size()), workers, [&](int i) {
      train_dec[i] = predict_base(model.bases[i], train).decisions;
      test_dec[i] = predict_base(model.bases[i], test).decisions;
    });
    SVMParams params = ensemble_options(exp, workers).svm;
    std::ofstream csv = detail::open_out(exp.out_dir, "size_sweep.csv");
    csv << "bases,test_accuracy\n";
    for (std::size_t m = 1; m <= model.bases.size(); ++m) {
      std::vector<Matrix> train_prefix(train_dec.begin(), train_dec.begin() + m);
      std::vector<Matrix> test_prefix(test_dec.begin(), test_dec.begin() + m);
      auto meta = fit_meta(fuse(train_prefix), train.labels,
                           exp.ensemble.energy, params);
      Matrix scores = decision_scores(
          meta.second, project_pca(meta.first, fuse(test_prefix)));
      double acc = accuracy(decision_labels(scores), test.labels);
      csv << m << ',' << detail::csv_double(acc) << '\n';
      log << m << " bases: " << acc << "\n";
    }
    return 0;
  }

  throw ConfigError("unknown report kind '" + kind +
                    "' (expected diversity, correlation, or size-sweep)");
}

}  // namespace ffcnn

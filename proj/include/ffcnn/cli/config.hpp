#pragma once

#include "../base/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace ffcnn {

// Experiment configs use a small INI/TOML-style grammar:
//   - `[section]` tables and repeatable `[[base]]` tables
//   - `key = value` with strings ("..."), numbers, booleans, and
//     single-line lists of those
//   - `#` starts a comment (outside strings)
// Unknown sections or keys are errors that name the offender, so a typo
// can't silently fall back to a default.

namespace cfg {

struct Value {
  enum class Kind { Str, Num, Bool, List };
  Kind kind = Kind::Num;
  std::string str;
  double num = 0.0;
  bool boolean = false;
  std::vector<Value> items;
  int line = 0;
};

struct Table {
  std::string name;
  int line = 0;
  std::vector<std::pair<std::string, Value>> entries;

  const Value* find(const std::string& key) const {
    for (const auto& [k, v] : entries)
      if (k == key) return &v;
    return nullptr;
  }
};

namespace detail {

[[noreturn]] inline void fail(int line, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

inline std::string strip(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Remove a trailing comment, respecting quoted strings.
inline std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

inline Value parse_scalar(const std::string& text, int line) {
  Value v;
  v.line = line;
  if (text.size() >= 2 && text.front() == '"' && text.back() == '"') {
    v.kind = Value::Kind::Str;
    v.str = text.substr(1, text.size() - 2);
    if (v.str.find('"') != std::string::npos)
      fail(line, "embedded quotes are not supported");
    return v;
  }
  if (text == "true" || text == "false") {
    v.kind = Value::Kind::Bool;
    v.boolean = text == "true";
    return v;
  }
  char* end = nullptr;
  v.num = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0')
    fail(line, "cannot parse value '" + text + "'");
  v.kind = Value::Kind::Num;
  return v;
}

inline Value parse_value(const std::string& text, int line) {
  if (!text.empty() && text.front() == '[') {
    if (text.back() != ']') fail(line, "unterminated list");
    Value v;
    v.kind = Value::Kind::List;
    v.line = line;
    std::string body = text.substr(1, text.size() - 2);
    std::string item;
    bool quoted = false;
    for (char c : body) {
      if (c == '"') quoted = !quoted;
      if (c == ',' && !quoted) {
        v.items.push_back(parse_scalar(strip(item), line));
        item.clear();
      } else {
        item += c;
      }
    }
    if (!strip(item).empty()) v.items.push_back(parse_scalar(strip(item), line));
    return v;
  }
  return parse_scalar(text, line);
}

}  // namespace detail

inline std::vector<Table> parse_tables(const std::string& text) {
  std::vector<Table> tables;
  std::istringstream is(text);
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    std::string s = detail::strip(detail::strip_comment(raw));
    if (s.empty()) continue;
    if (s.front() == '[') {
      bool repeated = s.size() >= 2 && s[1] == '[';
      std::string close = repeated ? "]]" : "]";
      if (s.substr(s.size() - close.size()) != close)
        detail::fail(line, "malformed section header");
      std::string name = s.substr(repeated ? 2 : 1,
                                  s.size() - 2 * (repeated ? 2 : 1));
      name = detail::strip(name);
      if (name.empty()) detail::fail(line, "empty section name");
      if (repeated != (name == "base"))
        detail::fail(line, repeated ? "only [[base]] may repeat"
                                    : "section [" + name + "] must use [[...]]");
      tables.push_back({name, line, {}});
      continue;
    }
    std::size_t eq = s.find('=');
    if (eq == std::string::npos) detail::fail(line, "expected key = value");
    if (tables.empty()) detail::fail(line, "key outside any section");
    std::string key = detail::strip(s.substr(0, eq));
    if (key.empty()) detail::fail(line, "empty key");
    tables.back().entries.emplace_back(
        key, detail::parse_value(detail::strip(s.substr(eq + 1)), line));
  }
  return tables;
}

}  // namespace cfg

struct DatasetConfig {
  std::string name;  // "mnist" or "cifar10"
  std::string train_images, train_labels, test_images, test_labels;
  std::vector<std::string> train_batches, test_batches;
  int per_class = 0;  // 0 = the whole training set
  std::uint64_t subset_seed = 0;

  bool operator==(const DatasetConfig&) const = default;
};

struct EnsembleConfig {
  double energy = 0.995;
  double svm_c = 1.0;
  double svm_gamma = 0.0;
  double svm_tol = 1e-3;
  int svm_max_passes = 100;
  double t1 = 0.98;
  double t2 = 0.7;
  bool hard_stage = false;
  std::uint64_t hard_seed_offset = 1000;

  bool operator==(const EnsembleConfig&) const = default;
};

// One [[base]] table; `repeat` expands it into that many roster slots with
// consecutive seeds.
struct BaseEntry {
  BaseConfig config;
  int repeat = 1;

  bool operator==(const BaseEntry& o) const {
    return config == o.config && repeat == o.repeat;
  }
};

struct ExperimentConfig {
  DatasetConfig dataset;
  EnsembleConfig ensemble;
  std::string out_dir = "out";
  std::vector<BaseEntry> bases;

  std::vector<BaseConfig> roster() const {
    std::vector<BaseConfig> out;
    for (const auto& entry : bases)
      for (int r = 0; r < entry.repeat; ++r) {
        BaseConfig cfg = entry.config;
        cfg.seed += static_cast<std::uint64_t>(r);
        out.push_back(cfg);
      }
    return out;
  }

  bool operator==(const ExperimentConfig& o) const {
    return dataset == o.dataset && ensemble == o.ensemble && out_dir == o.out_dir &&
           bases == o.bases;
  }
};

namespace detail {

inline void reject_unknown(const cfg::Table& t,
                           const std::vector<std::string>& known) {
  for (const auto& [key, value] : t.entries) {
    bool ok = false;
    for (const auto& k : known) ok = ok || k == key;
    if (!ok)
      throw ConfigError("config line " + std::to_string(value.line) +
                        ": unknown key '" + key + "' in [" + t.name + "]");
  }
}

inline const cfg::Value& want(const cfg::Table& t, const std::string& key) {
  const cfg::Value* v = t.find(key);
  if (!v)
    throw ConfigError("config: section [" + t.name + "] (line " +
                      std::to_string(t.line) + ") is missing key '" + key + "'");
  return *v;
}

inline std::string as_string(const cfg::Value& v, const std::string& key) {
  if (v.kind != cfg::Value::Kind::Str)
    throw ConfigError("config line " + std::to_string(v.line) + ": '" + key +
                      "' must be a string");
  return v.str;
}

inline double as_number(const cfg::Value& v, const std::string& key) {
  if (v.kind != cfg::Value::Kind::Num)
    throw ConfigError("config line " + std::to_string(v.line) + ": '" + key +
                      "' must be a number");
  return v.num;
}

inline bool as_bool(const cfg::Value& v, const std::string& key) {
  if (v.kind != cfg::Value::Kind::Bool)
    throw ConfigError("config line " + std::to_string(v.line) + ": '" + key +
                      "' must be true or false");
  return v.boolean;
}

inline std::int64_t as_int(const cfg::Value& v, const std::string& key) {
  double d = as_number(v, key);
  auto i = static_cast<std::int64_t>(std::llround(d));
  if (static_cast<double>(i) != d)
    throw ConfigError("config line " + std::to_string(v.line) + ": '" + key +
                      "' must be an integer");
  return i;
}

inline std::vector<double> as_number_list(const cfg::Value& v, const std::string& key) {
  if (v.kind != cfg::Value::Kind::List)
    throw ConfigError("config line " + std::to_string(v.line) + ": '" + key +
                      "' must be a list");
  std::vector<double> out;
  for (const auto& item : v.items) out.push_back(as_number(item, key));
  return out;
}

inline std::vector<int> as_int_list(const cfg::Value& v, const std::string& key) {
  std::vector<int> out;
  for (double d : as_number_list(v, key)) {
    auto i = static_cast<int>(std::llround(d));
    if (static_cast<double>(i) != d)
      throw ConfigError("config line " + std::to_string(v.line) + ": '" + key +
                        "' must hold integers");
    out.push_back(i);
  }
  return out;
}

inline std::vector<std::string> as_string_list(const cfg::Value& v,
                                               const std::string& key) {
  if (v.kind != cfg::Value::Kind::List)
    throw ConfigError("config line " + std::to_string(v.line) + ": '" + key +
                      "' must be a list");
  std::vector<std::string> out;
  for (const auto& item : v.items) out.push_back(as_string(item, key));
  return out;
}

}  // namespace detail

inline ExperimentConfig build_experiment_config(const std::vector<cfg::Table>& tables) {
  using namespace detail;
  ExperimentConfig exp;
  bool saw_dataset = false;

  // dataset first: its name decides defaults for the other sections
  for (const auto& t : tables) {
    if (t.name != "dataset") continue;
    if (saw_dataset) throw ConfigError("config: duplicate [dataset] section");
    saw_dataset = true;
    reject_unknown(t, {"name", "train_images", "train_labels", "test_images",
                       "test_labels", "train_batches", "test_batches", "per_class",
                       "subset_seed"});
    exp.dataset.name = as_string(want(t, "name"), "name");
    if (exp.dataset.name == "mnist") {
      exp.dataset.train_images = as_string(want(t, "train_images"), "train_images");
      exp.dataset.train_labels = as_string(want(t, "train_labels"), "train_labels");
      exp.dataset.test_images = as_string(want(t, "test_images"), "test_images");
      exp.dataset.test_labels = as_string(want(t, "test_labels"), "test_labels");
    } else if (exp.dataset.name == "cifar10") {
      exp.dataset.train_batches =
          as_string_list(want(t, "train_batches"), "train_batches");
      exp.dataset.test_batches =
          as_string_list(want(t, "test_batches"), "test_batches");
    } else {
      throw ConfigError("config: unknown dataset '" + exp.dataset.name + "'");
    }
    if (const auto* v = t.find("per_class")) {
      exp.dataset.per_class = static_cast<int>(as_int(*v, "per_class"));
      if (exp.dataset.per_class < 0)
        throw ConfigError("config: per_class must be >= 0");
    }
    if (const auto* v = t.find("subset_seed"))
      exp.dataset.subset_seed = static_cast<std::uint64_t>(as_int(*v, "subset_seed"));
  }
  if (!saw_dataset) throw ConfigError("config: missing [dataset] section");

  const bool cifar = exp.dataset.name == "cifar10";
  exp.ensemble.t1 = cifar ? 0.97 : 0.98;
  exp.ensemble.t2 = cifar ? 0.65 : 0.7;
  const int default_k1 = cifar ? 20 : 30;
  const int default_k2 = cifar ? 12 : 20;

  for (const auto& t : tables) {
    if (t.name == "dataset") continue;
    if (t.name == "ensemble") {
      reject_unknown(t, {"energy", "svm_c", "svm_gamma", "svm_tol", "svm_max_passes",
                         "t1", "t2", "hard_stage", "hard_seed_offset"});
      if (const auto* v = t.find("energy")) exp.ensemble.energy = as_number(*v, "energy");
      if (const auto* v = t.find("svm_c")) exp.ensemble.svm_c = as_number(*v, "svm_c");
      if (const auto* v = t.find("svm_gamma"))
        exp.ensemble.svm_gamma = as_number(*v, "svm_gamma");
      if (const auto* v = t.find("svm_tol")) exp.ensemble.svm_tol = as_number(*v, "svm_tol");
      if (const auto* v = t.find("svm_max_passes"))
        exp.ensemble.svm_max_passes = static_cast<int>(as_int(*v, "svm_max_passes"));
      if (const auto* v = t.find("t1")) exp.ensemble.t1 = as_number(*v, "t1");
      if (const auto* v = t.find("t2")) exp.ensemble.t2 = as_number(*v, "t2");
      if (const auto* v = t.find("hard_stage"))
        exp.ensemble.hard_stage = as_bool(*v, "hard_stage");
      if (const auto* v = t.find("hard_seed_offset"))
        exp.ensemble.hard_seed_offset =
            static_cast<std::uint64_t>(as_int(*v, "hard_seed_offset"));
    } else if (t.name == "output") {
      reject_unknown(t, {"dir"});
      if (const auto* v = t.find("dir")) exp.out_dir = as_string(*v, "dir");
    } else if (t.name == "base") {
      reject_unknown(t, {"form", "filters", "kernels", "view", "fc", "lambda", "k1",
                         "k2", "seed", "tag", "repeat"});
      BaseEntry entry;
      BaseConfig& b = entry.config;
      b.form = input_form_from_string(as_string(want(t, "form"), "form"));
      std::vector<int> filters = as_int_list(want(t, "filters"), "filters");
      std::vector<int> kernels = as_int_list(want(t, "kernels"), "kernels");
      if (filters.size() != 2 || kernels.size() != 2)
        throw ConfigError("config line " + std::to_string(t.line) +
                          ": 'filters' and 'kernels' must have 2 entries");
      b.arch.layer1 = {filters[0], kernels[0]};
      b.arch.layer2 = {filters[1], kernels[1]};
      b.view.kind = view_kind_from_string(as_string(want(t, "view"), "view"));
      b.fc.stage_dims = as_int_list(want(t, "fc"), "fc");
      b.fc.class_count = 10;
      if (const auto* v = t.find("lambda")) {
        std::vector<double> l = as_number_list(*v, "lambda");
        if (l.size() != 3)
          throw ConfigError("config line " + std::to_string(v->line) +
                            ": 'lambda' must have 3 entries");
        b.view.lambda0 = l[0];
        b.view.lambda1 = l[1];
        b.view.lambda2 = l[2];
      }
      b.view.k1 = default_k1;
      b.view.k2 = default_k2;
      if (const auto* v = t.find("k1")) b.view.k1 = static_cast<int>(as_int(*v, "k1"));
      if (const auto* v = t.find("k2")) b.view.k2 = static_cast<int>(as_int(*v, "k2"));
      if (const auto* v = t.find("seed"))
        b.seed = static_cast<std::uint64_t>(as_int(*v, "seed"));
      b.tag = scheme_tag_from_string(as_string(want(t, "tag"), "tag"));
      if (const auto* v = t.find("repeat")) {
        entry.repeat = static_cast<int>(as_int(*v, "repeat"));
        if (entry.repeat < 1) throw ConfigError("config: repeat must be >= 1");
      }
      try {
        b.validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigError("config line " + std::to_string(t.line) + ": " + e.what());
      }
      exp.bases.push_back(std::move(entry));
    } else {
      throw ConfigError("config line " + std::to_string(t.line) +
                        ": unknown section [" + t.name + "]");
    }
  }

  if (exp.bases.empty()) throw ConfigError("config: no [[base]] sections");
  if (exp.ensemble.energy <= 0.0 || exp.ensemble.energy > 1.0)
    throw ConfigError("config: energy must be in (0,1]");
  return exp;
}

inline ExperimentConfig parse_experiment_config(const std::string& text) {
  return build_experiment_config(cfg::parse_tables(text));
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream is(path);
  if (!is.good()) throw ConfigError("config: cannot open " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_experiment_config(buf.str());
}

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

// Canonical text form; parse(serialize(c)) == c.
inline std::string serialize_experiment_config(const ExperimentConfig& exp) {
  std::ostringstream os;
  os << "[dataset]\n";
  os << "name = \"" << exp.dataset.name << "\"\n";
  if (exp.dataset.name == "mnist") {
    os << "train_images = \"" << exp.dataset.train_images << "\"\n";
    os << "train_labels = \"" << exp.dataset.train_labels << "\"\n";
    os << "test_images = \"" << exp.dataset.test_images << "\"\n";
    os << "test_labels = \"" << exp.dataset.test_labels << "\"\n";
  } else {
    auto write_list = [&](const char* key, const std::vector<std::string>& items) {
      os << key << " = [";
      for (std::size_t i = 0; i < items.size(); ++i)
        os << (i ? ", " : "") << '"' << items[i] << '"';
      os << "]\n";
    };
    write_list("train_batches", exp.dataset.train_batches);
    write_list("test_batches", exp.dataset.test_batches);
  }
  os << "per_class = " << exp.dataset.per_class << "\n";
  os << "subset_seed = " << exp.dataset.subset_seed << "\n";

  os << "\n[ensemble]\n";
  os << "energy = " << detail::fmt_double(exp.ensemble.energy) << "\n";
  os << "svm_c = " << detail::fmt_double(exp.ensemble.svm_c) << "\n";
  os << "svm_gamma = " << detail::fmt_double(exp.ensemble.svm_gamma) << "\n";
  os << "svm_tol = " << detail::fmt_double(exp.ensemble.svm_tol) << "\n";
  os << "svm_max_passes = " << exp.ensemble.svm_max_passes << "\n";
  os << "t1 = " << detail::fmt_double(exp.ensemble.t1) << "\n";
  os << "t2 = " << detail::fmt_double(exp.ensemble.t2) << "\n";
  os << "hard_stage = " << (exp.ensemble.hard_stage ? "true" : "false") << "\n";
  os << "hard_seed_offset = " << exp.ensemble.hard_seed_offset << "\n";

  os << "\n[output]\n";
  os << "dir = \"" << exp.out_dir << "\"\n";

  for (const auto& entry : exp.bases) {
    const BaseConfig& b = entry.config;
    os << "\n[[base]]\n";
    os << "form = \"" << to_string(b.form) << "\"\n";
    os << "filters = [" << b.arch.layer1.filter_size << ", "
       << b.arch.layer2.filter_size << "]\n";
    os << "kernels = [" << b.arch.layer1.kernel_count << ", "
       << b.arch.layer2.kernel_count << "]\n";
    os << "view = \"" << to_string(b.view.kind) << "\"\n";
    os << "fc = [";
    for (std::size_t i = 0; i < b.fc.stage_dims.size(); ++i)
      os << (i ? ", " : "") << b.fc.stage_dims[i];
    os << "]\n";
    os << "lambda = [" << detail::fmt_double(b.view.lambda0) << ", "
       << detail::fmt_double(b.view.lambda1) << ", "
       << detail::fmt_double(b.view.lambda2) << "]\n";
    os << "k1 = " << b.view.k1 << "\n";
    os << "k2 = " << b.view.k2 << "\n";
    os << "seed = " << b.seed << "\n";
    os << "tag = \"" << to_string(b.tag) << "\"\n";
    os << "repeat = " << entry.repeat << "\n";
  }
  return os.str();
}

}  // namespace ffcnn

#pragma once

#include "../ensemble/ensemble.hpp"

#include <fstream>
#include <map>

namespace ffcnn {

// Flat binary container of named f64 arrays, little-endian throughout:
//   "FFCN" | u32 version | u64 section count | sections... | u64 fnv1a64
// section: u32 name length | name | u32 rank | i64 dims... | f64 values...
// The checksum covers every section byte, so truncation and bit rot are
// caught before any array is trusted. Integers ride as doubles (every value
// we store is well under 2^53; 64-bit seeds are split into two halves).
namespace modelfile {

constexpr std::uint32_t kVersion = 1;

struct Array {
  std::vector<std::int64_t> shape;
  std::vector<double> values;
};

namespace detail {

inline void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& buf, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64(buf, bits);
}

struct Cursor {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw DataError("model file: truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= std::uint32_t(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= std::uint64_t(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  double f64() {
    std::uint64_t bits = u64();
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  }
};

inline std::uint64_t fnv1a64(const char* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

class Writer {
 public:
  void add(const std::string& name, std::vector<std::int64_t> shape,
           const double* values) {
    std::int64_t count = 1;
    for (auto d : shape) count *= d;
    detail::put_u32(body_, static_cast<std::uint32_t>(name.size()));
    body_.append(name);
    detail::put_u32(body_, static_cast<std::uint32_t>(shape.size()));
    for (auto d : shape) detail::put_u64(body_, static_cast<std::uint64_t>(d));
    for (std::int64_t i = 0; i < count; ++i) detail::put_f64(body_, values[i]);
    ++sections_;
  }

  void add(const std::string& name, const std::vector<double>& v) {
    add(name, {static_cast<std::int64_t>(v.size())}, v.data());
  }

  void add(const std::string& name, const Vector& v) {
    add(name, {static_cast<std::int64_t>(v.size())}, v.data());
  }

  // Matrices are written row-major regardless of in-memory layout.
  void add(const std::string& name, const Matrix& m) {
    std::vector<double> rows;
    rows.reserve(m.size());
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) rows.push_back(m(r, c));
    add(name, {m.rows(), m.cols()}, rows.data());
  }

  void add_scalar(const std::string& name, double v) { add(name, {1}, &v); }

  void write(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    require(os.good(), "model file: cannot open " + path + " for writing");
    std::string head = "FFCN";
    detail::put_u32(head, kVersion);
    detail::put_u64(head, sections_);
    os.write(head.data(), static_cast<std::streamsize>(head.size()));
    os.write(body_.data(), static_cast<std::streamsize>(body_.size()));
    std::string foot;
    detail::put_u64(foot, detail::fnv1a64(body_.data(), body_.size()));
    os.write(foot.data(), static_cast<std::streamsize>(foot.size()));
    require(os.good(), "model file: write failed for " + path);
  }

 private:
  std::string body_;
  std::uint64_t sections_ = 0;
};

class Reader {
 public:
  explicit Reader(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is.good()) throw DataError("model file: cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(is)),
                    std::istreambuf_iterator<char>());
    if (buf.size() < 24 || buf.compare(0, 4, "FFCN") != 0)
      throw DataError("model file: bad magic in " + path);
    detail::Cursor cur{buf, 4};
    std::uint32_t version = cur.u32();
    if (version != kVersion)
      throw DataError("model file: unsupported version " + std::to_string(version));
    std::uint64_t sections = cur.u64();

    std::size_t body_begin = cur.pos;
    if (buf.size() < body_begin + 8) throw DataError("model file: truncated");
    std::uint64_t stored;
    {
      detail::Cursor tail{buf, buf.size() - 8};
      stored = tail.u64();
    }
    std::uint64_t actual =
        detail::fnv1a64(buf.data() + body_begin, buf.size() - body_begin - 8);
    if (stored != actual) throw DataError("model file: checksum mismatch in " + path);

    for (std::uint64_t s = 0; s < sections; ++s) {
      std::uint32_t name_len = cur.u32();
      cur.need(name_len);
      std::string name = buf.substr(cur.pos, name_len);
      cur.pos += name_len;
      std::uint32_t rank = cur.u32();
      Array arr;
      std::int64_t count = 1;
      for (std::uint32_t r = 0; r < rank; ++r) {
        auto dim = static_cast<std::int64_t>(cur.u64());
        arr.shape.push_back(dim);
        count *= dim;
      }
      if (count < 0) throw DataError("model file: bad shape for " + name);
      arr.values.resize(count);
      for (std::int64_t i = 0; i < count; ++i) arr.values[i] = cur.f64();
      arrays_.emplace(std::move(name), std::move(arr));
    }
    if (cur.pos != buf.size() - 8) throw DataError("model file: trailing bytes");
  }

  const Array& get(const std::string& name) const {
    auto it = arrays_.find(name);
    if (it == arrays_.end()) throw DataError("model file: missing array " + name);
    return it->second;
  }

  double scalar(const std::string& name) const {
    const Array& a = get(name);
    if (a.values.size() != 1) throw DataError("model file: " + name + " is not scalar");
    return a.values.front();
  }

  Vector vector(const std::string& name) const {
    const Array& a = get(name);
    return Eigen::Map<const Vector>(a.values.data(),
                                    static_cast<Eigen::Index>(a.values.size()));
  }

  Matrix matrix(const std::string& name) const {
    const Array& a = get(name);
    if (a.shape.size() != 2) throw DataError("model file: " + name + " is not 2-d");
    Matrix m(a.shape[0], a.shape[1]);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = a.values[k++];
    return m;
  }

  std::vector<int> ints(const std::string& name) const {
    const Array& a = get(name);
    std::vector<int> out(a.values.size());
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = static_cast<int>(std::llround(a.values[i]));
    return out;
  }

 private:
  std::map<std::string, Array> arrays_;
};

}  // namespace modelfile

namespace detail {

inline void write_pca(modelfile::Writer& w, const std::string& p, const PCABasis& b) {
  w.add(p + "mean", b.mean);
  w.add(p + "components", b.components);
  w.add(p + "eigenvalues", b.eigenvalues);
}

inline PCABasis read_pca(const modelfile::Reader& r, const std::string& p) {
  PCABasis b;
  b.mean = r.vector(p + "mean");
  b.components = r.matrix(p + "components");
  b.eigenvalues = r.vector(p + "eigenvalues");
  return b;
}

inline std::vector<double> to_doubles(const std::vector<int>& v) {
  return std::vector<double>(v.begin(), v.end());
}

inline void write_ensemble(modelfile::Writer& w, const std::string& p,
                           const EnsembleModel& model) {
  w.add_scalar(p + "roster/count", static_cast<double>(model.bases.size()));
  for (std::size_t i = 0; i < model.bases.size(); ++i) {
    const BaseClassifier& base = model.bases[i];
    const BaseConfig& cfg = base.config;
    std::string bp = p + "roster/" + std::to_string(i) + "/";

    w.add(bp + "ints",
          to_doubles({static_cast<int>(cfg.form), cfg.arch.layer1.filter_size,
                      cfg.arch.layer1.kernel_count, cfg.arch.layer2.filter_size,
                      cfg.arch.layer2.kernel_count, static_cast<int>(cfg.view.kind),
                      cfg.view.k1, cfg.view.k2, static_cast<int>(cfg.tag),
                      cfg.fc.class_count}));
    w.add(bp + "reals", std::vector<double>{cfg.view.lambda0, cfg.view.lambda1,
                                            cfg.view.lambda2});
    w.add(bp + "seed",
          std::vector<double>{static_cast<double>(cfg.seed & 0xffffffffULL),
                              static_cast<double>(cfg.seed >> 32)});
    w.add(bp + "fc_dims", to_doubles(cfg.fc.stage_dims));

    int l = 1;
    for (const SaabLayer* layer : {&base.conv.layer1, &base.conv.layer2}) {
      std::string lp = bp + "conv" + std::to_string(l++) + "/";
      w.add(lp + "kernels", layer->kernels);
      w.add(lp + "meta",
            std::vector<double>{layer->bias, static_cast<double>(layer->input_channels),
                                static_cast<double>(layer->filter_size)});
    }

    w.add(bp + "view/meta",
          std::vector<double>{static_cast<double>(base.view.kind),
                              static_cast<double>(base.view.source_layer),
                              static_cast<double>(base.view.channels.size())});
    for (std::size_t ch = 0; ch < base.view.channels.size(); ++ch) {
      const ChannelView& cv = base.view.channels[ch];
      std::string vp = bp + "view/" + std::to_string(ch) + "/";
      w.add(vp + "positions", to_doubles(cv.positions));
      write_pca(w, vp, cv.basis);
      w.add(vp + "selected", to_doubles(cv.components));
    }

    w.add_scalar(bp + "fc/count", static_cast<double>(base.fc.stages.size()));
    for (std::size_t s = 0; s < base.fc.stages.size(); ++s) {
      const FCStage& stage = base.fc.stages[s];
      std::string sp = bp + "fc/" + std::to_string(s) + "/";
      w.add(sp + "weights", stage.map.weights);
      w.add(sp + "bias", stage.map.bias);
      w.add_scalar(sp + "rectified", stage.rectified ? 1.0 : 0.0);
    }
  }

  write_pca(w, p + "fusion/", model.fusion);

  const SVMModel& svm = model.meta;
  w.add(p + "svm/classes", to_doubles(svm.classes));
  w.add(p + "svm/mean", svm.feature_mean);
  w.add(p + "svm/scale", svm.feature_scale);
  w.add(p + "svm/meta",
        std::vector<double>{svm.gamma, svm.params.C, svm.params.gamma,
                            svm.params.tol, static_cast<double>(svm.params.max_passes),
                            static_cast<double>(svm.params.cache_mb),
                            static_cast<double>(svm.pairs.size())});
  for (std::size_t q = 0; q < svm.pairs.size(); ++q) {
    const BinarySVM& pair = svm.pairs[q];
    std::string qp = p + "svm/" + std::to_string(q) + "/";
    w.add(qp + "ab", std::vector<double>{static_cast<double>(pair.class_a),
                                         static_cast<double>(pair.class_b)});
    w.add(qp + "sv", pair.support_vectors);
    w.add(qp + "coef", pair.coef);
    w.add(qp + "meta",
          std::vector<double>{pair.intercept, pair.dual_objective, pair.kkt_gap,
                              static_cast<double>(pair.iterations)});
  }

  w.add(p + "thresholds", std::vector<double>{model.t1, model.t2});
  w.add_scalar(p + "has_hard", model.hard ? 1.0 : 0.0);
  if (model.hard) write_ensemble(w, p + "hard/", *model.hard);
}

inline EnsembleModel read_ensemble(const modelfile::Reader& r, const std::string& p) {
  EnsembleModel model;
  int count = static_cast<int>(r.scalar(p + "roster/count"));
  for (int i = 0; i < count; ++i) {
    std::string bp = p + "roster/" + std::to_string(i) + "/";
    BaseClassifier base;

    std::vector<int> ints = r.ints(bp + "ints");
    if (ints.size() != 10) throw DataError("model file: bad base ints");
    BaseConfig& cfg = base.config;
    cfg.form = static_cast<InputForm>(ints[0]);
    cfg.arch.layer1 = {ints[1], ints[2]};
    cfg.arch.layer2 = {ints[3], ints[4]};
    cfg.view.kind = static_cast<ViewKind>(ints[5]);
    cfg.view.k1 = ints[6];
    cfg.view.k2 = ints[7];
    cfg.tag = static_cast<SchemeTag>(ints[8]);
    cfg.fc.class_count = ints[9];
    Vector reals = r.vector(bp + "reals");
    cfg.view.lambda0 = reals[0];
    cfg.view.lambda1 = reals[1];
    cfg.view.lambda2 = reals[2];
    Vector seed_halves = r.vector(bp + "seed");
    cfg.seed = static_cast<std::uint64_t>(seed_halves[0]) |
               (static_cast<std::uint64_t>(seed_halves[1]) << 32);
    cfg.fc.stage_dims = r.ints(bp + "fc_dims");

    int l = 1;
    for (SaabLayer* layer : {&base.conv.layer1, &base.conv.layer2}) {
      std::string lp = bp + "conv" + std::to_string(l++) + "/";
      layer->kernels = r.matrix(lp + "kernels");
      Vector meta = r.vector(lp + "meta");
      layer->bias = meta[0];
      layer->input_channels = static_cast<int>(meta[1]);
      layer->filter_size = static_cast<int>(meta[2]);
    }

    Vector vmeta = r.vector(bp + "view/meta");
    base.view.kind = static_cast<ViewKind>(static_cast<int>(vmeta[0]));
    base.view.source_layer = static_cast<int>(vmeta[1]);
    int channels = static_cast<int>(vmeta[2]);
    for (int ch = 0; ch < channels; ++ch) {
      std::string vp = bp + "view/" + std::to_string(ch) + "/";
      ChannelView cv;
      cv.positions = r.ints(vp + "positions");
      cv.basis = read_pca(r, vp);
      cv.components = r.ints(vp + "selected");
      base.view.channels.push_back(std::move(cv));
    }

    int stages = static_cast<int>(r.scalar(bp + "fc/count"));
    for (int s = 0; s < stages; ++s) {
      std::string sp = bp + "fc/" + std::to_string(s) + "/";
      FCStage stage;
      stage.map.weights = r.matrix(sp + "weights");
      stage.map.bias = r.vector(sp + "bias");
      stage.rectified = r.scalar(sp + "rectified") != 0.0;
      base.fc.stages.push_back(std::move(stage));
    }
    model.bases.push_back(std::move(base));
  }

  model.fusion = read_pca(r, p + "fusion/");

  SVMModel& svm = model.meta;
  svm.classes = r.ints(p + "svm/classes");
  svm.feature_mean = r.vector(p + "svm/mean");
  svm.feature_scale = r.vector(p + "svm/scale");
  Vector smeta = r.vector(p + "svm/meta");
  svm.gamma = smeta[0];
  svm.params.C = smeta[1];
  svm.params.gamma = smeta[2];
  svm.params.tol = smeta[3];
  svm.params.max_passes = static_cast<int>(smeta[4]);
  svm.params.cache_mb = static_cast<int>(smeta[5]);
  int pair_count = static_cast<int>(smeta[6]);
  for (int q = 0; q < pair_count; ++q) {
    std::string qp = p + "svm/" + std::to_string(q) + "/";
    BinarySVM pair;
    std::vector<int> ab = r.ints(qp + "ab");
    pair.class_a = ab[0];
    pair.class_b = ab[1];
    pair.support_vectors = r.matrix(qp + "sv");
    pair.coef = r.vector(qp + "coef");
    Vector pmeta = r.vector(qp + "meta");
    pair.intercept = pmeta[0];
    pair.dual_objective = pmeta[1];
    pair.kkt_gap = pmeta[2];
    pair.iterations = static_cast<std::int64_t>(pmeta[3]);
    svm.pairs.push_back(std::move(pair));
  }

  Vector thresholds = r.vector(p + "thresholds");
  model.t1 = thresholds[0];
  model.t2 = thresholds[1];
  if (r.scalar(p + "has_hard") != 0.0)
    model.hard = std::make_unique<EnsembleModel>(read_ensemble(r, p + "hard/"));
  return model;
}

}  // namespace detail

inline void save_model(const EnsembleModel& model, const std::string& path) {
  modelfile::Writer writer;
  detail::write_ensemble(writer, "", model);
  writer.write(path);
}

inline EnsembleModel load_model(const std::string& path) {
  modelfile::Reader reader(path);
  return detail::read_ensemble(reader, "");
}

}  // namespace ffcnn

#include <catch2/catch_amalgamated.hpp>

#include "support/synth.hpp"

#include <ffcnn/ffcnn.hpp>

#include <filesystem>
#include <fstream>

using namespace ffcnn;
using Catch::Matchers::ContainsSubstring;

namespace {

std::string temp_dir() {
  static std::string dir = [] {
    auto d = std::filesystem::temp_directory_path() / "ffcnn_model_file_test";
    std::filesystem::create_directories(d);
    return d.string();
  }();
  return dir;
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  return std::string((std::istreambuf_iterator<char>(is)),
                     std::istreambuf_iterator<char>());
}

void spit(const std::string& path, const std::string& bytes) {
  std::ofstream os(path, std::ios::binary);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::vector<BaseConfig> tiny_roster(int n) {
  std::vector<BaseConfig> roster;
  for (int i = 0; i < n; ++i) {
    BaseConfig cfg;
    cfg.form = InputForm::Gray;
    cfg.arch.layer1 = {5, 4};
    cfg.arch.layer2 = {3, 8};
    cfg.view.kind = ViewKind::Conv2;
    cfg.view.k2 = 3;
    cfg.fc.stage_dims = {8, 6, 4};
    cfg.fc.class_count = 4;
    cfg.seed = 100 + i;
    cfg.tag = i % 2 == 0 ? SchemeTag::S1 : SchemeTag::S2;
    roster.push_back(cfg);
  }
  return roster;
}

}  // namespace

TEST_CASE("named arrays round-trip through the container") {
  std::string path = temp_dir() + "/arrays.ffcn";
  Matrix m(2, 3);
  m << 1.5, -2.0, 3.25,  //
      4.0, 0.0, -6.5;
  Vector v(4);
  v << 0.1, 0.2, 0.3, 0.4;

  modelfile::Writer w;
  w.add_scalar("alpha", 2.75);
  w.add("vec", v);
  w.add("mat", m);
  w.add("ids", std::vector<double>{3.0, 0.0, 7.0});
  w.write(path);

  modelfile::Reader r(path);
  REQUIRE(r.scalar("alpha") == 2.75);
  REQUIRE((r.vector("vec") - v).norm() == 0.0);
  REQUIRE((r.matrix("mat") - m).norm() == 0.0);
  REQUIRE(r.ints("ids") == std::vector<int>{3, 0, 7});
  REQUIRE(r.get("mat").shape == std::vector<std::int64_t>{2, 3});

  REQUIRE_THROWS_AS(r.get("missing"), DataError);
  REQUIRE_THROWS_AS(r.scalar("vec"), DataError);
  REQUIRE_THROWS_AS(r.matrix("vec"), DataError);
}

TEST_CASE("a flipped payload byte fails the checksum") {
  std::string path = temp_dir() + "/flip.ffcn";
  modelfile::Writer w;
  w.add("payload", std::vector<double>{1.0, 2.0, 3.0});
  w.write(path);

  std::string bytes = slurp(path);
  REQUIRE(bytes.size() > 24);
  bytes[20] = static_cast<char>(bytes[20] ^ 0x40);  // inside the section body
  spit(path, bytes);
  REQUIRE_THROWS_MATCHES(modelfile::Reader(path), DataError,
                         Catch::Matchers::MessageMatches(ContainsSubstring("checksum")));
}

TEST_CASE("bad magic, bad version, truncation, and absence are rejected") {
  std::string path = temp_dir() + "/header.ffcn";
  modelfile::Writer w;
  w.add("payload", std::vector<double>{4.0, 5.0});
  w.write(path);
  std::string good = slurp(path);

  std::string magic = good;
  magic[0] = 'X';
  spit(path, magic);
  REQUIRE_THROWS_MATCHES(modelfile::Reader(path), DataError,
                         Catch::Matchers::MessageMatches(ContainsSubstring("magic")));

  std::string version = good;
  version[4] = 9;
  spit(path, version);
  REQUIRE_THROWS_MATCHES(modelfile::Reader(path), DataError,
                         Catch::Matchers::MessageMatches(ContainsSubstring("version")));

  spit(path, good.substr(0, good.size() - 5));
  REQUIRE_THROWS_AS(modelfile::Reader(path), DataError);

  REQUIRE_THROWS_AS(modelfile::Reader(temp_dir() + "/nothing.ffcn"), DataError);
}

TEST_CASE("ensemble model survives a save/load round trip") {
  LabeledImageSet train = synth::digits(10, 4, 5, 18, 18);
  LabeledImageSet test = synth::digits(6, 4, 1234, 18, 18);

  std::vector<BaseConfig> roster = tiny_roster(2);
  roster[1].seed = (std::uint64_t(7) << 40) + 9;  // exercises the split halves
  EnsembleOptions opts;
  opts.t1 = 0.9;
  opts.t2 = 0.6;
  EnsembleModel model = fit_ensemble(roster, train, opts);

  std::string path = temp_dir() + "/round.ffcn";
  save_model(model, path);
  EnsembleModel loaded = load_model(path);

  REQUIRE(loaded.bases.size() == model.bases.size());
  for (std::size_t i = 0; i < model.bases.size(); ++i)
    REQUIRE(loaded.bases[i].config == model.bases[i].config);
  REQUIRE(loaded.t1 == model.t1);
  REQUIRE(loaded.t2 == model.t2);
  REQUIRE(loaded.meta.classes == model.meta.classes);
  REQUIRE(loaded.meta.pairs.size() == model.meta.pairs.size());
  REQUIRE(loaded.meta.gamma == model.meta.gamma);
  REQUIRE(loaded.hard == nullptr);

  EnsemblePrediction before = predict_ensemble(model, test, 1);
  EnsemblePrediction after = predict_ensemble(loaded, test, 1);
  REQUIRE(after.labels == before.labels);
  REQUIRE((after.p_final - before.p_final).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(after.base_labels == before.base_labels);
}

TEST_CASE("hard-stage models round-trip as a nested section") {
  LabeledImageSet train = synth::digits(14, 10, 3, 18, 18);
  EnsembleOptions opts;
  opts.t1 = 1.0;
  opts.t2 = 1.0;
  opts.hard_stage = true;
  opts.workers = 2;
  std::vector<BaseConfig> roster = tiny_roster(3);
  ViewKind kinds[3] = {ViewKind::Conv2, ViewKind::Conv1CheckerA,
                       ViewKind::Conv1CheckerB};
  for (int i = 0; i < 3; ++i) {
    roster[i].arch.layer1 = {i == 1 ? 3 : 5, 4};
    roster[i].view.kind = kinds[i];
    roster[i].view.k1 = 6;
    roster[i].fc.stage_dims = {20, 10};
    roster[i].fc.class_count = 10;
  }
  EnsembleModel model = fit_ensemble(roster, train, opts);
  REQUIRE(model.hard != nullptr);

  std::string path = temp_dir() + "/hard.ffcn";
  save_model(model, path);
  EnsembleModel loaded = load_model(path);
  REQUIRE(loaded.hard != nullptr);
  REQUIRE(loaded.hard->hard == nullptr);
  REQUIRE(loaded.hard->bases.size() == 3);
  for (std::size_t i = 0; i < 3; ++i)
    REQUIRE(loaded.hard->bases[i].config == model.hard->bases[i].config);

  TwoStagePrediction before = predict_two_stage(model, train, 2);
  TwoStagePrediction after = predict_two_stage(loaded, train, 2);
  REQUIRE(after.labels == before.labels);
  REQUIRE(after.stage1_labels == before.stage1_labels);
  REQUIRE(after.hard_rows == before.hard_rows);
  REQUIRE(after.hard_labels == before.hard_labels);
}

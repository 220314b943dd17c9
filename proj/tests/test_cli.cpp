#include <catch2/catch_amalgamated.hpp>

#include "support/synth.hpp"

#include <ffcnn/ffcnn.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

using namespace ffcnn;

namespace {

struct RunResult {
  int code = -1;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is.good()) return "";
  return std::string((std::istreambuf_iterator<char>(is)),
                     std::istreambuf_iterator<char>());
}

std::vector<std::string> lines_of(const std::string& path) {
  std::ifstream is(path);
  REQUIRE(is.good());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(is, line)) out.push_back(line);
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

// Everything the cases share: synthetic IDX data, a config file, and one
// completed training run (without --out, so the config's directory is used).
struct CliFixture {
  std::string dir;
  std::string config_path;
  std::string out_cfg;  // [output] dir from the config
  RunResult first_train;

  RunResult run(const std::string& args) const {
    static int counter = 0;
    std::string errfile = dir + "/stderr_" + std::to_string(counter++) + ".txt";
    std::string cmd = std::string(FFCNN_BIN_PATH) + " " + args + " >/dev/null 2>" +
                      errfile;
    int status = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = slurp(errfile);
    return r;
  }
};

const CliFixture& fx() {
  static CliFixture f = [] {
    CliFixture out;
    auto d = std::filesystem::temp_directory_path() / "ffcnn_cli_test";
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    out.dir = d.string();
    out.out_cfg = out.dir + "/out_cfg";

    LabeledImageSet train = synth::digits(8, 10, 21, 28, 28);
    LabeledImageSet test = synth::digits(4, 10, 22, 28, 28);
    synth::write_idx_pair(train, out.dir + "/train-images.idx",
                          out.dir + "/train-labels.idx");
    synth::write_idx_pair(test, out.dir + "/test-images.idx",
                          out.dir + "/test-labels.idx");

    // loader pads to 32x32: conv1 28 -> pool 14x14, conv2 10 -> pool 5x5
    std::ostringstream cfg;
    cfg << "[dataset]\n"
        << "name = \"mnist\"\n"
        << "train_images = \"" << out.dir << "/train-images.idx\"\n"
        << "train_labels = \"" << out.dir << "/train-labels.idx\"\n"
        << "test_images = \"" << out.dir << "/test-images.idx\"\n"
        << "test_labels = \"" << out.dir << "/test-labels.idx\"\n"
        << "[ensemble]\n"
        << "svm_c = 4.0\n"
        << "[output]\n"
        << "dir = \"" << out.out_cfg << "\"\n"
        << "[[base]]\n"
        << "form = \"gray\"\n"
        << "filters = [5, 5]\n"
        << "kernels = [4, 8]\n"
        << "view = \"conv2\"\n"
        << "k2 = 5\n"
        << "fc = [16, 10]\n"
        << "seed = 100\n"
        << "tag = \"s1\"\n"
        << "[[base]]\n"
        << "form = \"gray\"\n"
        << "filters = [5, 5]\n"
        << "kernels = [4, 8]\n"
        << "view = \"conv1-checker-a\"\n"
        << "k1 = 6\n"
        << "fc = [16, 10]\n"
        << "seed = 101\n"
        << "tag = \"s2\"\n";
    out.config_path = out.dir + "/experiment.toml";
    std::ofstream(out.config_path) << cfg.str();

    out.first_train =
        out.run("train --config " + out.config_path + " --workers 2");
    return out;
  }();
  return f;
}

}  // namespace

TEST_CASE("train writes the model and report into the configured directory") {
  const CliFixture& f = fx();
  INFO(f.first_train.err);
  REQUIRE(f.first_train.code == 0);
  REQUIRE(std::filesystem::exists(f.out_cfg + "/model.ffcn"));

  auto lines = lines_of(f.out_cfg + "/train_report.csv");
  REQUIRE(lines.size() == 4);
  REQUIRE(lines[0] == "kind,name,count,accuracy");
  auto row0 = split_csv(lines[1]);
  REQUIRE(row0[0] == "base");
  REQUIRE(row0[1] == "0:gray/conv2/5x5/s100");
  REQUIRE(row0[2] == "80");
  auto row1 = split_csv(lines[2]);
  REQUIRE(row1[1] == "1:gray/conv1-checker-a/5x5/s101");
  auto ens = split_csv(lines[3]);
  REQUIRE(ens[0] == "ensemble");
  REQUIRE(ens[1] == "ff");
  REQUIRE(std::stod(ens[3]) >= 0.8);

  EnsembleModel model = load_model(f.out_cfg + "/model.ffcn");
  REQUIRE(model.bases.size() == 2);
  REQUIRE(model.bases[0].config.seed == 100);
  REQUIRE(model.hard == nullptr);
}

TEST_CASE("training reruns are byte-identical and --seed reshuffles the roster") {
  const CliFixture& f = fx();
  REQUIRE(f.first_train.code == 0);

  std::string again = f.dir + "/out_again";
  REQUIRE(f.run("train --config " + f.config_path + " --out " + again +
                " --workers 2").code == 0);
  REQUIRE(slurp(again + "/model.ffcn") == slurp(f.out_cfg + "/model.ffcn"));
  REQUIRE(slurp(again + "/train_report.csv") ==
          slurp(f.out_cfg + "/train_report.csv"));

  std::string seeded = f.dir + "/out_seeded";
  REQUIRE(f.run("train --config " + f.config_path + " --out " + seeded +
                " --seed 500 --workers 2").code == 0);
  REQUIRE(slurp(seeded + "/model.ffcn") != slurp(f.out_cfg + "/model.ffcn"));
  EnsembleModel model = load_model(seeded + "/model.ffcn");
  REQUIRE(model.bases[0].config.seed == 500);
  REQUIRE(model.bases[1].config.seed == 501);

  std::string seeded2 = f.dir + "/out_seeded2";
  REQUIRE(f.run("train --config " + f.config_path + " --out " + seeded2 +
                " --seed 500 --workers 2").code == 0);
  REQUIRE(slurp(seeded2 + "/model.ffcn") == slurp(seeded + "/model.ffcn"));
}

TEST_CASE("eval writes the accuracy table and per-sample confidences") {
  const CliFixture& f = fx();
  REQUIRE(f.first_train.code == 0);
  std::string out = f.dir + "/out_eval";
  RunResult r = f.run("eval --config " + f.config_path + " --model " + f.out_cfg +
                      "/model.ffcn --out " + out + " --workers 2");
  INFO(r.err);
  REQUIRE(r.code == 0);

  auto lines = lines_of(out + "/eval_report.csv");
  REQUIRE(lines.size() == 8);  // header, 2 bases, ff, easy, hard, hard_plus, ff_plus
  REQUIRE(lines[0] == "kind,name,count,accuracy");
  REQUIRE(split_csv(lines[1])[0] == "base");
  REQUIRE(split_csv(lines[2])[0] == "base");
  auto ff = split_csv(lines[3]);
  auto easy = split_csv(lines[4]);
  auto hard = split_csv(lines[5]);
  auto hard_plus = split_csv(lines[6]);
  auto ff_plus = split_csv(lines[7]);
  REQUIRE(ff[0] == "ensemble");
  REQUIRE(ff[1] == "ff");
  REQUIRE(ff[2] == "40");
  REQUIRE(easy[1] == "easy");
  REQUIRE(hard[1] == "hard");
  REQUIRE(std::stoi(easy[2]) + std::stoi(hard[2]) == 40);
  REQUIRE(hard_plus[1] == "hard_plus");
  REQUIRE(hard_plus[3].empty());  // no hard stage in this model
  REQUIRE(ff_plus[1] == "ff_plus");
  REQUIRE(ff_plus[3] == ff[3]);  // two-stage equals stage 1 without a hard model

  auto conf = lines_of(out + "/confidence.csv");
  REQUIRE(conf.size() == 41);
  REQUIRE(conf[0] == "index,cs1,cs2,is_hard");
  int flagged = 0;
  for (int i = 1; i <= 40; ++i) {
    auto row = split_csv(conf[i]);
    REQUIRE(row.size() == 4);
    REQUIRE(std::stoll(row[0]) == i - 1);  // original dataset order
    double cs1 = std::stod(row[1]), cs2 = std::stod(row[2]);
    REQUIRE(cs1 >= 0.0);
    REQUIRE(cs1 <= 1.0);
    REQUIRE(cs2 >= 0.0);
    REQUIRE(cs2 <= 1.0);
    REQUIRE((row[3] == "0" || row[3] == "1"));
    flagged += row[3] == "1";
  }
  REQUIRE(flagged == std::stoi(hard[2]));
}

TEST_CASE("report kinds emit their tables") {
  const CliFixture& f = fx();
  REQUIRE(f.first_train.code == 0);
  std::string model = f.out_cfg + "/model.ffcn";

  std::string div_out = f.dir + "/out_div";
  REQUIRE(f.run("report --config " + f.config_path + " --model " + model +
                " --kind diversity --out " + div_out).code == 0);
  auto div = lines_of(div_out + "/diversity.csv");
  REQUIRE(div.size() == 5);
  REQUIRE(div[0] == "scheme,members,pairs,mean_q,entropy");
  REQUIRE(div[1] == "s1,1,0,nan,nan");  // single member: no pairs to compare
  REQUIRE(div[2] == "s2,1,0,nan,nan");
  REQUIRE(div[3] == "s3,0,0,nan,nan");
  auto all = split_csv(div[4]);
  REQUIRE(all[0] == "all");
  REQUIRE(all[1] == "2");
  REQUIRE(all[2] == "1");
  REQUIRE_FALSE(all[3].empty());
  REQUIRE_FALSE(all[4].empty());

  std::string corr_out = f.dir + "/out_corr";
  REQUIRE(f.run("report --config " + f.config_path + " --model " + model +
                " --kind correlation --out " + corr_out).code == 0);
  auto corr = lines_of(corr_out + "/correlation.csv");
  REQUIRE(corr[0] == "channel,row,col,correlation");
  // 8 conv2 channels, 25 spatial positions -> a 25x25 block per channel
  REQUIRE(corr.size() == 1 + 8 * 25 * 25);
  auto last = split_csv(corr.back());
  REQUIRE(last[0] == "7");
  REQUIRE(last[1] == "24");
  REQUIRE(last[2] == "24");

  std::string sweep_out = f.dir + "/out_sweep";
  REQUIRE(f.run("report --config " + f.config_path + " --model " + model +
                " --kind size-sweep --out " + sweep_out + " --workers 2").code == 0);
  auto sweep = lines_of(sweep_out + "/size_sweep.csv");
  REQUIRE(sweep.size() == 3);
  REQUIRE(sweep[0] == "bases,test_accuracy");
  for (int m = 1; m <= 2; ++m) {
    auto row = split_csv(sweep[m]);
    REQUIRE(row[0] == std::to_string(m));
    double acc = std::stod(row[1]);
    REQUIRE(acc >= 0.0);
    REQUIRE(acc <= 1.0);
  }
}

TEST_CASE("failures map to documented exit codes") {
  const CliFixture& f = fx();

  RunResult missing_cfg = f.run("train --config " + f.dir + "/nope.toml");
  REQUIRE(missing_cfg.code == 1);
  REQUIRE(missing_cfg.err.find("config error:") != std::string::npos);

  // valid config whose data paths do not exist
  std::string bad_data = f.dir + "/bad_data.toml";
  {
    std::string text = slurp(f.config_path);
    std::string needle = f.dir + "/train-images.idx";
    text.replace(text.find(needle), needle.size(), f.dir + "/absent.idx");
    std::ofstream(bad_data) << text;
  }
  RunResult missing_data = f.run("train --config " + bad_data);
  REQUIRE(missing_data.code == 2);
  REQUIRE(missing_data.err.find("data error:") != std::string::npos);

  RunResult bad_kind = f.run("report --config " + f.config_path + " --model " +
                             f.out_cfg + "/model.ffcn --kind nonsense");
  REQUIRE(bad_kind.code == 1);
  REQUIRE(bad_kind.err.find("unknown report kind") != std::string::npos);

  REQUIRE(f.run("train").code != 0);       // --config is required
  REQUIRE(f.run("").code != 0);            // a subcommand is required
  REQUIRE(f.run("eval --config " + f.config_path).code != 0);  // --model missing
}

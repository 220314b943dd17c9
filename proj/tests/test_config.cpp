#include <catch2/catch_amalgamated.hpp>

#include <ffcnn/ffcnn.hpp>

using namespace ffcnn;
using Catch::Matchers::ContainsSubstring;

namespace {

std::string mnist_prologue() {
  return
      "[dataset]\n"                  // line 1
      "name = \"mnist\"\n"           // line 2
      "train_images = \"ti.idx\"\n"  // line 3
      "train_labels = \"tl.idx\"\n"  // line 4
      "test_images = \"si.idx\"\n"   // line 5
      "test_labels = \"sl.idx\"\n";  // line 6
}

std::string plain_base() {
  return
      "[[base]]\n"
      "form = \"gray\"\n"
      "filters = [5, 5]\n"
      "kernels = [6, 16]\n"
      "view = \"conv2\"\n"
      "fc = [120, 84, 10]\n"
      "tag = \"s1\"\n";
}

void expect_config_error(const std::string& text, const std::string& needle) {
  REQUIRE_THROWS_MATCHES(parse_experiment_config(text), ConfigError,
                         Catch::Matchers::MessageMatches(ContainsSubstring(needle)));
}

}  // namespace

TEST_CASE("a full experiment config parses field by field") {
  std::string text =
      "# experiment fixture\n"
      "[dataset]\n"
      "name = \"mnist\"  # dataset id\n"
      "train_images = \"mnist/train-images-idx3-ubyte\"\n"
      "train_labels = \"mnist/train-labels-idx1-ubyte\"\n"
      "test_images = \"mnist/t10k-images-idx3-ubyte\"\n"
      "test_labels = \"mnist/t10k-labels-idx1-ubyte\"\n"
      "per_class = 1000\n"
      "subset_seed = 3\n"
      "\n"
      "[ensemble]\n"
      "energy = 0.99\n"
      "svm_c = 4.0\n"
      "svm_gamma = 0.5\n"
      "svm_tol = 0.0001\n"
      "svm_max_passes = 50\n"
      "t1 = 0.9\n"
      "t2 = 0.5\n"
      "hard_stage = true\n"
      "hard_seed_offset = 77\n"
      "\n"
      "[output]\n"
      "dir = \"runs/demo\"\n"
      "\n"
      "[[base]]\n"
      "form = \"gray\"\n"
      "filters = [5, 3]\n"
      "kernels = [6, 16]\n"
      "view = \"conv1-rd\"\n"
      "fc = [120, 84, 10]\n"
      "lambda = [0.7, 0.75, 0.8]\n"
      "k1 = 25\n"
      "k2 = 15\n"
      "seed = 11\n"
      "tag = \"s2\"\n"
      "repeat = 2\n"
      "\n"
      "[[base]]\n"
      "form = \"laws-l4\"\n"
      "filters = [3, 3]\n"
      "kernels = [8, 24]\n"
      "view = \"conv2\"\n"
      "fc = [120, 84, 10]\n"
      "tag = \"s3\"\n";

  ExperimentConfig exp = parse_experiment_config(text);
  REQUIRE(exp.dataset.name == "mnist");
  REQUIRE(exp.dataset.train_images == "mnist/train-images-idx3-ubyte");
  REQUIRE(exp.dataset.test_labels == "mnist/t10k-labels-idx1-ubyte");
  REQUIRE(exp.dataset.per_class == 1000);
  REQUIRE(exp.dataset.subset_seed == 3);

  REQUIRE(exp.ensemble.energy == 0.99);
  REQUIRE(exp.ensemble.svm_c == 4.0);
  REQUIRE(exp.ensemble.svm_gamma == 0.5);
  REQUIRE(exp.ensemble.svm_tol == 0.0001);
  REQUIRE(exp.ensemble.svm_max_passes == 50);
  REQUIRE(exp.ensemble.t1 == 0.9);
  REQUIRE(exp.ensemble.t2 == 0.5);
  REQUIRE(exp.ensemble.hard_stage);
  REQUIRE(exp.ensemble.hard_seed_offset == 77);
  REQUIRE(exp.out_dir == "runs/demo");

  REQUIRE(exp.bases.size() == 2);
  const BaseConfig& b0 = exp.bases[0].config;
  REQUIRE(b0.form == InputForm::Gray);
  REQUIRE(b0.arch.layer1.filter_size == 5);
  REQUIRE(b0.arch.layer2.filter_size == 3);
  REQUIRE(b0.arch.layer1.kernel_count == 6);
  REQUIRE(b0.arch.layer2.kernel_count == 16);
  REQUIRE(b0.view.kind == ViewKind::Conv1Rd);
  REQUIRE(b0.view.lambda0 == 0.7);
  REQUIRE(b0.view.lambda1 == 0.75);
  REQUIRE(b0.view.lambda2 == 0.8);
  REQUIRE(b0.view.k1 == 25);
  REQUIRE(b0.view.k2 == 15);
  REQUIRE(b0.fc.stage_dims == std::vector<int>{120, 84, 10});
  REQUIRE(b0.fc.class_count == 10);
  REQUIRE(b0.seed == 11);
  REQUIRE(b0.tag == SchemeTag::S2);
  REQUIRE(exp.bases[0].repeat == 2);

  const BaseConfig& b1 = exp.bases[1].config;
  REQUIRE(b1.form == InputForm::Laws4);
  REQUIRE(b1.tag == SchemeTag::S3);
  REQUIRE(exp.bases[1].repeat == 1);
}

TEST_CASE("the dataset name picks thresholds and channel dims") {
  ExperimentConfig mnist = parse_experiment_config(mnist_prologue() + plain_base());
  REQUIRE(mnist.ensemble.t1 == 0.98);
  REQUIRE(mnist.ensemble.t2 == 0.7);
  REQUIRE(mnist.bases[0].config.view.k1 == 30);
  REQUIRE(mnist.bases[0].config.view.k2 == 20);
  REQUIRE(mnist.dataset.per_class == 0);
  REQUIRE(mnist.out_dir == "out");
  REQUIRE_FALSE(mnist.ensemble.hard_stage);

  std::string cifar =
      "[dataset]\n"
      "name = \"cifar10\"\n"
      "train_batches = [\"b1.bin\", \"b2.bin\"]\n"
      "test_batches = [\"t.bin\"]\n"
      "[[base]]\n"
      "form = \"rgb\"\n"
      "filters = [5, 5]\n"
      "kernels = [32, 64]\n"
      "view = \"conv2\"\n"
      "fc = [200, 100, 10]\n"
      "tag = \"s1\"\n";
  ExperimentConfig c = parse_experiment_config(cifar);
  REQUIRE(c.dataset.train_batches == std::vector<std::string>{"b1.bin", "b2.bin"});
  REQUIRE(c.dataset.test_batches == std::vector<std::string>{"t.bin"});
  REQUIRE(c.ensemble.t1 == 0.97);
  REQUIRE(c.ensemble.t2 == 0.65);
  REQUIRE(c.bases[0].config.view.k1 == 20);
  REQUIRE(c.bases[0].config.view.k2 == 12);

  // explicit values beat the dataset defaults
  std::string tuned = mnist_prologue() +
                      "[ensemble]\n"
                      "t1 = 0.5\n" +
                      plain_base() + "k1 = 7\n";
  ExperimentConfig t = parse_experiment_config(tuned);
  REQUIRE(t.ensemble.t1 == 0.5);
  REQUIRE(t.ensemble.t2 == 0.7);
  REQUIRE(t.bases[0].config.view.k1 == 7);
}

TEST_CASE("unknown keys and sections are named with their line") {
  expect_config_error(mnist_prologue() +
                          "[ensemble]\n"   // line 7
                          "svm_sea = 1\n"  // line 8
                          + plain_base(),
                      "line 8: unknown key 'svm_sea' in [ensemble]");
  expect_config_error(mnist_prologue() + "[extra]\n" + plain_base(),
                      "unknown section [extra]");
  expect_config_error(mnist_prologue() + plain_base() + "mystery = 1\n",
                      "unknown key 'mystery' in [base]");
}

TEST_CASE("structural errors are rejected") {
  expect_config_error(plain_base(), "missing [dataset]");
  expect_config_error(mnist_prologue() + mnist_prologue() + plain_base(),
                      "duplicate [dataset]");
  expect_config_error(mnist_prologue(), "no [[base]] sections");
  expect_config_error(mnist_prologue() + "[base]\n", "must use [[...]]");
  expect_config_error("[[dataset]]\n", "only [[base]] may repeat");
  expect_config_error("[dataset] trailing\n", "malformed section header");
  expect_config_error("name = \"mnist\"\n", "key outside any section");
  expect_config_error(mnist_prologue() + "just words\n", "expected key = value");
}

TEST_CASE("value errors carry the offending line and key") {
  expect_config_error(mnist_prologue() + plain_base() + "k1 = 2.5\n",
                      "'k1' must be an integer");
  expect_config_error(mnist_prologue() + plain_base() + "seed = maybe\n",
                      "cannot parse value 'maybe'");
  expect_config_error(mnist_prologue() +
                          "[ensemble]\nhard_stage = 1\n" + plain_base(),
                      "'hard_stage' must be true or false");
  expect_config_error(mnist_prologue() +
                          "[output]\ndir = 3\n" + plain_base(),
                      "'dir' must be a string");

  std::string bad_fc = plain_base();
  bad_fc.replace(bad_fc.find("fc = [120, 84, 10]"), 18, "fc = 12");
  expect_config_error(mnist_prologue() + bad_fc, "'fc' must be a list");

  std::string bad_filters = plain_base();
  bad_filters.replace(bad_filters.find("filters = [5, 5]"), 16, "filters = [5]");
  expect_config_error(mnist_prologue() + bad_filters, "must have 2 entries");

  expect_config_error(mnist_prologue() + plain_base() + "lambda = [0.5, 0.5]\n",
                      "'lambda' must have 3 entries");
  expect_config_error(mnist_prologue() + plain_base() + "seed = [1\n",
                      "unterminated list");
  expect_config_error(mnist_prologue() + plain_base() + "repeat = 0\n",
                      "repeat must be >= 1");
  expect_config_error(mnist_prologue() +
                          "[ensemble]\nenergy = 1.5\n" + plain_base(),
                      "energy must be in (0,1]");

  std::string bad_view = plain_base();
  bad_view.replace(bad_view.find("view = \"conv2\""), 14, "view = \"conv9\"");
  expect_config_error(mnist_prologue() + bad_view, "unknown feature view 'conv9'");

  // arch validation failures surface as config errors with the table line
  std::string bad_size = plain_base();
  bad_size.replace(bad_size.find("filters = [5, 5]"), 16, "filters = [4, 5]");
  expect_config_error(mnist_prologue() + bad_size, "filter size must be 3 or 5");

  expect_config_error("[dataset]\nname = \"svhn\"\n" + plain_base(),
                      "unknown dataset 'svhn'");
}

TEST_CASE("repeat expands into consecutive seeds") {
  std::string text = mnist_prologue() + plain_base() +
                     "seed = 40\n"
                     "repeat = 3\n" +
                     plain_base();
  ExperimentConfig exp = parse_experiment_config(text);
  std::vector<BaseConfig> roster = exp.roster();
  REQUIRE(roster.size() == 4);
  REQUIRE(roster[0].seed == 40);
  REQUIRE(roster[1].seed == 41);
  REQUIRE(roster[2].seed == 42);
  REQUIRE(roster[3].seed == 0);
  REQUIRE(roster[0].tag == SchemeTag::S1);
  for (int i = 0; i < 3; ++i) {
    BaseConfig expect = roster[0];
    expect.seed += i;
    REQUIRE(roster[i] == expect);
  }
}

TEST_CASE("serialization round-trips the parsed structure") {
  std::string text =
      "[dataset]\n"
      "name = \"mnist\"\n"
      "train_images = \"a\"\n"
      "train_labels = \"b\"\n"
      "test_images = \"c\"\n"
      "test_labels = \"d\"\n"
      "per_class = 500\n"
      "subset_seed = 9\n"
      "[ensemble]\n"
      "energy = 0.9375\n"
      "svm_c = 2.5\n"
      "t2 = 0.625\n"
      "hard_stage = true\n"
      "[output]\n"
      "dir = \"elsewhere\"\n" +
      plain_base() +
      "lambda = [0.5, 0.625, 0.75]\n"
      "seed = 123456789012345\n"
      "repeat = 4\n";
  ExperimentConfig exp = parse_experiment_config(text);
  std::string round = serialize_experiment_config(exp);
  REQUIRE(parse_experiment_config(round) == exp);
  REQUIRE(serialize_experiment_config(parse_experiment_config(round)) == round);

  std::string cifar =
      "[dataset]\n"
      "name = \"cifar10\"\n"
      "train_batches = [\"b1.bin\", \"b2.bin\"]\n"
      "test_batches = [\"t.bin\"]\n"
      "[[base]]\n"
      "form = \"ycbcr-cb\"\n"
      "filters = [3, 5]\n"
      "kernels = [24, 64]\n"
      "view = \"conv2-rd\"\n"
      "fc = [200, 100, 10]\n"
      "tag = \"s2\"\n";
  ExperimentConfig cexp = parse_experiment_config(cifar);
  REQUIRE(parse_experiment_config(serialize_experiment_config(cexp)) == cexp);
}

#include <doctest.h>

#include "terrain/metrics.hpp"
#include "terrain/manifest.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace terrain;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

Manifest tiny_manifest() {
  Manifest m;
  m.entries = {
      {"a/1.wav", "grass", "train", "siteA"},
      {"a/2.wav", "grass", "val", "siteB"},
      {"b/1.wav", "wood", "train", "siteA"},
      {"b/2.wav", "wood", "test", "siteC"},
      {"c/1.wav", "asphalt", "test", "siteA"},
  };
  return m;
}

}  // namespace

TEST_CASE("confusion matrix bookkeeping") {
  ConfusionMatrix cm({"a", "b", "c"});
  cm.add(0, 0);
  cm.add(0, 0);
  cm.add(0, 1);
  cm.add(1, 1);
  cm.add(2, 1);
  cm.add(2, 2);

  CHECK(cm.total() == 6);
  CHECK(cm.accuracy() == doctest::Approx(4.0 / 6.0));
  CHECK(cm.recall(0) == doctest::Approx(2.0 / 3.0));
  CHECK(cm.precision(1) == doctest::Approx(1.0 / 3.0));
  CHECK(cm.recall(2) == doctest::Approx(0.5));

  CHECK_THROWS_AS(cm.add(3, 0), std::invalid_argument);
  CHECK_THROWS_AS(cm.add(0, -1), std::invalid_argument);
  CHECK_THROWS_AS(ConfusionMatrix({}), std::invalid_argument);
  CHECK_THROWS_AS(ConfusionMatrix({"only"}).accuracy(), std::domain_error);
}

TEST_CASE("precision and recall fall back to zero on empty denominators") {
  ConfusionMatrix cm({"a", "b"});
  cm.add(0, 0);
  // nothing was ever predicted or truly class b
  CHECK(cm.precision(1) == 0.0);
  CHECK(cm.recall(1) == 0.0);

  const Metrics m = compute_metrics(cm);
  CHECK(m.accuracy == 1.0);
  CHECK(m.precision.size() == 2);
  CHECK(m.recall[0] == 1.0);
}

TEST_CASE("row sums count per-class truth regardless of predictions") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> cls(0, 4);
  ConfusionMatrix cm({"a", "b", "c", "d", "e"});
  Eigen::VectorXi truth = Eigen::VectorXi::Zero(5);
  for (int i = 0; i < 500; ++i) {
    const int t = cls(rng), p = cls(rng);
    cm.add(t, p);
    ++truth[t];
  }
  for (int c = 0; c < 5; ++c) CHECK(cm.counts.row(c).sum() == truth[c]);
  CHECK(cm.total() == 500);
}

TEST_CASE("metrics JSON is byte-stable and carries the fixed key order") {
  ConfusionMatrix cm({"gravel", "mud"});
  cm.add(0, 0);
  cm.add(1, 0);
  cm.add(1, 1);
  const Metrics m = compute_metrics(cm);

  const std::string p1 = temp_path("terrain_metrics_1.json");
  const std::string p2 = temp_path("terrain_metrics_2.json");
  write_metrics_json(p1, m);
  write_metrics_json(p2, m);
  const std::string s1 = slurp(p1), s2 = slurp(p2);
  CHECK(s1 == s2);
  CHECK(s1.find("\"accuracy\"") < s1.find("\"per_class\""));
  CHECK(s1.find("\"per_class\"") < s1.find("\"confusion\""));
  CHECK(s1.find("\"gravel\"") < s1.find("\"mud\""));
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("confusion CSV round layout") {
  ConfusionMatrix cm({"x", "y"});
  cm.add(0, 1);
  const std::string p = temp_path("terrain_confusion.csv");
  write_confusion_csv(p, cm);
  const std::string s = slurp(p);
  CHECK(s == "true\\pred,x,y\nx,0,1\ny,0,0\n");
  std::remove(p.c_str());
}

TEST_CASE("manifest split/label helpers") {
  const Manifest m = tiny_manifest();
  CHECK(m.split("train").size() == 2);
  CHECK(m.split("test").size() == 2);
  CHECK(m.split("val").size() == 1);
  const auto labels = m.label_set();
  REQUIRE(labels.size() == 3);
  CHECK(labels[0] == "asphalt");  // sorted order defines class ids
  CHECK(labels[1] == "grass");
  CHECK(labels[2] == "wood");
}

TEST_CASE("manifest validation rejects malformed tables") {
  Manifest ok = tiny_manifest();
  CHECK_NOTHROW(validate_manifest(ok));

  Manifest empty;
  CHECK_THROWS_AS(validate_manifest(empty), std::invalid_argument);

  Manifest dup = tiny_manifest();
  dup.entries.push_back(dup.entries[0]);
  CHECK_THROWS_AS(validate_manifest(dup), std::invalid_argument);

  Manifest bad_split = tiny_manifest();
  bad_split.entries[0].split = "holdout";
  CHECK_THROWS_AS(validate_manifest(bad_split), std::invalid_argument);

  Manifest blank = tiny_manifest();
  blank.entries[2].label = "";
  CHECK_THROWS_AS(validate_manifest(blank), std::invalid_argument);

  // a location sampled in train must not also appear in val
  Manifest leak = tiny_manifest();
  leak.entries[1].location = "siteA";
  CHECK_THROWS_AS(validate_manifest(leak), std::invalid_argument);

  // ... but sharing between train and test is the harness's own business
  Manifest train_test = tiny_manifest();
  CHECK(train_test.entries[4].location == "siteA");
  CHECK_NOTHROW(validate_manifest(train_test));
}

TEST_CASE("manifest files round-trip and resolve relative paths") {
  const std::string p = temp_path("terrain_manifest.csv");
  save_manifest(p, tiny_manifest());
  const Manifest m = load_manifest(p);
  REQUIRE(m.entries.size() == 5);
  CHECK(m.entries[0].path == "a/1.wav");
  CHECK(m.entries[0].label == "grass");
  CHECK(m.base_dir == std::filesystem::temp_directory_path().string());
  CHECK(m.resolve(m.entries[0]) ==
        (std::filesystem::temp_directory_path() / "a/1.wav").string());
  CHECK(m.resolve({"/abs/x.wav", "grass", "train", "siteZ"}) == "/abs/x.wav");
  std::remove(p.c_str());
}

TEST_CASE("manifest loader rejects wrong headers and ragged rows") {
  const std::string p = temp_path("terrain_manifest_bad.csv");
  {
    std::ofstream out(p);
    out << "path,label,split\n";
  }
  CHECK_THROWS_AS(load_manifest(p), std::runtime_error);
  {
    std::ofstream out(p);
    out << "path,label,split,location\nonly,three,fields\n";
  }
  CHECK_THROWS_AS(load_manifest(p), std::runtime_error);
  {
    std::ofstream out(p);
    out << "path,label,split,location\r\na.wav,grass,train,siteA\r\n";
  }
  CHECK_NOTHROW(load_manifest(p));  // tolerate CRLF
  std::remove(p.c_str());
  CHECK_THROWS_AS(load_manifest("/nonexistent/manifest.csv"), std::runtime_error);
}

#include <doctest.h>

#include "probe_oracle.hpp"
#include "tvhsd/dataio.hpp"
#include "tvhsd/error.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include <unistd.h>

using namespace tvhsd;
using namespace tvhsd::dataio;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("tvhsd_dataio_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Dataset three_samples() {
  Dataset d;
  d.manifest.num_samples = 3;
  d.manifest.text_dim = 2;
  d.manifest.image_dim = 3;
  d.manifest.num_classes = 2;
  d.manifest.label_names = {"neutral", "hateful"};
  d.samples = {
      {"a", {0.5, -1.25}, {1.0, 2.0, 3.0}, 0, 4},
      {"b", {0.1f, 1e-30f}, {-0.0, 7.0, 1e20f}, 1, 17},
      {"c", {-3.0, 2.0}, {0.25, 0.5, 0.75}, 1, 0},
  };
  return d;
}

Dataset labelled(const std::vector<int>& labels) {
  Dataset d;
  d.manifest.num_samples = labels.size();
  d.manifest.text_dim = 2;
  d.manifest.image_dim = 2;
  d.manifest.num_classes = 2;
  d.manifest.label_names = {"n", "h"};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    d.samples.push_back({"id" + std::to_string(i), {0, 0}, {0, 0}, labels[i], 5});
  }
  return d;
}

}  // namespace

TEST_CASE("container round trip") {
  TempDir dir("roundtrip");
  const Dataset d = three_samples();
  save(d, dir.path);
  CHECK(load(dir.path) == d);
}

TEST_CASE("container file layout is exact") {
  TempDir dir("layout");
  save(three_samples(), dir.path);
  CHECK(fs::file_size(dir.path / "embeddings.bin") == 3 * (2 + 3) * 4);
  std::ifstream blob(dir.path / "embeddings.bin", std::ios::binary);
  unsigned char first[4];
  blob.read(reinterpret_cast<char*>(first), 4);
  // 0.5f == 0x3f000000, little-endian
  CHECK(first[0] == 0x00);
  CHECK(first[3] == 0x3f);
  std::ifstream csv(dir.path / "labels.csv");
  std::string header, row;
  std::getline(csv, header);
  std::getline(csv, row);
  CHECK(header == "id,label,token_count");
  CHECK(row == "a,0,4");
}

TEST_CASE("truncated embeddings are a format error") {
  TempDir dir("truncated");
  save(three_samples(), dir.path);
  fs::resize_file(dir.path / "embeddings.bin", 3 * 5 * 4 - 4);
  try {
    load(dir.path);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("60 bytes, found 56") != std::string::npos);
  }
}

TEST_CASE("out-of-range label is a validation error") {
  TempDir dir("label");
  save(three_samples(), dir.path);
  std::ofstream(dir.path / "labels.csv") << "id,label,token_count\na,0,4\nb,2,17\nc,1,0\n";
  CHECK_THROWS_AS(load(dir.path), ValidationError);
}

TEST_CASE("manifest checks") {
  TempDir dir("manifest");
  save(three_samples(), dir.path);
  const auto manifest = dir.path / "manifest.json";
  std::string text;
  {
    std::ifstream in(manifest);
    text.assign(std::istreambuf_iterator<char>(in), {});
  }
  SUBCASE("unknown version") {
    std::string v = text;
    v.replace(v.find("\"version\": 1"), 12, "\"version\": 2");
    std::ofstream(manifest) << v;
    CHECK_THROWS_AS(load(dir.path), VersionError);
  }
  SUBCASE("unknown key") {
    std::string v = text;
    v.replace(v.find('{'), 1, "{\"extra\": 0,");
    std::ofstream(manifest) << v;
    CHECK_THROWS_AS(load(dir.path), FormatError);
  }
  SUBCASE("label_names length") {
    std::string v = text;
    v.replace(v.find("\"hateful\""), 9, "\"hateful\", \"other\"");
    std::ofstream(manifest) << v;
    CHECK_THROWS_AS(load(dir.path), ValidationError);
  }
}

TEST_CASE("kfold pigeonhole and determinism") {
  const Dataset d = labelled({0, 1, 0, 1, 0, 1, 0, 1, 0, 1});
  const auto folds = split_kfold(d, 10, 42);
  REQUIRE(folds.size() == 10);
  for (const auto& f : folds) {
    CHECK(f.test_indices.size() == 1);
    CHECK(f.train_indices.size() == 9);
  }
  CHECK(split_kfold(d, 10, 42) == folds);
  CHECK_THROWS_AS(split_kfold(d, 11, 42), ArgumentError);
  CHECK_THROWS_AS(split_kfold(d, 1, 42), ArgumentError);
}

TEST_CASE("kfold stratification by enumeration") {
  std::vector<int> labels(100);
  for (int i = 0; i < 100; ++i) labels[i] = i < 50 ? 0 : 1;
  const Dataset d = labelled(labels);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    for (const auto& f : split_kfold(d, 10, seed)) {
      int count[2] = {0, 0};
      for (std::size_t i : f.test_indices) ++count[d.samples[i].label];
      CHECK(count[0] == 5);
      CHECK(count[1] == 5);
    }
  }
}

TEST_CASE("kfold partitions imbalanced data") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 20 + rng() % 200;
    const std::size_t k = 2 + rng() % 9;
    std::vector<int> labels(n);
    for (auto& l : labels) l = (rng() % 10) < 2 ? 1 : 0;  // ~20% positives
    const Dataset d = labelled(labels);
    const auto folds = split_kfold(d, k, trial);
    std::map<std::size_t, int> hits;
    std::size_t min_size = n, max_size = 0;
    std::vector<std::size_t> per_class_min(2, n), per_class_max(2, 0);
    for (const auto& f : folds) {
      std::set<std::size_t> train(f.train_indices.begin(), f.train_indices.end());
      std::size_t per_class[2] = {0, 0};
      for (std::size_t i : f.test_indices) {
        ++hits[i];
        CHECK_FALSE(train.contains(i));
        ++per_class[d.samples[i].label];
      }
      CHECK(train.size() + f.test_indices.size() == n);
      min_size = std::min(min_size, f.test_indices.size());
      max_size = std::max(max_size, f.test_indices.size());
      for (int c = 0; c < 2; ++c) {
        per_class_min[c] = std::min(per_class_min[c], per_class[c]);
        per_class_max[c] = std::max(per_class_max[c], per_class[c]);
      }
    }
    CHECK(hits.size() == n);
    for (const auto& [i, count] : hits) CHECK(count == 1);
    CHECK(max_size - min_size <= 1);
    for (int c = 0; c < 2; ++c) CHECK(per_class_max[c] - per_class_min[c] <= 1);
  }
}

TEST_CASE("synthetic generator is deterministic and survives the container") {
  SyntheticSpec spec;
  spec.num_samples = 40;
  spec.text_dim = 6;
  spec.image_dim = 4;
  spec.num_classes = 3;
  spec.separation = 2.0;
  spec.length_noise = 0.5;
  spec.seed = 123;
  const Dataset a = gen_synthetic(spec);
  CHECK(gen_synthetic(spec) == a);
  a.validate();
  TempDir dir("synth");
  save(a, dir.path);
  CHECK(load(dir.path) == a);
  for (const auto& s : a.samples) {
    CHECK(s.token_count >= kMinTokens);
    CHECK(s.token_count <= kMaxTokens);
  }
  spec.seed = 124;
  CHECK_FALSE(gen_synthetic(spec) == a);
}

TEST_CASE("synthetic class means converge") {
  SyntheticSpec spec;
  spec.num_samples = 4000;
  spec.text_dim = 4;
  spec.image_dim = 3;
  spec.num_classes = 2;
  spec.separation = 3.0;
  spec.seed = 5;
  const Dataset d = gen_synthetic(spec);
  const double axis = 3.0 / std::sqrt(2.0);
  const double n_per_class = 2000;
  for (int c = 0; c < 2; ++c) {
    std::vector<double> text_mean(4, 0.0), image_mean(3, 0.0);
    for (const auto& s : d.samples) {
      if (s.label != c) continue;
      for (int i = 0; i < 4; ++i) text_mean[i] += s.text_emb[i] / n_per_class;
      for (int i = 0; i < 3; ++i) image_mean[i] += s.image_emb[i] / n_per_class;
    }
    for (int i = 0; i < 4; ++i) {
      CHECK(std::abs(text_mean[i] - (i == c ? axis : 0.0)) < 3.0 / std::sqrt(n_per_class));
    }
    for (int i = 0; i < 3; ++i) {
      CHECK(std::abs(image_mean[i] - (i == c ? axis : 0.0)) < 3.0 / std::sqrt(n_per_class));
    }
  }
}

TEST_CASE("synthetic separation against a linear probe") {
  SyntheticSpec spec;
  spec.num_samples = 2000;
  spec.text_dim = 6;
  spec.image_dim = 4;
  spec.num_classes = 2;
  spec.seed = 77;
  // Pairs of consecutive samples alternate between halves so both stay balanced.
  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t i = 0; i < spec.num_samples; ++i) ((i / 2) % 2 == 0 ? train_idx : test_idx).push_back(i);

  SUBCASE("separation 0 is chance level") {
    spec.separation = 0.0;
    const Dataset d = gen_synthetic(spec);
    const auto model = probe::fit(d.subset(train_idx));
    CHECK(std::abs(probe::held_out_f1(model, d.subset(test_idx)) - 0.5) <= 0.05);
  }
  SUBCASE("separation 6 is linearly separable") {
    spec.separation = 6.0;
    const Dataset d = gen_synthetic(spec);
    const auto model = probe::fit(d.subset(train_idx));
    CHECK(probe::held_out_f1(model, d.subset(test_idx)) >= 0.99);
  }
}

TEST_CASE("synthetic generator preconditions") {
  SyntheticSpec spec;
  spec.text_dim = 1;
  CHECK_THROWS_AS(gen_synthetic(spec), ArgumentError);
  spec.text_dim = 8;
  spec.separation = -1.0;
  CHECK_THROWS_AS(gen_synthetic(spec), ArgumentError);
}

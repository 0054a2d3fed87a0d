#include "doctest.h"

#include "tvhsd/tvhsd.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

tvhsd_dataset* make_dataset(std::uint64_t seed, std::size_t n = 60) {
  tvhsd_synth_options o;
  tvhsd_synth_options_default(&o);
  o.num_samples = n;
  o.text_dim = 10;
  o.image_dim = 6;
  o.seed = seed;
  tvhsd_dataset* ds = nullptr;
  REQUIRE(tvhsd_dataset_generate(&o, &ds) == TVHSD_OK);
  return ds;
}

const char* kConfig = R"({"epochs": 3, "detector": {"align_dim": 8, "state_size": 4}})";

}  // namespace

TEST_CASE("capi: synthetic defaults") {
  tvhsd_synth_options o;
  tvhsd_synth_options_default(&o);
  CHECK(o.num_samples == 1000);
  CHECK(o.text_dim == 768);
  CHECK(o.image_dim == 512);
  CHECK(o.num_classes == 2);
}

TEST_CASE("capi: dataset round trip and accessors") {
  TempDir dir("tvhsd_capi_ds");
  tvhsd_dataset* ds = make_dataset(1);
  CHECK(tvhsd_dataset_size(ds) == 60);
  CHECK(tvhsd_dataset_num_classes(ds) == 2);
  CHECK(std::string(tvhsd_dataset_id(ds, 0)) == "s00");
  CHECK(tvhsd_dataset_id(ds, 60) == nullptr);
  REQUIRE(tvhsd_dataset_save(ds, (dir.path / "d").c_str()) == TVHSD_OK);
  tvhsd_dataset* back = nullptr;
  REQUIRE(tvhsd_dataset_load((dir.path / "d").c_str(), &back) == TVHSD_OK);
  for (std::size_t i = 0; i < 60; ++i) {
    CHECK(std::string(tvhsd_dataset_id(back, i)) == tvhsd_dataset_id(ds, i));
  }
  tvhsd_dataset_free(back);
  tvhsd_dataset_free(ds);
}

TEST_CASE("capi: status codes and messages") {
  tvhsd_dataset* ds = nullptr;
  CHECK(tvhsd_dataset_load("/nonexistent/tvhsd", &ds) == TVHSD_ERR_DATA);
  CHECK(std::string(tvhsd_last_error()).find("manifest.json") != std::string::npos);
  CHECK(ds == nullptr);

  CHECK(tvhsd_dataset_load(nullptr, &ds) == TVHSD_ERR_USAGE);
  CHECK(std::string(tvhsd_last_error()).find("directory") != std::string::npos);

  tvhsd_synth_options o;
  tvhsd_synth_options_default(&o);
  o.num_samples = 0;
  CHECK(tvhsd_dataset_generate(&o, &ds) == TVHSD_ERR_USAGE);

  ds = make_dataset(2);
  tvhsd_model* m = nullptr;
  CHECK(tvhsd_train(ds, R"({"epochs": 0})", nullptr, &m) == TVHSD_ERR_USAGE);
  CHECK(tvhsd_train(ds, R"({"nope": 1})", nullptr, &m) == TVHSD_ERR_USAGE);
  CHECK(tvhsd_train(ds, R"({"detector": {"text_dim": 99}})", nullptr, &m) == TVHSD_ERR_DATA);
  tvhsd_train_overrides bad{};
  bad.loss_mode = "hinge";
  CHECK(tvhsd_train(ds, kConfig, &bad, &m) == TVHSD_ERR_USAGE);
  CHECK(m == nullptr);

  char* report = nullptr;
  CHECK(tvhsd_xval(ds, kConfig, nullptr, 1, nullptr, 0, &report) == TVHSD_ERR_USAGE);
  CHECK(report == nullptr);

  // a huge learning rate drives the loss to non-finite values
  CHECK(tvhsd_train(ds, R"({"epochs": 5, "lr": 1e300})", nullptr, &m) == TVHSD_ERR_NUMERICAL);
  tvhsd_dataset_free(ds);
}

TEST_CASE("capi: model save and load reproduce predictions bit for bit") {
  TempDir dir("tvhsd_capi_model");
  tvhsd_dataset* ds = make_dataset(3);
  tvhsd_train_overrides o{};
  o.has_seed = 1;
  o.seed = 9;
  o.modality_mode = "text_only";
  tvhsd_model* m = nullptr;
  REQUIRE(tvhsd_train(ds, kConfig, &o, &m) == TVHSD_OK);
  const std::string path = (dir.path / "m.json").string();
  REQUIRE(tvhsd_model_save(m, path.c_str()) == TVHSD_OK);
  tvhsd_model* back = nullptr;
  REQUIRE(tvhsd_model_load(path.c_str(), &back) == TVHSD_OK);
  CHECK(tvhsd_model_num_classes(back) == 2);

  const std::size_t n = tvhsd_dataset_size(ds);
  std::vector<int> pa(n), pb(n);
  std::vector<double> ua(n), ub(n), qa(2 * n), qb(2 * n);
  REQUIRE(tvhsd_predict(ds, m, pa.data(), ua.data(), qa.data()) == TVHSD_OK);
  REQUIRE(tvhsd_predict(ds, back, pb.data(), ub.data(), qb.data()) == TVHSD_OK);
  CHECK(pa == pb);
  CHECK(ua == ub);
  CHECK(qa == qb);
  for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(qa[2 * i] + qa[2 * i + 1] - 1.0) < 1e-12);

  char* ra = nullptr;
  char* rb = nullptr;
  REQUIRE(tvhsd_evaluate(ds, m, nullptr, 0, &ra) == TVHSD_OK);
  REQUIRE(tvhsd_evaluate(ds, back, nullptr, 0, &rb) == TVHSD_OK);
  CHECK(std::string(ra) == rb);
  tvhsd_string_free(ra);
  tvhsd_string_free(rb);

  std::ifstream in(path);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(text.find("\"text_only\"") != std::string::npos);

  tvhsd_model_free(back);
  tvhsd_model_free(m);
  tvhsd_dataset_free(ds);
}

TEST_CASE("capi: model load errors") {
  TempDir dir("tvhsd_capi_bad");
  const std::string path = (dir.path / "m.json").string();
  std::ofstream(path) << "{\"format\": \"something-else\"}";
  tvhsd_model* m = nullptr;
  CHECK(tvhsd_model_load(path.c_str(), &m) == TVHSD_ERR_DATA);
  CHECK(tvhsd_model_load((dir.path / "missing.json").c_str(), &m) == TVHSD_ERR_DATA);
  CHECK(m == nullptr);
}

TEST_CASE("capi: xval reports are deterministic and honour bin edges") {
  tvhsd_dataset* ds = make_dataset(4);
  tvhsd_train_overrides o{};
  o.has_epochs = 2;
  o.epochs = 2;
  const double edges[] = {30.0};
  char* a = nullptr;
  char* b = nullptr;
  REQUIRE(tvhsd_xval(ds, kConfig, &o, 3, edges, 1, &a) == TVHSD_OK);
  REQUIRE(tvhsd_xval(ds, kConfig, &o, 3, edges, 1, &b) == TVHSD_OK);
  const std::string report(a);
  CHECK(report == b);
  CHECK(report.find("\"num_folds\": 3") != std::string::npos);
  CHECK(report.find("\"epochs\": 2") != std::string::npos);
  CHECK(report.find("\"upper\": 30") != std::string::npos);
  tvhsd_string_free(a);
  tvhsd_string_free(b);
  tvhsd_dataset_free(ds);
}

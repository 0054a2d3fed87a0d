// tvhsd command line: synthetic data, training, evaluation,
// cross-validation and prediction on top of the C API.

#include "tvhsd/tvhsd.h"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kExitUsage = 2;

struct Failure {
  int code;
  std::string message;
};

void check(tvhsd_status status) {
  if (status != TVHSD_OK) throw Failure{static_cast<int>(status), tvhsd_last_error()};
}

using DatasetPtr = std::unique_ptr<tvhsd_dataset, decltype(&tvhsd_dataset_free)>;
using ModelPtr = std::unique_ptr<tvhsd_model, decltype(&tvhsd_model_free)>;

DatasetPtr load_dataset(const std::string& dir) {
  tvhsd_dataset* ds = nullptr;
  check(tvhsd_dataset_load(dir.c_str(), &ds));
  return {ds, &tvhsd_dataset_free};
}

ModelPtr load_model(const std::string& path) {
  tvhsd_model* m = nullptr;
  check(tvhsd_model_load(path.c_str(), &m));
  return {m, &tvhsd_model_free};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kExitUsage, "cannot read config file " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::fwrite(text.data(), 1, text.size(), stdout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out.flush()) throw Failure{TVHSD_ERR_DATA, "cannot write " + path};
}

std::string take_report(char* raw) {
  std::string s(raw);
  tvhsd_string_free(raw);
  return s;
}

std::vector<double> parse_edges(const std::string& text) {
  std::vector<double> edges;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw Failure{kExitUsage, "bad length bin edge '" + item + "'"};
    edges.push_back(v);
  }
  if (edges.empty()) throw Failure{kExitUsage, "--length-bins needs at least one edge"};
  return edges;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct TrainArgs {
  std::string config;
  std::optional<std::string> loss;
  std::optional<std::string> modality;
  std::uint64_t seed = 0;
};

tvhsd_train_overrides overrides_of(const TrainArgs& a) {
  tvhsd_train_overrides o{};
  o.loss_mode = a.loss ? a.loss->c_str() : nullptr;
  o.modality_mode = a.modality ? a.modality->c_str() : nullptr;
  o.has_seed = 1;
  o.seed = a.seed;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tvhsd: multimodal detector with evidential uncertainty"};
  app.require_subcommand(1);

  tvhsd_synth_options synth;
  tvhsd_synth_options_default(&synth);
  std::string synth_out;
  auto* gen = app.add_subcommand("gen-synth", "Write a synthetic dataset container");
  gen->add_option("--out", synth_out, "Output directory")->required();
  gen->add_option("--samples", synth.num_samples, "Number of samples")->capture_default_str();
  gen->add_option("--classes", synth.num_classes, "Number of classes")->capture_default_str();
  gen->add_option("--text-dim", synth.text_dim, "Text embedding size")->capture_default_str();
  gen->add_option("--image-dim", synth.image_dim, "Image embedding size")->capture_default_str();
  gen->add_option("--separation", synth.separation, "Class mean distance in noise sigmas")->capture_default_str();
  gen->add_option("--length-noise", synth.length_noise, "Noise growth with token count")->capture_default_str();
  gen->add_option("--seed", synth.seed, "Random seed")->capture_default_str();

  std::string data_dir, model_path, out_path;
  TrainArgs targs;
  auto* train = app.add_subcommand("train", "Train a model on a dataset");
  train->add_option("--data", data_dir, "Dataset directory")->required();
  train->add_option("--config", targs.config, "Training config JSON")->required();
  train->add_option("--out", out_path, "Model file to write")->required();
  train->add_option("--loss", targs.loss, "trust or ce");
  train->add_option("--modality", targs.modality, "both, text_only or image_only");
  train->add_option("--seed", targs.seed, "Random seed")->required();

  std::string bins_text = "10,20,35,60";
  auto* eval = app.add_subcommand("eval", "Evaluate a model and write a JSON report");
  eval->add_option("--data", data_dir, "Dataset directory")->required();
  eval->add_option("--model", model_path, "Model file")->required();
  eval->add_option("--length-bins", bins_text, "Interior token-count bin edges")->capture_default_str();
  eval->add_option("--out", out_path, "Report file (default stdout)");

  std::size_t folds = 10;
  auto* xval = app.add_subcommand("xval", "Stratified k-fold cross-validation");
  xval->add_option("--data", data_dir, "Dataset directory")->required();
  xval->add_option("--config", targs.config, "Training config JSON")->required();
  xval->add_option("--folds", folds, "Number of folds")->capture_default_str();
  xval->add_option("--seed", targs.seed, "Random seed")->required();
  xval->add_option("--out", out_path, "Report file")->required();
  xval->add_option("--loss", targs.loss, "trust or ce");
  xval->add_option("--modality", targs.modality, "both, text_only or image_only");
  xval->add_option("--length-bins", bins_text, "Interior token-count bin edges")->capture_default_str();

  auto* predict = app.add_subcommand("predict", "Write per-sample predictions as CSV");
  predict->add_option("--data", data_dir, "Dataset directory")->required();
  predict->add_option("--model", model_path, "Model file")->required();
  predict->add_option("--out", out_path, "CSV file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (gen->parsed()) {
      tvhsd_dataset* raw = nullptr;
      check(tvhsd_dataset_generate(&synth, &raw));
      DatasetPtr ds(raw, &tvhsd_dataset_free);
      check(tvhsd_dataset_save(ds.get(), synth_out.c_str()));
    } else if (train->parsed()) {
      const std::string config = read_file(targs.config);
      DatasetPtr ds = load_dataset(data_dir);
      const tvhsd_train_overrides o = overrides_of(targs);
      tvhsd_model* raw = nullptr;
      check(tvhsd_train(ds.get(), config.c_str(), &o, &raw));
      ModelPtr model(raw, &tvhsd_model_free);
      check(tvhsd_model_save(model.get(), out_path.c_str()));
    } else if (eval->parsed()) {
      const std::vector<double> edges = parse_edges(bins_text);
      DatasetPtr ds = load_dataset(data_dir);
      ModelPtr model = load_model(model_path);
      char* report = nullptr;
      check(tvhsd_evaluate(ds.get(), model.get(), edges.data(), edges.size(), &report));
      write_text(out_path, take_report(report));
    } else if (xval->parsed()) {
      const std::vector<double> edges = parse_edges(bins_text);
      const std::string config = read_file(targs.config);
      DatasetPtr ds = load_dataset(data_dir);
      const tvhsd_train_overrides o = overrides_of(targs);
      char* report = nullptr;
      check(tvhsd_xval(ds.get(), config.c_str(), &o, folds, edges.data(), edges.size(), &report));
      write_text(out_path, take_report(report));
    } else if (predict->parsed()) {
      DatasetPtr ds = load_dataset(data_dir);
      ModelPtr model = load_model(model_path);
      const std::size_t n = tvhsd_dataset_size(ds.get());
      const std::size_t k = tvhsd_model_num_classes(model.get());
      std::vector<int> pred(n);
      std::vector<double> u(n), p(n * k);
      check(tvhsd_predict(ds.get(), model.get(), pred.data(), u.data(), p.data()));
      std::string csv = "id,pred_label,uncertainty";
      for (std::size_t c = 0; c < k; ++c) csv += ",p_" + std::to_string(c);
      csv += '\n';
      for (std::size_t i = 0; i < n; ++i) {
        csv += tvhsd_dataset_id(ds.get(), i);
        csv += ',' + std::to_string(pred[i]) + ',' + format_double(u[i]);
        for (std::size_t c = 0; c < k; ++c) csv += ',' + format_double(p[i * k + c]);
        csv += '\n';
      }
      write_text(out_path, csv);
    }
  } catch (const Failure& f) {
    std::cerr << "tvhsd: " << f.message << '\n';
    return f.code;
  }
  return 0;
}

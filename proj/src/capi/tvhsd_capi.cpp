#include "tvhsd/tvhsd.h"

#include "tvhsd/error.hpp"
#include "tvhsd/harness.hpp"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <memory>
#include <new>
#include <string>

struct tvhsd_dataset {
  tvhsd::dataio::Dataset data;
};

struct tvhsd_model {
  tvhsd::detector::ModelFile file;
  tvhsd::harness::ModalityMode modality = tvhsd::harness::ModalityMode::both;
};

namespace {

using namespace tvhsd;

thread_local std::string last_error;

template <typename F>
tvhsd_status guarded(F&& body) {
  try {
    body();
    return TVHSD_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return static_cast<tvhsd_status>(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    last_error = e.what();
    return TVHSD_ERR_DATA;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return TVHSD_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return TVHSD_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown failure";
    return TVHSD_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw ArgumentError(std::string(what) + " must not be null");
}

harness::TrainConfig build_config(const dataio::Dataset& data, const char* config_json,
                                  const tvhsd_train_overrides* overrides) {
  harness::TrainConfig c =
      harness::parse_train_config(config_json && *config_json ? config_json : "{}");
  if (overrides) {
    if (overrides->loss_mode) c.loss_mode = harness::parse_loss_mode(overrides->loss_mode);
    if (overrides->modality_mode) c.modality_mode = harness::parse_modality_mode(overrides->modality_mode);
    if (overrides->has_seed) c.seed = overrides->seed;
    if (overrides->has_epochs) c.epochs = overrides->epochs;
  }
  c = harness::resolve_dims(c, data.manifest);
  c.validate();
  return c;
}

std::vector<double> bin_edges(const double* edges, std::size_t n) {
  if (!edges) return harness::kDefaultBinEdges;
  return {edges, edges + n};
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* tvhsd_last_error(void) { return last_error.c_str(); }

void tvhsd_synth_options_default(tvhsd_synth_options* options) {
  if (!options) return;
  const dataio::SyntheticSpec spec;
  options->num_samples = spec.num_samples;
  options->num_classes = spec.num_classes;
  options->text_dim = spec.text_dim;
  options->image_dim = spec.image_dim;
  options->separation = spec.separation;
  options->length_noise = spec.length_noise;
  options->seed = spec.seed;
}

tvhsd_status tvhsd_dataset_generate(const tvhsd_synth_options* options, tvhsd_dataset** out) {
  return guarded([&] {
    require(options, "options");
    require(out, "out");
    dataio::SyntheticSpec spec;
    spec.num_samples = options->num_samples;
    spec.num_classes = options->num_classes;
    spec.text_dim = options->text_dim;
    spec.image_dim = options->image_dim;
    spec.separation = options->separation;
    spec.length_noise = options->length_noise;
    spec.seed = options->seed;
    *out = new tvhsd_dataset{dataio::gen_synthetic(spec)};
  });
}

tvhsd_status tvhsd_dataset_load(const char* directory, tvhsd_dataset** out) {
  return guarded([&] {
    require(directory, "directory");
    require(out, "out");
    *out = new tvhsd_dataset{dataio::load(directory)};
  });
}

tvhsd_status tvhsd_dataset_save(const tvhsd_dataset* dataset, const char* directory) {
  return guarded([&] {
    require(dataset, "dataset");
    require(directory, "directory");
    dataio::save(dataset->data, directory);
  });
}

void tvhsd_dataset_free(tvhsd_dataset* dataset) { delete dataset; }

size_t tvhsd_dataset_size(const tvhsd_dataset* dataset) { return dataset ? dataset->data.size() : 0; }

size_t tvhsd_dataset_num_classes(const tvhsd_dataset* dataset) {
  return dataset ? dataset->data.manifest.num_classes : 0;
}

const char* tvhsd_dataset_id(const tvhsd_dataset* dataset, size_t index) {
  if (!dataset || index >= dataset->data.size()) return nullptr;
  return dataset->data.samples[index].id.c_str();
}

tvhsd_status tvhsd_train(const tvhsd_dataset* dataset, const char* config_json,
                         const tvhsd_train_overrides* overrides, tvhsd_model** out) {
  return guarded([&] {
    require(dataset, "dataset");
    require(out, "out");
    const harness::TrainConfig config = build_config(dataset->data, config_json, overrides);
    harness::TrainResult trained = harness::train(dataset->data, config);
    auto* model = new tvhsd_model;
    model->file.config = config.detector;
    model->file.config.seed = config.seed;
    model->file.params = std::move(trained.params);
    model->file.tags = {{"loss_mode", harness::to_string(config.loss_mode)},
                        {"modality_mode", harness::to_string(config.modality_mode)},
                        {"epochs", std::to_string(config.epochs)}};
    model->modality = config.modality_mode;
    *out = model;
  });
}

tvhsd_status tvhsd_model_save(const tvhsd_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    detector::save_model(model->file, path);
  });
}

tvhsd_status tvhsd_model_load(const char* path, tvhsd_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto model = std::make_unique<tvhsd_model>();
    model->file = detector::load_model(path);
    const auto it = model->file.tags.find("modality_mode");
    if (it != model->file.tags.end()) {
      try {
        model->modality = harness::parse_modality_mode(it->second);
      } catch (const ArgumentError& e) {
        throw FormatError(std::string(path) + ": " + e.what());
      }
    }
    *out = model.release();
  });
}

void tvhsd_model_free(tvhsd_model* model) { delete model; }

size_t tvhsd_model_num_classes(const tvhsd_model* model) {
  return model ? model->file.config.num_classes : 0;
}

tvhsd_status tvhsd_evaluate(const tvhsd_dataset* dataset, const tvhsd_model* model,
                            const double* edges, size_t num_edges, char** report_json) {
  return guarded([&] {
    require(dataset, "dataset");
    require(model, "model");
    require(report_json, "report_json");
    const harness::Evaluation e = harness::evaluate(dataset->data, model->file.params, model->modality);
    const std::vector<double> cuts = bin_edges(edges, num_edges);
    *report_json = copy_string(
        harness::eval_report_json(e, harness::length_bins(std::span<const harness::Evaluation>(&e, 1), cuts)));
  });
}

tvhsd_status tvhsd_xval(const tvhsd_dataset* dataset, const char* config_json,
                        const tvhsd_train_overrides* overrides, size_t folds, const double* edges,
                        size_t num_edges, char** report_json) {
  return guarded([&] {
    require(dataset, "dataset");
    require(report_json, "report_json");
    const harness::TrainConfig config = build_config(dataset->data, config_json, overrides);
    const harness::XvalResult result = harness::xval(dataset->data, config, folds);
    const std::vector<double> cuts = bin_edges(edges, num_edges);
    *report_json = copy_string(
        harness::xval_report_json(result, config, harness::length_bins(result.fold_evals, cuts)));
  });
}

tvhsd_status tvhsd_predict(const tvhsd_dataset* dataset, const tvhsd_model* model, int* predicted,
                           double* uncertainty, double* probability) {
  return guarded([&] {
    require(dataset, "dataset");
    require(model, "model");
    const harness::Evaluation e = harness::evaluate(dataset->data, model->file.params, model->modality);
    const std::size_t k = model->file.config.num_classes;
    for (const harness::Prediction& p : e.predictions) {
      if (predicted) predicted[p.index] = p.predicted;
      if (uncertainty) uncertainty[p.index] = p.uncertainty;
      if (probability) std::copy(p.probability.begin(), p.probability.end(), probability + p.index * k);
    }
  });
}

void tvhsd_string_free(char* text) { std::free(text); }

}  // extern "C"

#include "tvhsd/harness.hpp"

#include "tvhsd/error.hpp"

#include <json.hpp>

#include <cmath>
#include <set>

namespace tvhsd::harness {

using nlohmann::json;

const char* to_string(LossMode mode) { return mode == LossMode::trust ? "trust" : "ce"; }

const char* to_string(ModalityMode mode) {
  switch (mode) {
    case ModalityMode::both: return "both";
    case ModalityMode::text_only: return "text_only";
    case ModalityMode::image_only: return "image_only";
  }
  return "both";
}

LossMode parse_loss_mode(const std::string& text) {
  if (text == "trust") return LossMode::trust;
  if (text == "ce") return LossMode::ce;
  throw ArgumentError("loss mode must be trust or ce, got \"" + text + "\"");
}

ModalityMode parse_modality_mode(const std::string& text) {
  if (text == "both") return ModalityMode::both;
  if (text == "text_only") return ModalityMode::text_only;
  if (text == "image_only") return ModalityMode::image_only;
  throw ArgumentError("modality mode must be both, text_only or image_only, got \"" + text + "\"");
}

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ArgumentError("lr must be > 0");
  if (epochs < 1) throw ArgumentError("epochs must be >= 1");
  if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ArgumentError("Adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ArgumentError("adam_eps must be > 0");
  detector.validate();
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const char* where) {
  if (!j.is_object()) throw ArgumentError(std::string(where) + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) {
      throw ArgumentError(std::string("unknown key \"") + key + "\" in " + where);
    }
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

TrainConfig parse_train_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ArgumentError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(j,
                 {"lr", "epochs", "batch_size", "adam_beta1", "adam_beta2", "adam_eps",
                  "loss_mode", "modality_mode", "seed", "detector"},
                 "config");
  TrainConfig c;
  c.detector.text_dim = 0;
  c.detector.image_dim = 0;
  c.detector.num_classes = 0;
  try {
    read(j, "lr", c.lr);
    read(j, "epochs", c.epochs);
    read(j, "batch_size", c.batch_size);
    read(j, "adam_beta1", c.adam_beta1);
    read(j, "adam_beta2", c.adam_beta2);
    read(j, "adam_eps", c.adam_eps);
    read(j, "seed", c.seed);
    if (j.contains("loss_mode")) c.loss_mode = parse_loss_mode(j.at("loss_mode").get<std::string>());
    if (j.contains("modality_mode")) {
      c.modality_mode = parse_modality_mode(j.at("modality_mode").get<std::string>());
    }
    if (j.contains("detector")) {
      const json& d = j.at("detector");
      reject_unknown(d,
                     {"text_dim", "image_dim", "align_dim", "state_size", "se_reduction",
                      "num_classes", "seed"},
                     "config.detector");
      read(d, "text_dim", c.detector.text_dim);
      read(d, "image_dim", c.detector.image_dim);
      read(d, "align_dim", c.detector.align_dim);
      read(d, "state_size", c.detector.state_size);
      read(d, "se_reduction", c.detector.se_reduction);
      read(d, "num_classes", c.detector.num_classes);
      read(d, "seed", c.detector.seed);
    }
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("bad config value: ") + e.what());
  }
  return c;
}

std::string train_config_json(const TrainConfig& c) {
  const json j{{"lr", c.lr},
               {"epochs", c.epochs},
               {"batch_size", c.batch_size},
               {"adam_beta1", c.adam_beta1},
               {"adam_beta2", c.adam_beta2},
               {"adam_eps", c.adam_eps},
               {"loss_mode", to_string(c.loss_mode)},
               {"modality_mode", to_string(c.modality_mode)},
               {"seed", c.seed},
               {"detector",
                {{"text_dim", c.detector.text_dim},
                 {"image_dim", c.detector.image_dim},
                 {"align_dim", c.detector.align_dim},
                 {"state_size", c.detector.state_size},
                 {"se_reduction", c.detector.se_reduction},
                 {"num_classes", c.detector.num_classes},
                 {"seed", c.detector.seed}}}};
  return j.dump(2);
}

TrainConfig resolve_dims(TrainConfig config, const dataio::DatasetManifest& manifest) {
  auto fill = [](std::size_t& field, std::size_t actual, const char* name) {
    if (field == 0) {
      field = actual;
    } else if (field != actual) {
      throw ValidationError(std::string("config ") + name + " = " + std::to_string(field) +
                            " but the dataset has " + std::to_string(actual));
    }
  };
  fill(config.detector.text_dim, manifest.text_dim, "text_dim");
  fill(config.detector.image_dim, manifest.image_dim, "image_dim");
  fill(config.detector.num_classes, manifest.num_classes, "num_classes");
  return config;
}

}  // namespace tvhsd::harness

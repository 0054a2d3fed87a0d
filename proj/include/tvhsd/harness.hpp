#pragma once

// Training (Adam), evaluation, k-fold cross-validation, length-binned
// robustness analysis and JSON reports.

#include "tvhsd/dataio.hpp"
#include "tvhsd/detector.hpp"
#include "tvhsd/trust.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tvhsd::harness {

enum class LossMode { trust, ce };
enum class ModalityMode { both, text_only, image_only };

const char* to_string(LossMode mode);
const char* to_string(ModalityMode mode);
LossMode parse_loss_mode(const std::string& text);
ModalityMode parse_modality_mode(const std::string& text);

struct TrainConfig {
  double lr = 0.001;
  std::size_t epochs = 800;
  std::size_t batch_size = 32;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  LossMode loss_mode = LossMode::trust;
  ModalityMode modality_mode = ModalityMode::both;
  std::uint64_t seed = 0;
  detector::DetectorConfig detector;

  void validate() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Parses the JSON config file format. Every key is optional; unknown keys
// are an error. Detector dims that are absent come back as 0 and are filled
// from the dataset by resolve_dims().
TrainConfig parse_train_config(const std::string& json_text);
std::string train_config_json(const TrainConfig& config);

// Fills 0 dims from the manifest; explicit dims must agree with it.
TrainConfig resolve_dims(TrainConfig config, const dataio::DatasetManifest& manifest);

struct AdamState {
  std::vector<ndgrad::Tensor> m;
  std::vector<ndgrad::Tensor> v;
};

AdamState adam_init(std::span<const ndgrad::Tensor* const> params);

// One bias-corrected Adam update at step t >= 1.
void adam_step(std::span<ndgrad::Tensor* const> params, std::span<const ndgrad::Tensor> grads,
               AdamState& state, std::size_t t, const TrainConfig& config);

struct EpochRecord {
  std::size_t epoch = 0;
  double lambda = 0.0;
  std::optional<double> digamma_term;  // trust mode only
  std::optional<double> kl_term;       // trust mode only
  double total = 0.0;                  // mean loss over the epoch's samples
};

struct TrainResult {
  detector::DetectorParams params;
  std::vector<EpochRecord> history;
  std::size_t steps = 0;
};

// Zeroes the embedding the modality mode excludes.
dataio::SampleRecord apply_modality(dataio::SampleRecord sample, ModalityMode mode);

TrainResult train(const dataio::Dataset& data, const TrainConfig& config);

struct ClassCounts {
  std::size_t tp = 0, fp = 0, fn = 0;
};

struct Metrics {
  double macro_f1 = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double accuracy = 0.0;
  std::vector<ClassCounts> per_class;
  std::size_t n = 0;
};

// Per-class F1 is 0 when P + R = 0; every class counts in the macro mean.
Metrics compute_metrics(std::span<const int> truth, std::span<const int> predicted,
                        std::size_t num_classes);

struct Prediction {
  std::size_t index = 0;  // row in the evaluated dataset
  int label = 0;
  int predicted = 0;
  int token_count = 0;
  double uncertainty = 0.0;
  std::vector<double> probability;
};

struct Evaluation {
  Metrics metrics;
  std::vector<Prediction> predictions;
  double mean_uncertainty = 0.0;
};

// Prediction is argmax p with ties to the lower class index.
Evaluation evaluate(const dataio::Dataset& data, const detector::DetectorParams& params,
                    ModalityMode modality);

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single fold
};

struct FoldReport {
  std::vector<Metrics> folds;
  std::vector<double> fold_uncertainty;
  MetricSummary macro_f1, macro_precision, macro_recall;
  double mean_uncertainty = 0.0;  // over all test samples
};

struct LengthBin {
  double lower = 0.0;
  std::optional<double> upper;  // nullopt: unbounded
  std::size_t n = 0;
  std::size_t folds = 0;  // folds with at least one sample in the bin
  std::optional<double> accuracy_mean;
  std::optional<double> ci_half_width;  // 1.96 std / sqrt(folds)
  std::optional<double> mean_uncertainty;
};

struct LengthBinReport {
  std::vector<LengthBin> bins;
};

inline const std::vector<double> kDefaultBinEdges{10, 20, 35, 60};

// `edges` are the strictly increasing interior cut points; bins are
// [0, e0), [e0, e1), ..., [e_last, inf).
LengthBinReport length_bins(std::span<const Evaluation> per_fold, std::span<const double> edges);

// Evaluates each fold's params on its test split, then bins.
LengthBinReport length_bins(const dataio::Dataset& data,
                            std::span<const dataio::FoldSplit> splits,
                            std::span<const detector::DetectorParams> fold_params,
                            ModalityMode modality, std::span<const double> edges);

struct XvalResult {
  FoldReport report;
  std::vector<dataio::FoldSplit> splits;
  std::vector<detector::DetectorParams> fold_params;
  std::vector<Evaluation> fold_evals;
};

// Fold f trains from a fresh init seeded with config.seed + f.
XvalResult xval(const dataio::Dataset& data, const TrainConfig& config, std::size_t k = 10);

FoldReport summarize(std::vector<Evaluation> const& fold_evals);

// Reports with every real printed to 17 significant digits.
std::string eval_report_json(const Evaluation& evaluation, const LengthBinReport& bins);
std::string xval_report_json(const XvalResult& result, const TrainConfig& config,
                             const LengthBinReport& bins);

}  // namespace tvhsd::harness

#include "tvhsd/error.hpp"
#include "tvhsd/harness.hpp"

#include <cmath>

namespace tvhsd::harness {

namespace {

MetricSummary summary_of(const std::vector<double>& values) {
  MetricSummary s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

}  // namespace

FoldReport summarize(const std::vector<Evaluation>& fold_evals) {
  FoldReport r;
  std::vector<double> f1, precision, recall;
  double u_sum = 0.0;
  std::size_t u_count = 0;
  for (const Evaluation& e : fold_evals) {
    r.folds.push_back(e.metrics);
    r.fold_uncertainty.push_back(e.mean_uncertainty);
    f1.push_back(e.metrics.macro_f1);
    precision.push_back(e.metrics.macro_precision);
    recall.push_back(e.metrics.macro_recall);
    for (const Prediction& p : e.predictions) u_sum += p.uncertainty;
    u_count += e.predictions.size();
  }
  r.macro_f1 = summary_of(f1);
  r.macro_precision = summary_of(precision);
  r.macro_recall = summary_of(recall);
  r.mean_uncertainty = u_count ? u_sum / static_cast<double>(u_count) : 0.0;
  return r;
}

XvalResult xval(const dataio::Dataset& data, const TrainConfig& config, std::size_t k) {
  config.validate();
  XvalResult result;
  result.splits = dataio::split_kfold(data, k, config.seed);
  for (const dataio::FoldSplit& split : result.splits) {
    TrainConfig fold_config = config;
    fold_config.seed = config.seed + split.fold_index;
    TrainResult trained = train(data.subset(split.train_indices), fold_config);
    result.fold_evals.push_back(
        evaluate(data.subset(split.test_indices), trained.params, config.modality_mode));
    result.fold_params.push_back(std::move(trained.params));
  }
  result.report = summarize(result.fold_evals);
  return result;
}

LengthBinReport length_bins(std::span<const Evaluation> per_fold, std::span<const double> edges) {
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (!(edges[i] > 0.0) || (i > 0 && !(edges[i] > edges[i - 1]))) {
      throw ArgumentError("length bin edges must be positive and strictly increasing");
    }
  }
  LengthBinReport report;
  const std::size_t num_bins = edges.size() + 1;
  for (std::size_t b = 0; b < num_bins; ++b) {
    LengthBin bin;
    bin.lower = b == 0 ? 0.0 : edges[b - 1];
    if (b < edges.size()) bin.upper = edges[b];
    report.bins.push_back(bin);
  }
  auto bin_of = [&](int tokens) {
    std::size_t b = 0;
    while (b < edges.size() && static_cast<double>(tokens) >= edges[b]) ++b;
    return b;
  };

  std::vector<std::vector<double>> fold_accuracy(num_bins);
  std::vector<double> u_sum(num_bins, 0.0);
  for (const Evaluation& e : per_fold) {
    std::vector<std::size_t> hits(num_bins, 0), correct(num_bins, 0);
    for (const Prediction& p : e.predictions) {
      const std::size_t b = bin_of(p.token_count);
      ++hits[b];
      if (p.predicted == p.label) ++correct[b];
      u_sum[b] += p.uncertainty;
    }
    for (std::size_t b = 0; b < num_bins; ++b) {
      report.bins[b].n += hits[b];
      if (hits[b]) fold_accuracy[b].push_back(double(correct[b]) / double(hits[b]));
    }
  }
  for (std::size_t b = 0; b < num_bins; ++b) {
    LengthBin& bin = report.bins[b];
    const auto& acc = fold_accuracy[b];
    bin.folds = acc.size();
    if (acc.empty()) continue;
    const MetricSummary s = summary_of(acc);
    bin.accuracy_mean = s.mean;
    if (acc.size() > 1) bin.ci_half_width = 1.96 * s.std / std::sqrt(static_cast<double>(acc.size()));
    bin.mean_uncertainty = u_sum[b] / static_cast<double>(bin.n);
  }
  return report;
}

LengthBinReport length_bins(const dataio::Dataset& data,
                            std::span<const dataio::FoldSplit> splits,
                            std::span<const detector::DetectorParams> fold_params,
                            ModalityMode modality, std::span<const double> edges) {
  if (splits.size() != fold_params.size()) {
    throw ArgumentError(std::to_string(splits.size()) + " splits but " +
                        std::to_string(fold_params.size()) + " fold models");
  }
  std::vector<Evaluation> evals;
  for (std::size_t f = 0; f < splits.size(); ++f) {
    evals.push_back(evaluate(data.subset(splits[f].test_indices), fold_params[f], modality));
  }
  return length_bins(evals, edges);
}

}  // namespace tvhsd::harness

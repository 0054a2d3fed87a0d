#include "tvhsd/error.hpp"
#include "tvhsd/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace tvhsd::harness {

using dataio::Dataset;
using dataio::SampleRecord;
using ndgrad::Tensor;

SampleRecord apply_modality(SampleRecord sample, ModalityMode mode) {
  if (mode == ModalityMode::text_only) std::fill(sample.image_emb.begin(), sample.image_emb.end(), 0.0);
  if (mode == ModalityMode::image_only) std::fill(sample.text_emb.begin(), sample.text_emb.end(), 0.0);
  return sample;
}

namespace {

void check_dims(const Dataset& data, const detector::DetectorConfig& c) {
  const auto& m = data.manifest;
  if (m.text_dim != c.text_dim || m.image_dim != c.image_dim || m.num_classes != c.num_classes) {
    throw ShapeError("dataset dims (text " + std::to_string(m.text_dim) + ", image " +
                     std::to_string(m.image_dim) + ", classes " + std::to_string(m.num_classes) +
                     ") do not match the detector (" + std::to_string(c.text_dim) + ", " +
                     std::to_string(c.image_dim) + ", " + std::to_string(c.num_classes) + ")");
  }
}

}  // namespace

TrainResult train(const Dataset& data, const TrainConfig& config) {
  config.validate();
  if (data.size() == 0) throw ArgumentError("cannot train on an empty dataset");
  check_dims(data, config.detector);

  detector::DetectorConfig det = config.detector;
  det.seed = config.seed;
  TrainResult result;
  result.params = detector::DetectorParams::init(det);

  const std::size_t n = data.size();
  const std::size_t dt = det.text_dim, di = det.image_dim;
  std::vector<SampleRecord> samples;
  samples.reserve(n);
  for (const SampleRecord& s : data.samples) samples.push_back(apply_modality(s, config.modality_mode));

  auto tensors = result.params.tensors();
  AdamState adam = adam_init(std::vector<const Tensor*>(tensors.begin(), tensors.end()));

  std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                    0x5u};
  std::mt19937_64 shuffle_rng(seq);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double lambda = trust::annealing(epoch, config.epochs);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double sum_total = 0.0, sum_digamma = 0.0, sum_kl = 0.0;

    for (std::size_t start = 0, batch_index = 0; start < n; start += config.batch_size, ++batch_index) {
      const std::size_t rows = std::min(config.batch_size, n - start);
      Tensor text({rows, dt}), image({rows, di});
      std::vector<int> labels(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        const SampleRecord& s = samples[order[start + r]];
        std::copy(s.text_emb.begin(), s.text_emb.end(), text.data().begin() + r * dt);
        std::copy(s.image_emb.begin(), s.image_emb.end(), image.data().begin() + r * di);
        labels[r] = s.label;
      }

      ndgrad::Graph graph;
      const detector::ParamVars vars = detector::bind(graph, result.params);
      const detector::ForwardVars out = detector::forward(graph, vars, text, image);
      trust::LossBreakdown breakdown;
      const ndgrad::Var loss = config.loss_mode == LossMode::trust
                                   ? trust::trust_loss(out.evidence, labels, lambda, &breakdown)
                                   : trust::cross_entropy_loss(out.logits, labels);
      const double value = loss.value()[0];
      if (!std::isfinite(value)) {
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch_index));
      }
      graph.backward(loss);
      std::vector<Tensor> grads;
      grads.reserve(vars.all.size());
      for (const ndgrad::Var& v : vars.all) grads.push_back(graph.grad(v));
      adam_step(tensors, grads, adam, ++result.steps, config);

      const double weight = static_cast<double>(rows);
      sum_total += value * weight;
      sum_digamma += breakdown.digamma_term * weight;
      sum_kl += breakdown.kl_term * weight;
    }

    for (const Tensor* t : tensors) {
      if (!t->all_finite()) {
        throw NumericalError("parameters became non-finite during epoch " + std::to_string(epoch));
      }
    }
    EpochRecord record;
    record.epoch = epoch;
    record.lambda = lambda;
    record.total = sum_total / static_cast<double>(n);
    if (config.loss_mode == LossMode::trust) {
      record.digamma_term = sum_digamma / static_cast<double>(n);
      record.kl_term = sum_kl / static_cast<double>(n);
    }
    result.history.push_back(record);
  }
  return result;
}

Evaluation evaluate(const Dataset& data, const detector::DetectorParams& params,
                    ModalityMode modality) {
  const std::size_t k = params.b_head.size();
  if (data.manifest.num_classes != k || data.manifest.text_dim != params.w_txt.cols() ||
      data.manifest.image_dim != params.w_img.cols()) {
    throw ShapeError("dataset dims do not match the model");
  }
  Evaluation eval;
  std::vector<int> truth, predicted;
  double u_sum = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const SampleRecord s = apply_modality(data.samples[i], modality);
    const trust::Opinion o = trust::to_opinion(detector::forward(s.text_emb, s.image_emb, params));
    Prediction p;
    p.index = i;
    p.label = s.label;
    p.token_count = s.token_count;
    p.uncertainty = o.uncertainty;
    p.probability = o.probability;
    // max_element returns the first maximum: ties go to the lower index.
    p.predicted = static_cast<int>(std::max_element(o.probability.begin(), o.probability.end()) -
                                   o.probability.begin());
    truth.push_back(p.label);
    predicted.push_back(p.predicted);
    u_sum += p.uncertainty;
    eval.predictions.push_back(std::move(p));
  }
  eval.metrics = compute_metrics(truth, predicted, k);
  eval.mean_uncertainty = data.size() ? u_sum / static_cast<double>(data.size()) : 0.0;
  return eval;
}

}  // namespace tvhsd::harness

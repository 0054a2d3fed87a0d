#include "tvhsd/dataio.hpp"

#include "tvhsd/error.hpp"

#include <cmath>
#include <random>

namespace tvhsd::dataio {

namespace {

double to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace

Dataset gen_synthetic(const SyntheticSpec& spec) {
  if (spec.num_samples < 1) throw ArgumentError("num_samples must be >= 1");
  if (spec.num_classes < 2) throw ArgumentError("num_classes must be >= 2");
  if (spec.text_dim < 2 || spec.image_dim < 2) throw ArgumentError("embedding dims must be >= 2");
  if (spec.text_dim < spec.num_classes || spec.image_dim < spec.num_classes) {
    throw ArgumentError("embedding dims must be >= num_classes to place the class means");
  }
  if (!(spec.separation >= 0.0) || !(spec.length_noise >= 0.0)) {
    throw ArgumentError("separation and length_noise must be >= 0");
  }

  Dataset d;
  d.manifest.num_samples = spec.num_samples;
  d.manifest.text_dim = spec.text_dim;
  d.manifest.image_dim = spec.image_dim;
  d.manifest.num_classes = spec.num_classes;
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    d.manifest.label_names.push_back("class_" + std::to_string(c));
  }

  // mu_c = (separation / sqrt 2) e_c gives |mu_c - mu_c'| = separation.
  const double axis = spec.separation / std::sqrt(2.0);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> tokens(kMinTokens, kMaxTokens);

  auto draw = [&](std::size_t dim, int label, double sigma) {
    std::vector<double> v(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      const double mean = static_cast<std::size_t>(label) == i ? axis : 0.0;
      v[i] = to_f32(mean + sigma * normal(rng));
    }
    return v;
  };

  d.samples.reserve(spec.num_samples);
  const int width = static_cast<int>(std::to_string(spec.num_samples).size());
  for (std::size_t i = 0; i < spec.num_samples; ++i) {
    SampleRecord s;
    std::string digits = std::to_string(i);
    s.id = "s" + std::string(static_cast<std::size_t>(width) - digits.size(), '0') + digits;
    s.label = static_cast<int>(i % spec.num_classes);
    s.token_count = tokens(rng);
    const double sigma = 1.0 + spec.length_noise * s.token_count / double(kMaxTokens);
    s.text_emb = draw(spec.text_dim, s.label, sigma);
    s.image_emb = draw(spec.image_dim, s.label, sigma);
    d.samples.push_back(std::move(s));
  }
  return d;
}

}  // namespace tvhsd::dataio

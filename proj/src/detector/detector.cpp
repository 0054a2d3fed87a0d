#include "tvhsd/detector.hpp"

#include "tvhsd/error.hpp"

#include <cmath>
#include <random>

namespace tvhsd::detector {

using ndgrad::shape_string;

void DetectorConfig::validate() const {
  if (text_dim < 1 || image_dim < 1 || align_dim < 1 || state_size < 1 || se_reduction < 1) {
    throw ArgumentError("detector dims must all be >= 1");
  }
  if (num_classes < 2) throw ArgumentError("num_classes must be >= 2");
  if (align_dim % se_reduction != 0) {
    throw ArgumentError("se_reduction " + std::to_string(se_reduction) +
                        " must divide align_dim " + std::to_string(align_dim));
  }
}

const std::array<const char*, DetectorParams::kCount>& DetectorParams::names() {
  static const std::array<const char*, kCount> kNames{
      "w_txt", "b_txt", "w_img", "b_img", "se_w1",     "se_w2",
      "a_log", "ssm_b", "ssm_c", "delta_log", "w_head", "b_head"};
  return kNames;
}

std::array<Tensor*, DetectorParams::kCount> DetectorParams::tensors() {
  return {&w_txt, &b_txt, &w_img, &b_img, &se_w1,     &se_w2,
          &a_log, &ssm_b, &ssm_c, &delta_log, &w_head, &b_head};
}

std::array<const Tensor*, DetectorParams::kCount> DetectorParams::tensors() const {
  return {&w_txt, &b_txt, &w_img, &b_img, &se_w1,     &se_w2,
          &a_log, &ssm_b, &ssm_c, &delta_log, &w_head, &b_head};
}

namespace {

std::array<ndgrad::Shape, DetectorParams::kCount> expected_shapes(const DetectorConfig& c) {
  const std::size_t m = c.align_dim, n = c.state_size, k = c.num_classes, s = c.squeeze_dim();
  return {{{m, c.text_dim}, {m}, {m, c.image_dim}, {m}, {s, m}, {m, s},
           {n}, {n}, {n}, {1}, {k, m}, {k}}};
}

}  // namespace

void DetectorParams::validate(const DetectorConfig& config) const {
  config.validate();
  const auto shapes = expected_shapes(config);
  const auto ts = tensors();
  for (std::size_t i = 0; i < kCount; ++i) {
    if (ts[i]->shape() != shapes[i]) {
      throw ShapeError(std::string(names()[i]) + " is " + shape_string(ts[i]->shape()) +
                       ", config needs " + shape_string(shapes[i]));
    }
    if (!ts[i]->all_finite()) {
      throw NumericalError(std::string(names()[i]) + " has non-finite entries");
    }
  }
}

DetectorParams DetectorParams::zeros(const DetectorConfig& config) {
  config.validate();
  const auto shapes = expected_shapes(config);
  DetectorParams p;
  auto ts = p.tensors();
  for (std::size_t i = 0; i < kCount; ++i) *ts[i] = Tensor(shapes[i]);
  for (std::size_t n = 0; n < config.state_size; ++n) {
    p.a_log[n] = std::log(static_cast<double>(n + 1));
    p.ssm_b[n] = 1.0;
    p.ssm_c[n] = 1.0;
  }
  p.delta_log[0] = std::log(0.01);
  return p;
}

DetectorParams DetectorParams::init(const DetectorConfig& config) {
  DetectorParams p = zeros(config);
  std::mt19937_64 rng(config.seed);
  auto fill = [&rng](Tensor& t, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (double& v : t.data()) v = u(rng);
  };
  fill(p.w_txt, config.text_dim);
  fill(p.b_txt, config.text_dim);
  fill(p.w_img, config.image_dim);
  fill(p.b_img, config.image_dim);
  fill(p.se_w1, config.align_dim);
  fill(p.se_w2, config.squeeze_dim());
  fill(p.w_head, config.align_dim);
  fill(p.b_head, config.align_dim);
  return p;
}

namespace {

void affine(const Tensor& w, const Tensor& bias, std::span<const double> x, double* out) {
  const std::size_t rows = w.rows(), cols = w.cols();
  if (x.size() != cols) {
    throw ShapeError("input of length " + std::to_string(x.size()) + " for weight " +
                     shape_string(w.shape()));
  }
  for (std::size_t i = 0; i < rows; ++i) {
    double acc = bias.empty() ? 0.0 : bias[i];
    const double* wi = w.data().data() + i * cols;
    for (std::size_t j = 0; j < cols; ++j) acc += wi[j] * x[j];
    out[i] = acc;
  }
}

}  // namespace

Tensor connect(std::span<const double> text_emb, std::span<const double> image_emb,
               const DetectorParams& params) {
  const std::size_t m = params.w_txt.rows();
  Tensor seq({2, m});
  affine(params.w_txt, params.b_txt, text_emb, seq.data().data());
  affine(params.w_img, params.b_img, image_emb, seq.data().data() + m);
  return seq;
}

Tensor se_gate(const Tensor& sequence, const DetectorParams& params) {
  const std::size_t len = sequence.rows(), m = sequence.cols();
  if (sequence.rank() != 2 || m != params.se_w1.cols()) {
    throw ShapeError("se_gate input " + shape_string(sequence.shape()) + " for se_w1 " +
                     shape_string(params.se_w1.shape()));
  }
  std::vector<double> z(m, 0.0);
  for (std::size_t l = 0; l < len; ++l)
    for (std::size_t j = 0; j < m; ++j) z[j] += sequence.at(l, j) / static_cast<double>(len);

  std::vector<double> hidden(params.se_w1.rows());
  affine(params.se_w1, Tensor{}, z, hidden.data());
  for (double& h : hidden) h = h > 0 ? h : 0.0;
  std::vector<double> gate(m);
  affine(params.se_w2, Tensor{}, hidden, gate.data());
  for (double& s : gate) s = ndgrad::sigmoid(s);

  Tensor out = sequence;
  for (std::size_t l = 0; l < len; ++l)
    for (std::size_t j = 0; j < m; ++j) out.at(l, j) *= gate[j];
  return out;
}

Discretized discretize(std::span<const double> a, std::span<const double> b, double delta) {
  if (a.size() != b.size()) {
    throw ShapeError("discretize: A has " + std::to_string(a.size()) + " entries, B has " +
                     std::to_string(b.size()));
  }
  Discretized d{std::vector<double>(a.size()), std::vector<double>(a.size())};
  for (std::size_t n = 0; n < a.size(); ++n) {
    const double u = delta * a[n];
    d.a_bar[n] = std::exp(u);
    if (std::abs(u) < kTaylorSwitch) {
      d.b_bar[n] = delta * b[n] * (1.0 + 0.5 * u);
    } else {
      d.b_bar[n] = std::expm1(u) / a[n] * b[n];
    }
  }
  return d;
}

Discretized discretize(const DetectorParams& params) {
  std::vector<double> a(params.a_log.size());
  for (std::size_t n = 0; n < a.size(); ++n) a[n] = -std::exp(params.a_log[n]);
  return discretize(a, params.ssm_b.data(), std::exp(params.delta_log[0]));
}

std::vector<double> ssm_scan(std::span<const double> x, const Discretized& d,
                             std::span<const double> c) {
  const std::size_t n = d.a_bar.size();
  if (c.size() != n) throw ShapeError("ssm_scan: C has " + std::to_string(c.size()) + " entries, state " + std::to_string(n));
  std::vector<double> h(n, 0.0), y(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      h[i] = d.a_bar[i] * h[i] + d.b_bar[i] * x[t];
      acc += c[i] * h[i];
    }
    y[t] = acc;
  }
  return y;
}

std::vector<double> ssm_kernel(const Discretized& d, std::span<const double> c,
                               std::size_t length) {
  const std::size_t n = d.a_bar.size();
  if (c.size() != n) throw ShapeError("ssm_kernel: C has " + std::to_string(c.size()) + " entries, state " + std::to_string(n));
  if (length < 1) throw ArgumentError("ssm_kernel length must be >= 1");
  std::vector<double> k(length, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double power = 1.0;
    for (std::size_t j = 0; j < length; ++j) {
      k[j] += c[i] * power * d.b_bar[i];
      power *= d.a_bar[i];
    }
  }
  return k;
}

std::vector<double> causal_conv(std::span<const double> x, std::span<const double> kernel) {
  if (kernel.size() < x.size()) throw ShapeError("causal_conv: kernel shorter than input");
  std::vector<double> y(x.size(), 0.0);
  for (std::size_t t = 0; t < x.size(); ++t)
    for (std::size_t j = 0; j <= t; ++j) y[t] += kernel[j] * x[t - j];
  return y;
}

Tensor ssm_sequence(const Tensor& sequence, const DetectorParams& params) {
  const Discretized d = discretize(params);
  const std::size_t len = sequence.rows(), m = sequence.cols();
  Tensor out(sequence.shape());
  std::vector<double> column(len);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t l = 0; l < len; ++l) column[l] = sequence.at(l, j);
    const auto y = ssm_scan(column, d, params.ssm_c.data());
    for (std::size_t l = 0; l < len; ++l) out.at(l, j) = y[l];
  }
  return out;
}

std::vector<double> forward_logits(std::span<const double> text_emb,
                                   std::span<const double> image_emb,
                                   const DetectorParams& params) {
  const Tensor seq = ssm_sequence(se_gate(connect(text_emb, image_emb, params), params), params);
  const std::size_t len = seq.rows(), m = seq.cols();
  std::vector<double> pooled(m, 0.0);
  for (std::size_t l = 0; l < len; ++l)
    for (std::size_t j = 0; j < m; ++j) pooled[j] += seq.at(l, j) / static_cast<double>(len);
  std::vector<double> logits(params.w_head.rows());
  affine(params.w_head, params.b_head, pooled, logits.data());
  return logits;
}

std::vector<double> forward(std::span<const double> text_emb, std::span<const double> image_emb,
                            const DetectorParams& params) {
  std::vector<double> e = forward_logits(text_emb, image_emb, params);
  for (double& v : e) v = ndgrad::softplus(v);
  return e;
}

}  // namespace tvhsd::detector

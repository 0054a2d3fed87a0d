#pragma once

// Multimodal detector: connection block, squeeze-and-excitation gate, a
// linear time-invariant diagonal SSM over the (text, image) token pair, and
// a softplus evidence head.

#include "tvhsd/ndgrad.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace tvhsd::detector {

using ndgrad::Graph;
using ndgrad::Tensor;
using ndgrad::Var;

struct DetectorConfig {
  std::size_t text_dim = 768;
  std::size_t image_dim = 512;
  std::size_t align_dim = 128;   // M
  std::size_t state_size = 16;   // N
  std::size_t se_reduction = 4;  // r, divides M
  std::size_t num_classes = 2;   // K
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t squeeze_dim() const { return align_dim / se_reduction; }

  friend bool operator==(const DetectorConfig&, const DetectorConfig&) = default;
};

// The SSM is single-channel and shared across all M channels. A and Delta
// are stored in log space: a_n = -exp(a_log_n) < 0, Delta = exp(delta_log) > 0.
struct DetectorParams {
  Tensor w_txt;      // M x text_dim
  Tensor b_txt;      // M
  Tensor w_img;      // M x image_dim
  Tensor b_img;      // M
  Tensor se_w1;      // M/r x M
  Tensor se_w2;      // M x M/r
  Tensor a_log;      // N
  Tensor ssm_b;      // N
  Tensor ssm_c;      // N
  Tensor delta_log;  // 1
  Tensor w_head;     // K x M
  Tensor b_head;     // K

  static constexpr std::size_t kCount = 12;
  static const std::array<const char*, kCount>& names();

  std::array<Tensor*, kCount> tensors();
  std::array<const Tensor*, kCount> tensors() const;

  // Shapes must agree with the config and every entry must be finite.
  void validate(const DetectorConfig& config) const;

  // a_n = -(n+1), Delta = 0.01, B = C = 1; projections, SE weights and the
  // head are uniform in +-1/sqrt(fan_in) drawn from config.seed.
  static DetectorParams init(const DetectorConfig& config);

  // All-zero weights with the in-domain SSM defaults above.
  static DetectorParams zeros(const DetectorConfig& config);

  friend bool operator==(const DetectorParams&, const DetectorParams&) = default;
};

// 2 x M: row 0 is the aligned text token, row 1 the aligned image token.
Tensor connect(std::span<const double> text_emb, std::span<const double> image_emb,
               const DetectorParams& params);

// Squeeze over the sequence, excite through W2 relu(W1 z), rescale channels.
Tensor se_gate(const Tensor& sequence, const DetectorParams& params);

struct Discretized {
  std::vector<double> a_bar;
  std::vector<double> b_bar;
};

// Zero-order hold for a diagonal A. Uses the first-order Taylor form of b_bar
// when |Delta a| < kTaylorSwitch.
inline constexpr double kTaylorSwitch = 1e-8;
Discretized discretize(std::span<const double> a, std::span<const double> b, double delta);
Discretized discretize(const DetectorParams& params);

// Recurrence h_t = a_bar * h_{t-1} + b_bar x_t, y_t = <c, h_t>, h_0 = 0.
std::vector<double> ssm_scan(std::span<const double> x, const Discretized& d,
                             std::span<const double> c);

// K_j = sum_n c_n a_bar_n^j b_bar_n for j < length.
std::vector<double> ssm_kernel(const Discretized& d, std::span<const double> c,
                               std::size_t length);

// y_t = sum_{j <= t} kernel_j x_{t-j}.
std::vector<double> causal_conv(std::span<const double> x, std::span<const double> kernel);

// Per-channel scan over an L x M sequence with the shared SSM.
Tensor ssm_sequence(const Tensor& sequence, const DetectorParams& params);

// Pre-softplus head outputs (used as logits by the cross-entropy ablation).
std::vector<double> forward_logits(std::span<const double> text_emb,
                                   std::span<const double> image_emb,
                                   const DetectorParams& params);

// Evidence e = softplus(logits), strictly positive.
std::vector<double> forward(std::span<const double> text_emb, std::span<const double> image_emb,
                            const DetectorParams& params);

// Recording counterparts used for training.
struct ParamVars {
  std::array<Var, DetectorParams::kCount> all;

  Var w_txt() const { return all[0]; }
  Var b_txt() const { return all[1]; }
  Var w_img() const { return all[2]; }
  Var b_img() const { return all[3]; }
  Var se_w1() const { return all[4]; }
  Var se_w2() const { return all[5]; }
  Var a_log() const { return all[6]; }
  Var ssm_b() const { return all[7]; }
  Var ssm_c() const { return all[8]; }
  Var delta_log() const { return all[9]; }
  Var w_head() const { return all[10]; }
  Var b_head() const { return all[11]; }
};

ParamVars bind(Graph& graph, const DetectorParams& params);

// Kernel of length T as a differentiable function of the raw parameters.
Var ssm_kernel(Var a_log, Var ssm_b, Var ssm_c, Var delta_log, std::size_t length);

// Causal convolution of a sequence of equally shaped tensors with a kernel.
std::vector<Var> causal_conv(std::span<const Var> sequence, Var kernel);

struct ForwardVars {
  Var logits;    // B x K
  Var evidence;  // B x K
};

// Batched forward; text is B x text_dim, image is B x image_dim.
ForwardVars forward(Graph& graph, const ParamVars& params, const Tensor& text,
                    const Tensor& image);

// model.json: config, every parameter tensor as nested arrays, and free-form
// string tags (training modes).
struct ModelFile {
  DetectorConfig config;
  DetectorParams params;
  std::map<std::string, std::string> tags;
};

void save_model(const ModelFile& model, const std::filesystem::path& path);
ModelFile load_model(const std::filesystem::path& path);

}  // namespace tvhsd::detector

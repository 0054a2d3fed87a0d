#include "tvhsd/trust.hpp"

#include "tvhsd/error.hpp"
#include "tvhsd/special.hpp"

#include <algorithm>
#include <cmath>

namespace tvhsd::trust {

using ndgrad::digamma;
using ndgrad::log_gamma;
using ndgrad::trigamma;

namespace {

// Index of the hot entry; throws unless y is exactly one-hot.
std::size_t target_of(std::span<const double> y, std::size_t k) {
  if (y.size() != k) {
    throw ShapeError("label vector of length " + std::to_string(y.size()) + " for " +
                     std::to_string(k) + " classes");
  }
  std::size_t target = k, ones = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (y[i] == 1.0) {
      target = i;
      ++ones;
    } else if (y[i] != 0.0) {
      ones = k + 1;
    }
  }
  if (ones != 1) throw ArgumentError("label vector is not one-hot");
  return target;
}

void check_evidence(std::span<const double> e) {
  if (e.size() < 2) throw ArgumentError("opinions need K >= 2 classes");
  for (double v : e) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw DomainError("evidence must be finite and non-negative, got " + std::to_string(v));
    }
  }
}

}  // namespace

Opinion to_opinion(std::span<const double> evidence) {
  check_evidence(evidence);
  const std::size_t k = evidence.size();
  Opinion o;
  o.evidence.assign(evidence.begin(), evidence.end());
  o.alpha.resize(k);
  for (std::size_t i = 0; i < k; ++i) o.alpha[i] = evidence[i] + 1.0;
  for (double a : o.alpha) o.strength += a;
  o.belief.resize(k);
  o.probability.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    o.belief[i] = evidence[i] / o.strength;
    o.probability[i] = o.alpha[i] / o.strength;
  }
  o.uncertainty = static_cast<double>(k) / o.strength;
  return o;
}

std::vector<double> one_hot(std::size_t label, std::size_t num_classes) {
  if (label >= num_classes) {
    throw ArgumentError("label " + std::to_string(label) + " outside [0, " +
                        std::to_string(num_classes) + ")");
  }
  std::vector<double> y(num_classes, 0.0);
  y[label] = 1.0;
  return y;
}

double loss_digamma(std::span<const double> alpha, std::span<const double> y) {
  const std::size_t target = target_of(y, alpha.size());
  double strength = 0.0;
  for (double a : alpha) {
    if (!(a >= 1.0)) throw DomainError("alpha entries must be >= 1");
    strength += a;
  }
  return digamma(strength) - digamma(alpha[target]);
}

std::vector<double> adjusted_alpha(std::span<const double> alpha, std::span<const double> y) {
  const std::size_t target = target_of(y, alpha.size());
  std::vector<double> out(alpha.begin(), alpha.end());
  out[target] = 1.0;
  return out;
}

double kl_uniform_dirichlet(std::span<const double> alpha_tilde) {
  const std::size_t k = alpha_tilde.size();
  double strength = 0.0, log_gamma_sum = 0.0;
  for (double a : alpha_tilde) {
    if (!(a >= 1.0)) throw DomainError("adjusted alpha entries must be >= 1");
    strength += a;
    log_gamma_sum += log_gamma(a);
  }
  const double psi_s = digamma(strength);
  double cross = 0.0;
  for (double a : alpha_tilde) {
    if (a != 1.0) cross += (a - 1.0) * (digamma(a) - psi_s);
  }
  const double kl = log_gamma(strength) - log_gamma_sum - log_gamma(static_cast<double>(k)) + cross;
  // All-ones input is exactly zero; rounding elsewhere may dip below 0 by an ulp.
  return std::max(kl, 0.0);
}

double annealing(std::size_t epoch, std::size_t total_epochs) {
  if (total_epochs == 0) throw ArgumentError("total_epochs must be > 0");
  return std::min(1.0, static_cast<double>(epoch) / (0.5 * static_cast<double>(total_epochs)));
}

LossBreakdown loss_trust(std::span<const double> evidence, std::span<const double> y,
                         double lambda) {
  check_evidence(evidence);
  std::vector<double> alpha(evidence.begin(), evidence.end());
  for (double& a : alpha) a += 1.0;
  LossBreakdown out;
  out.digamma_term = loss_digamma(alpha, y);
  out.kl_term = kl_uniform_dirichlet(adjusted_alpha(alpha, y));
  out.lambda = lambda;
  out.total = out.digamma_term + lambda * out.kl_term;
  return out;
}

LossBreakdown loss_trust(std::span<const double> evidence, std::span<const double> y,
                         std::size_t epoch, std::size_t total_epochs) {
  return loss_trust(evidence, y, annealing(epoch, total_epochs));
}

std::vector<double> loss_trust_grad(std::span<const double> evidence, std::span<const double> y,
                                    double lambda) {
  check_evidence(evidence);
  const std::size_t k = evidence.size();
  const std::size_t target = target_of(y, k);
  double strength = 0.0;
  for (double e : evidence) strength += e + 1.0;

  // d/d alpha_j [psi(S) - psi(alpha_y)] = psi'(S) - [j = y] psi'(alpha_y)
  std::vector<double> grad(k, trigamma(strength));
  grad[target] -= trigamma(evidence[target] + 1.0);

  // d KL / d alpha~_j = (alpha~_j - 1) psi'(alpha~_j) - (S~ - K) psi'(S~), and
  // alpha~_j depends on alpha_j only off the target.
  if (lambda != 0.0) {
    double adjusted_strength = 1.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (j != target) adjusted_strength += evidence[j] + 1.0;
    }
    const double common = (adjusted_strength - static_cast<double>(k)) * trigamma(adjusted_strength);
    for (std::size_t j = 0; j < k; ++j) {
      if (j == target) continue;
      const double a = evidence[j] + 1.0;
      grad[j] += lambda * ((a - 1.0) * trigamma(a) - common);
    }
  }
  return grad;
}

double loss_cross_entropy(std::span<const double> logits, std::span<const double> y) {
  const std::size_t target = target_of(y, logits.size());
  const double peak = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - peak);
  return peak + std::log(sum) - logits[target];
}

std::vector<double> loss_cross_entropy_grad(std::span<const double> logits,
                                            std::span<const double> y) {
  const std::size_t target = target_of(y, logits.size());
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> grad(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) sum += grad[i] = std::exp(logits[i] - peak);
  for (double& g : grad) g /= sum;
  grad[target] -= 1.0;
  return grad;
}

namespace {

template <class Loss, class Grad>
ndgrad::Var batch_mean(ndgrad::Var input, std::span<const int> labels, Loss loss, Grad grad) {
  const ndgrad::Tensor& x = input.value();
  const std::size_t rows = x.rows(), k = x.cols();
  if (labels.size() != rows) {
    throw ShapeError(std::to_string(labels.size()) + " labels for a batch of " +
                     std::to_string(rows));
  }
  const std::vector<int> ys(labels.begin(), labels.end());
  double total = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    const auto y = one_hot(static_cast<std::size_t>(ys[i]), k);
    total += loss(x.data().subspan(i * k, k), y);
  }
  const double scale = 1.0 / static_cast<double>(rows);
  return input.graph->push(
      ndgrad::Tensor::scalar(total * scale), [input, ys, k, rows, scale, grad](ndgrad::Graph& g, const ndgrad::Tensor& gout) {
        const ndgrad::Tensor& x = g.value(input);
        ndgrad::Tensor gx(x.shape());
        for (std::size_t i = 0; i < rows; ++i) {
          const auto y = one_hot(static_cast<std::size_t>(ys[i]), k);
          const auto gi = grad(x.data().subspan(i * k, k), y);
          for (std::size_t j = 0; j < k; ++j) gx[i * k + j] = gout[0] * scale * gi[j];
        }
        g.accumulate(input, gx);
      });
}

}  // namespace

ndgrad::Var trust_loss(ndgrad::Var evidence, std::span<const int> labels, double lambda,
                       LossBreakdown* breakdown) {
  LossBreakdown sum{};
  ndgrad::Var out = batch_mean(
      evidence, labels,
      [&](std::span<const double> e, std::span<const double> y) {
        const LossBreakdown b = loss_trust(e, y, lambda);
        sum.digamma_term += b.digamma_term;
        sum.kl_term += b.kl_term;
        return b.total;
      },
      [lambda](std::span<const double> e, std::span<const double> y) {
        return loss_trust_grad(e, y, lambda);
      });
  if (breakdown) {
    const double n = static_cast<double>(labels.size());
    breakdown->digamma_term = sum.digamma_term / n;
    breakdown->kl_term = sum.kl_term / n;
    breakdown->lambda = lambda;
    breakdown->total = out.value()[0];
  }
  return out;
}

ndgrad::Var cross_entropy_loss(ndgrad::Var logits, std::span<const int> labels) {
  return batch_mean(
      logits, labels,
      [](std::span<const double> z, std::span<const double> y) { return loss_cross_entropy(z, y); },
      [](std::span<const double> z, std::span<const double> y) {
        return loss_cross_entropy_grad(z, y);
      });
}

}  // namespace tvhsd::trust

#pragma once

// Subjective-logic opinions and the evidential ("trustworthy") loss:
// digamma-form expected cross-entropy plus an annealed KL penalty towards
// the uniform Dirichlet on the non-target evidence.

#include "tvhsd/ndgrad.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace tvhsd::trust {

struct Opinion {
  std::vector<double> evidence;
  std::vector<double> alpha;        // e + 1
  double strength = 0.0;            // S = sum alpha
  std::vector<double> belief;       // e / S
  double uncertainty = 0.0;         // K / S
  std::vector<double> probability;  // alpha / S
};

Opinion to_opinion(std::span<const double> evidence);

std::vector<double> one_hot(std::size_t label, std::size_t num_classes);

// psi(S) - psi(alpha_y).
double loss_digamma(std::span<const double> alpha, std::span<const double> y);

// y + (1 - y) * alpha: the target entry is reset to 1.
std::vector<double> adjusted_alpha(std::span<const double> alpha, std::span<const double> y);

// KL(Dir(alpha_tilde) || Dir(1)), closed form.
double kl_uniform_dirichlet(std::span<const double> alpha_tilde);

// min(1, epoch / (total / 2)).
double annealing(std::size_t epoch, std::size_t total_epochs);

struct LossBreakdown {
  double digamma_term = 0.0;
  double kl_term = 0.0;
  double lambda = 0.0;
  double total = 0.0;
};

LossBreakdown loss_trust(std::span<const double> evidence, std::span<const double> y,
                         std::size_t epoch, std::size_t total_epochs);
LossBreakdown loss_trust(std::span<const double> evidence, std::span<const double> y,
                         double lambda);

// d total / d evidence for a fixed lambda.
std::vector<double> loss_trust_grad(std::span<const double> evidence, std::span<const double> y,
                                    double lambda);

// -log softmax(logits)_y, evaluated with log-sum-exp.
double loss_cross_entropy(std::span<const double> logits, std::span<const double> y);
std::vector<double> loss_cross_entropy_grad(std::span<const double> logits,
                                            std::span<const double> y);

// Batch means over the rows of a B x K evidence (or logit) matrix.
// `breakdown`, when given, receives the mean of each term.
ndgrad::Var trust_loss(ndgrad::Var evidence, std::span<const int> labels, double lambda,
                       LossBreakdown* breakdown = nullptr);
ndgrad::Var cross_entropy_loss(ndgrad::Var logits, std::span<const int> labels);

}  // namespace tvhsd::trust

// Copyright 2026 The privmech Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PRIVMECH_LOSSES_HPP
#define PRIVMECH_LOSSES_HPP

#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "privmech/nets.hpp"
#include "privmech/tensor.hpp"

namespace privmech {

// Every loss below is written so that the mechanism minimizes and the
// adversary maximizes the same scalar. Values are batch means; a batch of
// one row evaluates the per-sample objective.

enum class DistortionKind { SquaredError, ZeroOne, PixelBernoulliCE };

struct DistortionFn {
  DistortionKind kind = DistortionKind::SquaredError;

  // Differentiable per-row distortion, n x 1. ZeroOne has no gradient and
  // throws ContractError here; it enters finite-alphabet losses as a
  // precomputed table instead.
  ad::Tensor rows(const ad::Tensor& y, const ad::Tensor& z) const;

  // Plain evaluation on one sample pair.
  double value(std::span<const double> y, std::span<const double> z) const;

  // Evaluation on alphabet symbols (finite-alphabet experiments).
  double discrete(int y, int z) const;
};

struct Lagrangian {
  double lambda = 1.0;
};
struct Penalty {
  double lambda = 1.0;
  double delta = 0.0;
};
using BudgetMode = std::variant<Lagrangian, Penalty>;

// Lagrangian: lambda * d. Penalty: lambda * max(0, d - delta)^2, applied to
// whatever distortion quantity `d` holds.
ad::Tensor budget_term(const ad::Tensor& d, const BudgetMode& budget);

// Monte-Carlo objective over k sampled releases:
//   mean_i (1/k) sum_j log Q(x_i|z_{i,j}) + budget(mean_{i,j} d(y_i, z_{i,j})).
// The budget acts on the batch estimate of the expected distortion; the
// Lagrangian case equals the per-release sum by linearity, and a single
// sample reproduces the per-sample penalty form.
ad::Tensor ppan_loss(const ad::Tensor& x, const ad::Tensor& y,
                     const std::vector<ad::Tensor>& releases,
                     const AdversaryNet& adversary, const DistortionFn& dist,
                     const BudgetMode& budget);

// Finite release alphabet: the exact expectation over Z, no sampling.
//   mean_i sum_z P(z|w_i) log Q(x_i|z) + budget(mean_i sum_z P(z|w_i) d(y_i,z)).
// `mechanism_dist` rows must sum to 1 within 1e-9 (ContractError otherwise);
// `distortion_table` holds d(y_i, z) per row i and release symbol z.
ad::Tensor finite_loss(const ad::Tensor& x_onehot,
                       const ad::Tensor& mechanism_dist,
                       const AdversaryNet& adversary,
                       const ad::Tensor& distortion_table,
                       const BudgetMode& budget);

// Squared-error release objective with the penalty form of the budget:
//   log Q(x|z) + lambda * max(0, ||y - z||^2 - delta)^2.
ad::Tensor gauss_loss(const ad::Tensor& x, const ad::Tensor& y,
                      const ad::Tensor& z, const AdversaryNet& adversary,
                      double delta, double lambda);

// Image objective with optional GAN discriminator:
//   log Q(x|z) + lambda d(y,z) + gamma log D(z) + gamma log(1 - D(y)).
// gamma = 0 needs no discriminator.
ad::Tensor mnist_loss(const ad::Tensor& x_onehot, const ad::Tensor& y,
                      const ad::Tensor& z, const AdversaryNet& adversary,
                      const DiscriminatorNet* discriminator, double lambda,
                      double gamma,
                      const DistortionFn& dist = {
                          DistortionKind::PixelBernoulliCE});

// Mixture objective: exact expectation over the component selector combined
// with one reparameterized sample per component:
//   mean_i sum_l pi_l [ log Q(x_i|z_{l,i}) + budget(d(y_i, z_{l,i})) ].
ad::Tensor gmm_loss(const ad::Tensor& x, const ad::Tensor& y,
                    const GmmComponentSamples& components,
                    const AdversaryNet& adversary, const DistortionFn& dist,
                    const BudgetMode& budget);

// Mutual-information utility objective:
//   mean_i [ log Q_{X|Z}(x_i|z_i) - lambda log Q_{Y|Z}(y_i|z_i) ].
// The mechanism and the utility decoder minimize; the privacy adversary
// maximizes.
ad::Tensor mi_utility_loss(const ad::Tensor& x, const ad::Tensor& y,
                           const ad::Tensor& z,
                           const AdversaryNet& privacy_adversary,
                           const AdversaryNet& utility_decoder, double lambda);

}  // namespace privmech

#endif  // PRIVMECH_LOSSES_HPP

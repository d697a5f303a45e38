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

#include "privmech/losses.hpp"

#include <cmath>

#include "privmech/common.hpp"

namespace privmech {

using ad::Tensor;

ad::Tensor DistortionFn::rows(const ad::Tensor& y, const ad::Tensor& z) const {
  if (y.rows() != z.rows() || y.cols() != z.cols()) {
    throw DimensionError("DistortionFn: y and z shapes differ");
  }
  switch (kind) {
    case DistortionKind::SquaredError:
      return ad::row_sum(ad::square(ad::sub(y, z)));
    case DistortionKind::PixelBernoulliCE: {
      Tensor zc = ad::clamp(z, kProbEps, 1.0 - kProbEps);
      Tensor on = ad::mul(y, ad::log_op(zc));
      Tensor off = ad::mul(ad::sub(Tensor::scalar(1.0), y),
                           ad::log_op(ad::sub(Tensor::scalar(1.0), zc)));
      const double scale = -1.0 / static_cast<double>(y.cols());
      return ad::scalar_mul(ad::row_sum(ad::add(on, off)), scale);
    }
    case DistortionKind::ZeroOne:
      throw ContractError(
          "ZeroOne distortion has no gradient path; use the finite-alphabet "
          "loss with a distortion table");
  }
  throw ContractError("unknown distortion kind");
}

double DistortionFn::value(std::span<const double> y,
                           std::span<const double> z) const {
  if (y.size() != z.size()) {
    throw DimensionError("DistortionFn::value: length mismatch");
  }
  switch (kind) {
    case DistortionKind::SquaredError: {
      double s = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y[i] - z[i];
        s += d * d;
      }
      return s;
    }
    case DistortionKind::ZeroOne: {
      for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] != z[i]) return 1.0;
      }
      return 0.0;
    }
    case DistortionKind::PixelBernoulliCE: {
      double s = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) {
        const double zc =
            std::min(1.0 - kProbEps, std::max(kProbEps, z[i]));
        s += y[i] * std::log(zc) + (1.0 - y[i]) * std::log(1.0 - zc);
      }
      return -s / static_cast<double>(y.size());
    }
  }
  throw ContractError("unknown distortion kind");
}

double DistortionFn::discrete(int y, int z) const {
  switch (kind) {
    case DistortionKind::ZeroOne:
      return y == z ? 0.0 : 1.0;
    case DistortionKind::SquaredError: {
      const double d = static_cast<double>(y - z);
      return d * d;
    }
    case DistortionKind::PixelBernoulliCE:
      throw ContractError("PixelBernoulliCE is not defined on symbols");
  }
  throw ContractError("unknown distortion kind");
}

ad::Tensor budget_term(const ad::Tensor& d, const BudgetMode& budget) {
  if (const auto* lag = std::get_if<Lagrangian>(&budget)) {
    return ad::scalar_mul(d, lag->lambda);
  }
  const auto& pen = std::get<Penalty>(budget);
  Tensor excess = ad::max_with_zero(ad::sub(d, Tensor::scalar(pen.delta)));
  return ad::scalar_mul(ad::square(excess), pen.lambda);
}

ad::Tensor ppan_loss(const ad::Tensor& x, const ad::Tensor& y,
                     const std::vector<ad::Tensor>& releases,
                     const AdversaryNet& adversary, const DistortionFn& dist,
                     const BudgetMode& budget) {
  if (releases.empty()) {
    throw ContractError("ppan_loss: need at least one release");
  }
  // The budget acts on the batch estimate of E[d(Y,Z)] (over samples and
  // releases); for the Lagrangian this equals the per-release form by
  // linearity, and a batch of one release reproduces the per-sample penalty.
  Tensor logq_acc, dist_acc;
  for (const Tensor& z : releases) {
    Tensor lp = adversary.log_prob(x, z);
    Tensor d = dist.rows(y, z);
    logq_acc = logq_acc.defined() ? ad::add(logq_acc, lp) : lp;
    dist_acc = dist_acc.defined() ? ad::add(dist_acc, d) : d;
  }
  const double inv_k = 1.0 / static_cast<double>(releases.size());
  Tensor mean_logq = ad::mean(ad::scalar_mul(logq_acc, inv_k));
  Tensor mean_dist = ad::mean(ad::scalar_mul(dist_acc, inv_k));
  return ad::add(mean_logq, budget_term(mean_dist, budget));
}

ad::Tensor finite_loss(const ad::Tensor& x_onehot,
                       const ad::Tensor& mechanism_dist,
                       const AdversaryNet& adversary,
                       const ad::Tensor& distortion_table,
                       const BudgetMode& budget) {
  const int n = mechanism_dist.rows();
  const int nz = mechanism_dist.cols();
  if (distortion_table.rows() != n || distortion_table.cols() != nz) {
    throw DimensionError("finite_loss: distortion table shape mismatch");
  }
  for (int r = 0; r < n; ++r) {
    double s = 0.0;
    for (int c = 0; c < nz; ++c) s += mechanism_dist.at(r, c);
    if (std::abs(s - 1.0) > 1e-9) {
      throw ContractError("finite_loss: mechanism row " + std::to_string(r) +
                          " sums to " + std::to_string(s));
    }
  }

  // log Q(x_i|z) for every candidate release symbol: feed the identity as a
  // batch of one-hot releases to get the |Z| x |X| table.
  Tensor eye = Tensor::zeros(nz, nz);
  for (int i = 0; i < nz; ++i) eye.mutable_values()[i * nz + i] = 1.0;
  Tensor logq_table =
      ad::log_op(ad::clamp_min(adversary.posterior(eye), kProbEps));
  Tensor logq_per_sample = ad::matmul(x_onehot, ad::transpose(logq_table));

  Tensor expected_logq =
      ad::row_sum(ad::mul(mechanism_dist, logq_per_sample));
  Tensor expected_dist =
      ad::row_sum(ad::mul(mechanism_dist, distortion_table));
  return ad::add(ad::mean(expected_logq),
                 budget_term(ad::mean(expected_dist), budget));
}

ad::Tensor gauss_loss(const ad::Tensor& x, const ad::Tensor& y,
                      const ad::Tensor& z, const AdversaryNet& adversary,
                      double delta, double lambda) {
  return ppan_loss(x, y, {z}, adversary, {DistortionKind::SquaredError},
                   Penalty{lambda, delta});
}

ad::Tensor mnist_loss(const ad::Tensor& x_onehot, const ad::Tensor& y,
                      const ad::Tensor& z, const AdversaryNet& adversary,
                      const DiscriminatorNet* discriminator, double lambda,
                      double gamma, const DistortionFn& dist) {
  Tensor loss = ad::add(adversary.log_prob(x_onehot, z),
                        ad::scalar_mul(dist.rows(y, z), lambda));
  if (gamma > 0.0) {
    if (discriminator == nullptr) {
      throw ContractError("mnist_loss: gamma > 0 requires a discriminator");
    }
    Tensor dz = ad::log_op(ad::clamp_min(discriminator->prob(z), kProbEps));
    Tensor dy = ad::log_op(ad::clamp_min(
        ad::sub(Tensor::scalar(1.0), discriminator->prob(y)), kProbEps));
    loss = ad::add(loss, ad::scalar_mul(ad::add(dz, dy), gamma));
  }
  return ad::mean(loss);
}

ad::Tensor gmm_loss(const ad::Tensor& x, const ad::Tensor& y,
                    const GmmComponentSamples& components,
                    const AdversaryNet& adversary, const DistortionFn& dist,
                    const BudgetMode& budget) {
  const int m = static_cast<int>(components.samples.size());
  if (m == 0 || components.weights.cols() != m) {
    throw ContractError("gmm_loss: component count mismatch");
  }
  Tensor acc;
  for (int l = 0; l < m; ++l) {
    const Tensor& zl = components.samples[l];
    Tensor term = ad::add(adversary.log_prob(x, zl),
                          budget_term(dist.rows(y, zl), budget));
    Tensor weighted =
        ad::mul(ad::slice_cols(components.weights, l, l + 1), term);
    acc = acc.defined() ? ad::add(acc, weighted) : weighted;
  }
  return ad::mean(acc);
}

ad::Tensor mi_utility_loss(const ad::Tensor& x, const ad::Tensor& y,
                           const ad::Tensor& z,
                           const AdversaryNet& privacy_adversary,
                           const AdversaryNet& utility_decoder,
                           double lambda) {
  Tensor privacy = privacy_adversary.log_prob(x, z);
  Tensor utility = utility_decoder.log_prob(y, z);
  return ad::mean(ad::sub(privacy, ad::scalar_mul(utility, lambda)));
}

}  // namespace privmech

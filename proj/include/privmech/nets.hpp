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

#ifndef PRIVMECH_NETS_HPP
#define PRIVMECH_NETS_HPP

#include <string>
#include <variant>
#include <vector>

#include "privmech/rng.hpp"
#include "privmech/tensor.hpp"

namespace privmech {

enum class Activation { None, ReLU, Tanh, Sigmoid };

// Fully-connected stack. Weights are stored input x output so the forward
// pass is x * W + b; initialization is uniform on [-1/sqrt(fan_in),
// +1/sqrt(fan_in)].
class Mlp {
 public:
  Mlp() = default;
  Mlp(int input_dim, const std::vector<int>& hidden, int output_dim,
      Activation hidden_act, Activation output_act, Rng& init);

  ad::Tensor forward(const ad::Tensor& x) const;
  std::vector<ad::Tensor> parameters() const;
  int input_dim() const { return input_dim_; }
  int output_dim() const { return output_dim_; }

  // Layer access for serialization.
  std::size_t layer_count() const { return weights_.size(); }
  const ad::Tensor& weight(std::size_t l) const { return weights_[l]; }
  const ad::Tensor& bias(std::size_t l) const { return biases_[l]; }
  Activation activation(std::size_t l) const { return acts_[l]; }

  static Mlp from_layers(std::vector<ad::Tensor> weights,
                         std::vector<ad::Tensor> biases,
                         std::vector<Activation> acts);

 private:
  int input_dim_ = 0;
  int output_dim_ = 0;
  std::vector<ad::Tensor> weights_;  // in x out
  std::vector<ad::Tensor> biases_;   // 1 x out
  std::vector<Activation> acts_;     // one per layer, applied after affine
};

// i.i.d. Uniform[-1,1] auxiliary randomness fed to universal-approximator
// mechanisms.
struct SeedNoise {
  int dim = 0;
  ad::Tensor sample(int n, Rng& rng) const;
};

// Mechanism output heads.
struct UniversalApproximatorHead {
  int seed_dim = 0;  // body input is dim(W) + seed_dim, body output is z
};
struct GaussianHead {
  int output_dim = 0;  // body emits (mu, packed lower-triangular A)
};
struct GmmHead {
  int components = 0;
  int output_dim = 0;  // body emits per-component (mu, A) plus mixture logits
};
struct CategoricalHead {
  int alphabet = 0;  // body emits logits; softmax yields the distribution
};
using MechanismHead =
    std::variant<UniversalApproximatorHead, GaussianHead, GmmHead,
                 CategoricalHead>;

// One reparameterized release per mixture component.
struct GmmComponentSamples {
  ad::Tensor weights;               // n x m, rows sum to 1
  std::vector<ad::Tensor> samples;  // m tensors, each n x output_dim
};

// Randomized release mechanism z ~ P(z|w). Gradients flow through the
// releases back to the mechanism parameters for every head.
class MechanismNet {
 public:
  MechanismNet() = default;
  MechanismNet(Mlp body, MechanismHead head)
      : body_(std::move(body)), head_(head) {}

  static MechanismNet universal_approximator(int obs_dim, int seed_dim,
                                             const std::vector<int>& hidden,
                                             int release_dim,
                                             Activation hidden_act,
                                             Activation output_act, Rng& init);
  static MechanismNet gaussian(int obs_dim, const std::vector<int>& hidden,
                               int release_dim, Activation hidden_act,
                               Rng& init);
  static MechanismNet gmm(int obs_dim, const std::vector<int>& hidden,
                          int components, int release_dim,
                          Activation hidden_act, Rng& init);
  static MechanismNet categorical(int obs_dim, const std::vector<int>& hidden,
                                  int alphabet, Rng& init);

  // k independent releases for a batch of observations (n x obs_dim).
  // Categorical heads do not sample: the single returned tensor is the full
  // conditional distribution (see the finite-alphabet loss).
  std::vector<ad::Tensor> sample(const ad::Tensor& w, Rng& rng, int k) const;

  // Full conditional distribution P(z|w); categorical head only.
  ad::Tensor distribution(const ad::Tensor& w) const;

  // GMM head only: mixture weights and one reparameterized sample per
  // component.
  GmmComponentSamples gmm_component_samples(const ad::Tensor& w,
                                            Rng& rng) const;

  const MechanismHead& head() const { return head_; }
  const Mlp& body() const { return body_; }
  std::vector<ad::Tensor> parameters() const { return body_.parameters(); }
  bool is_categorical() const {
    return std::holds_alternative<CategoricalHead>(head_);
  }

 private:
  Mlp body_;
  MechanismHead head_;
};

struct CategoricalPosteriorHead {
  int alphabet = 0;
};
struct DiagonalGaussianHead {
  int dim = 0;  // body emits (mu, log variance), 2*dim wide
};
using AdversaryHead =
    std::variant<CategoricalPosteriorHead, DiagonalGaussianHead>;

// Variational posterior Q(x|z) of the sensitive attribute given a release.
class AdversaryNet {
 public:
  AdversaryNet() = default;
  AdversaryNet(Mlp body, AdversaryHead head)
      : body_(std::move(body)), head_(head) {}

  static AdversaryNet categorical(int release_dim,
                                  const std::vector<int>& hidden, int alphabet,
                                  Activation hidden_act, Rng& init);
  static AdversaryNet diagonal_gaussian(int release_dim,
                                        const std::vector<int>& hidden,
                                        int dim, Activation hidden_act,
                                        Rng& init);

  // log Q(x_i|z_i) per row, n x 1; differentiable in the parameters and in z.
  // Categorical heads take x as one-hot rows, Gaussian heads as real vectors.
  ad::Tensor log_prob(const ad::Tensor& x, const ad::Tensor& z) const;

  // Categorical head only: posterior probabilities over the alphabet, n x |X|.
  ad::Tensor posterior(const ad::Tensor& z) const;

  const AdversaryHead& head() const { return head_; }
  const Mlp& body() const { return body_; }
  std::vector<ad::Tensor> parameters() const { return body_.parameters(); }
  bool is_categorical() const {
    return std::holds_alternative<CategoricalPosteriorHead>(head_);
  }

 private:
  Mlp body_;
  AdversaryHead head_;
};

// GAN-style discriminator with sigmoid scalar output in (0,1).
class DiscriminatorNet {
 public:
  DiscriminatorNet() = default;
  explicit DiscriminatorNet(Mlp body) : body_(std::move(body)) {}

  static DiscriminatorNet make(int input_dim, int hidden_width, Rng& init);

  ad::Tensor prob(const ad::Tensor& x) const { return body_.forward(x); }
  std::vector<ad::Tensor> parameters() const { return body_.parameters(); }
  const Mlp& body() const { return body_; }

 private:
  Mlp body_;
};

// --- Checkpoints -------------------------------------------------------------
// Versioned JSON with full-precision parameters; load(save(net)) restores
// every parameter bit-exactly.

void save_checkpoint(const MechanismNet& net, const std::string& path);
void save_checkpoint(const AdversaryNet& net, const std::string& path);
void save_checkpoint(const DiscriminatorNet& net, const std::string& path);
MechanismNet load_mechanism_checkpoint(const std::string& path);
AdversaryNet load_adversary_checkpoint(const std::string& path);
DiscriminatorNet load_discriminator_checkpoint(const std::string& path);

}  // namespace privmech

#endif  // PRIVMECH_NETS_HPP

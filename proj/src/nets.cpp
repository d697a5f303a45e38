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

#include "privmech/nets.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "privmech/common.hpp"

namespace privmech {

namespace {

using ad::Tensor;
using nlohmann::json;

// Bound on log-variance outputs; keeps exp() finite without touching the
// gradient in the operating range.
constexpr double kLogVarBound = 30.0;

Tensor apply_activation(const Tensor& x, Activation act) {
  switch (act) {
    case Activation::None:
      return x;
    case Activation::ReLU:
      return ad::relu(x);
    case Activation::Tanh:
      return ad::tanh_op(x);
    case Activation::Sigmoid:
      return ad::sigmoid(x);
  }
  throw ContractError("unknown activation");
}

std::string activation_name(Activation act) {
  switch (act) {
    case Activation::None:
      return "none";
    case Activation::ReLU:
      return "relu";
    case Activation::Tanh:
      return "tanh";
    case Activation::Sigmoid:
      return "sigmoid";
  }
  throw ContractError("unknown activation");
}

Activation activation_from_name(const std::string& s) {
  if (s == "none") return Activation::None;
  if (s == "relu") return Activation::ReLU;
  if (s == "tanh") return Activation::Tanh;
  if (s == "sigmoid") return Activation::Sigmoid;
  throw FormatError("checkpoint: unknown activation '" + s + "'");
}

}  // namespace

Mlp::Mlp(int input_dim, const std::vector<int>& hidden, int output_dim,
         Activation hidden_act, Activation output_act, Rng& init)
    : input_dim_(input_dim), output_dim_(output_dim) {
  std::vector<int> widths;
  widths.push_back(input_dim);
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(output_dim);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int in = widths[l];
    const int out = widths[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::vector<double> w(static_cast<std::size_t>(in) * out);
    std::vector<double> b(static_cast<std::size_t>(out));
    init.fill_uniform(w, -bound, bound);
    init.fill_uniform(b, -bound, bound);
    weights_.push_back(Tensor::parameter(in, out, std::move(w)));
    biases_.push_back(Tensor::parameter(1, out, std::move(b)));
    acts_.push_back(l + 2 < widths.size() ? hidden_act : output_act);
  }
}

Mlp Mlp::from_layers(std::vector<ad::Tensor> weights,
                     std::vector<ad::Tensor> biases,
                     std::vector<Activation> acts) {
  if (weights.empty() || weights.size() != biases.size() ||
      weights.size() != acts.size()) {
    throw ContractError("Mlp::from_layers: inconsistent layer lists");
  }
  Mlp m;
  m.input_dim_ = weights.front().rows();
  m.output_dim_ = weights.back().cols();
  m.weights_ = std::move(weights);
  m.biases_ = std::move(biases);
  m.acts_ = std::move(acts);
  return m;
}

ad::Tensor Mlp::forward(const ad::Tensor& x) const {
  if (x.cols() != input_dim_) {
    throw DimensionError("Mlp::forward: input has " + std::to_string(x.cols()) +
                         " columns, network expects " +
                         std::to_string(input_dim_));
  }
  Tensor h = x;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    h = ad::add_rowvec(ad::matmul(h, weights_[l]), biases_[l]);
    h = apply_activation(h, acts_[l]);
  }
  return h;
}

std::vector<ad::Tensor> Mlp::parameters() const {
  std::vector<Tensor> out;
  out.reserve(weights_.size() * 2);
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(weights_[l]);
    out.push_back(biases_[l]);
  }
  return out;
}

ad::Tensor SeedNoise::sample(int n, Rng& rng) const {
  std::vector<double> u(static_cast<std::size_t>(n) * dim);
  rng.fill_uniform(u, -1.0, 1.0);
  return Tensor::constant(n, dim, std::move(u));
}

// --- MechanismNet ------------------------------------------------------------

MechanismNet MechanismNet::universal_approximator(
    int obs_dim, int seed_dim, const std::vector<int>& hidden, int release_dim,
    Activation hidden_act, Activation output_act, Rng& init) {
  Mlp body(obs_dim + seed_dim, hidden, release_dim, hidden_act, output_act,
           init);
  return MechanismNet(std::move(body), UniversalApproximatorHead{seed_dim});
}

MechanismNet MechanismNet::gaussian(int obs_dim, const std::vector<int>& hidden,
                                    int release_dim, Activation hidden_act,
                                    Rng& init) {
  const int packed = release_dim * (release_dim + 1) / 2;
  Mlp body(obs_dim, hidden, release_dim + packed, hidden_act, Activation::None,
           init);
  return MechanismNet(std::move(body), GaussianHead{release_dim});
}

MechanismNet MechanismNet::gmm(int obs_dim, const std::vector<int>& hidden,
                               int components, int release_dim,
                               Activation hidden_act, Rng& init) {
  const int packed = release_dim * (release_dim + 1) / 2;
  const int out = components * (release_dim + packed) + components;
  Mlp body(obs_dim, hidden, out, hidden_act, Activation::None, init);
  return MechanismNet(std::move(body), GmmHead{components, release_dim});
}

MechanismNet MechanismNet::categorical(int obs_dim,
                                       const std::vector<int>& hidden,
                                       int alphabet, Rng& init) {
  Mlp body(obs_dim, hidden, alphabet, Activation::ReLU, Activation::None,
           init);
  return MechanismNet(std::move(body), CategoricalHead{alphabet});
}

std::vector<ad::Tensor> MechanismNet::sample(const ad::Tensor& w, Rng& rng,
                                             int k) const {
  if (k < 1) throw ContractError("MechanismNet::sample: k must be >= 1");
  const int n = w.rows();
  std::vector<Tensor> releases;
  releases.reserve(k);

  if (const auto* ua = std::get_if<UniversalApproximatorHead>(&head_)) {
    SeedNoise noise{ua->seed_dim};
    for (int j = 0; j < k; ++j) {
      Tensor u = noise.sample(n, rng);
      releases.push_back(body_.forward(ad::concat({w, u})));
    }
    return releases;
  }
  if (const auto* gh = std::get_if<GaussianHead>(&head_)) {
    const int d = gh->output_dim;
    Tensor out = body_.forward(w);
    Tensor mu = ad::slice_cols(out, 0, d);
    Tensor tri = ad::slice_cols(out, d, out.cols());
    for (int j = 0; j < k; ++j) {
      std::vector<double> g(static_cast<std::size_t>(n) * d);
      rng.fill_normal(g);
      Tensor u = Tensor::constant(n, d, std::move(g));
      releases.push_back(ad::add(ad::tril_matvec(tri, u, d), mu));
    }
    return releases;
  }
  if (std::holds_alternative<CategoricalHead>(head_)) {
    // Finite release alphabet: the distribution itself is the "release".
    releases.push_back(distribution(w));
    return releases;
  }
  throw ContractError(
      "MechanismNet::sample: GMM heads sample per component, use "
      "gmm_component_samples");
}

ad::Tensor MechanismNet::distribution(const ad::Tensor& w) const {
  if (!is_categorical()) {
    throw ContractError(
        "MechanismNet::distribution requires a categorical head");
  }
  return ad::softmax(body_.forward(w));
}

GmmComponentSamples MechanismNet::gmm_component_samples(const ad::Tensor& w,
                                                        Rng& rng) const {
  const auto* gh = std::get_if<GmmHead>(&head_);
  if (gh == nullptr) {
    throw ContractError("gmm_component_samples requires a GMM head");
  }
  const int d = gh->output_dim;
  const int m = gh->components;
  const int packed = d * (d + 1) / 2;
  const int n = w.rows();

  Tensor out = body_.forward(w);
  GmmComponentSamples result;
  result.weights =
      ad::softmax(ad::slice_cols(out, m * (d + packed), out.cols()));
  for (int l = 0; l < m; ++l) {
    const int base = l * (d + packed);
    Tensor mu = ad::slice_cols(out, base, base + d);
    Tensor tri = ad::slice_cols(out, base + d, base + d + packed);
    std::vector<double> g(static_cast<std::size_t>(n) * d);
    rng.fill_normal(g);
    Tensor u = Tensor::constant(n, d, std::move(g));
    result.samples.push_back(ad::add(ad::tril_matvec(tri, u, d), mu));
  }
  return result;
}

// --- AdversaryNet ------------------------------------------------------------

AdversaryNet AdversaryNet::categorical(int release_dim,
                                       const std::vector<int>& hidden,
                                       int alphabet, Activation hidden_act,
                                       Rng& init) {
  Mlp body(release_dim, hidden, alphabet, hidden_act, Activation::None, init);
  return AdversaryNet(std::move(body), CategoricalPosteriorHead{alphabet});
}

AdversaryNet AdversaryNet::diagonal_gaussian(int release_dim,
                                             const std::vector<int>& hidden,
                                             int dim, Activation hidden_act,
                                             Rng& init) {
  Mlp body(release_dim, hidden, 2 * dim, hidden_act, Activation::None, init);
  return AdversaryNet(std::move(body), DiagonalGaussianHead{dim});
}

ad::Tensor AdversaryNet::posterior(const ad::Tensor& z) const {
  if (!is_categorical()) {
    throw ContractError("AdversaryNet::posterior requires a categorical head");
  }
  return ad::softmax(body_.forward(z));
}

ad::Tensor AdversaryNet::log_prob(const ad::Tensor& x,
                                  const ad::Tensor& z) const {
  if (x.rows() != z.rows()) {
    throw DimensionError("AdversaryNet::log_prob: batch sizes differ");
  }
  if (const auto* ch = std::get_if<CategoricalPosteriorHead>(&head_)) {
    if (x.cols() != ch->alphabet) {
      throw DimensionError("AdversaryNet::log_prob: one-hot width " +
                           std::to_string(x.cols()) + " != alphabet " +
                           std::to_string(ch->alphabet));
    }
    Tensor logp = ad::log_op(ad::clamp_min(posterior(z), kProbEps));
    return ad::row_sum(ad::mul(logp, x));
  }
  const auto& dg = std::get<DiagonalGaussianHead>(head_);
  if (x.cols() != dg.dim) {
    throw DimensionError("AdversaryNet::log_prob: x has " +
                         std::to_string(x.cols()) + " dims, head expects " +
                         std::to_string(dg.dim));
  }
  Tensor out = body_.forward(z);
  Tensor mu = ad::slice_cols(out, 0, dg.dim);
  Tensor logvar =
      ad::clamp(ad::slice_cols(out, dg.dim, 2 * dg.dim), -kLogVarBound,
                kLogVarBound);
  // sum_d [ -0.5 log(2 pi) - 0.5 logvar - (x - mu)^2 / (2 exp(logvar)) ]
  Tensor diff2 = ad::square(ad::sub(x, mu));
  Tensor inv_var = ad::exp_op(ad::scalar_mul(logvar, -1.0));
  Tensor quad = ad::scalar_mul(ad::mul(diff2, inv_var), -0.5);
  Tensor norm = ad::scalar_mul(
      ad::add(logvar, Tensor::scalar(std::log(2.0 * M_PI))), -0.5);
  return ad::row_sum(ad::add(quad, norm));
}

// --- DiscriminatorNet --------------------------------------------------------

DiscriminatorNet DiscriminatorNet::make(int input_dim, int hidden_width,
                                        Rng& init) {
  Mlp body(input_dim, {hidden_width}, 1, Activation::Tanh,
           Activation::Sigmoid, init);
  return DiscriminatorNet(std::move(body));
}

// --- Checkpoints -------------------------------------------------------------

namespace {

constexpr int kCheckpointVersion = 1;

json mlp_to_json(const Mlp& m) {
  json layers = json::array();
  for (std::size_t l = 0; l < m.layer_count(); ++l) {
    layers.push_back({{"in", m.weight(l).rows()},
                      {"out", m.weight(l).cols()},
                      {"activation", activation_name(m.activation(l))},
                      {"weight", m.weight(l).values()},
                      {"bias", m.bias(l).values()}});
  }
  return json{{"layers", layers}};
}

Mlp mlp_from_json(const json& j) {
  std::vector<Tensor> weights, biases;
  std::vector<Activation> acts;
  for (const json& layer : j.at("layers")) {
    const int in = layer.at("in").get<int>();
    const int out = layer.at("out").get<int>();
    weights.push_back(Tensor::parameter(
        in, out, layer.at("weight").get<std::vector<double>>()));
    biases.push_back(Tensor::parameter(
        1, out, layer.at("bias").get<std::vector<double>>()));
    acts.push_back(activation_from_name(layer.at("activation").get<std::string>()));
  }
  return Mlp::from_layers(std::move(weights), std::move(biases),
                          std::move(acts));
}

json head_to_json(const MechanismHead& head) {
  if (const auto* ua = std::get_if<UniversalApproximatorHead>(&head)) {
    return {{"kind", "universal"}, {"seed_dim", ua->seed_dim}};
  }
  if (const auto* gh = std::get_if<GaussianHead>(&head)) {
    return {{"kind", "gaussian"}, {"output_dim", gh->output_dim}};
  }
  if (const auto* gm = std::get_if<GmmHead>(&head)) {
    return {{"kind", "gmm"},
            {"components", gm->components},
            {"output_dim", gm->output_dim}};
  }
  const auto& ch = std::get<CategoricalHead>(head);
  return {{"kind", "categorical"}, {"alphabet", ch.alphabet}};
}

MechanismHead mechanism_head_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "universal")
    return UniversalApproximatorHead{j.at("seed_dim").get<int>()};
  if (kind == "gaussian") return GaussianHead{j.at("output_dim").get<int>()};
  if (kind == "gmm")
    return GmmHead{j.at("components").get<int>(), j.at("output_dim").get<int>()};
  if (kind == "categorical")
    return CategoricalHead{j.at("alphabet").get<int>()};
  throw FormatError("checkpoint: unknown mechanism head '" + kind + "'");
}

json adversary_head_to_json(const AdversaryHead& head) {
  if (const auto* ch = std::get_if<CategoricalPosteriorHead>(&head)) {
    return {{"kind", "categorical"}, {"alphabet", ch->alphabet}};
  }
  const auto& dg = std::get<DiagonalGaussianHead>(head);
  return {{"kind", "diagonal_gaussian"}, {"dim", dg.dim}};
}

AdversaryHead adversary_head_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "categorical")
    return CategoricalPosteriorHead{j.at("alphabet").get<int>()};
  if (kind == "diagonal_gaussian")
    return DiagonalGaussianHead{j.at("dim").get<int>()};
  throw FormatError("checkpoint: unknown adversary head '" + kind + "'");
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("checkpoint: cannot open '" + path + "'");
  out << j.dump();
  if (!out) throw FormatError("checkpoint: write failed for '" + path + "'");
}

json read_json(const std::string& path, const std::string& expected_kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("checkpoint: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw FormatError("checkpoint: parse error in '" + path + "': " + e.what());
  }
  if (j.value("version", -1) != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version in '" + path + "'");
  }
  if (j.value("kind", "") != expected_kind) {
    throw FormatError("checkpoint: '" + path + "' holds a '" +
                      j.value("kind", "?") + "', expected '" + expected_kind +
                      "'");
  }
  return j;
}

}  // namespace

void save_checkpoint(const MechanismNet& net, const std::string& path) {
  json j{{"version", kCheckpointVersion},
         {"kind", "mechanism"},
         {"head", head_to_json(net.head())},
         {"body", mlp_to_json(net.body())}};
  write_json(j, path);
}

void save_checkpoint(const AdversaryNet& net, const std::string& path) {
  json j{{"version", kCheckpointVersion},
         {"kind", "adversary"},
         {"head", adversary_head_to_json(net.head())},
         {"body", mlp_to_json(net.body())}};
  write_json(j, path);
}

void save_checkpoint(const DiscriminatorNet& net, const std::string& path) {
  json j{{"version", kCheckpointVersion},
         {"kind", "discriminator"},
         {"body", mlp_to_json(net.body())}};
  write_json(j, path);
}

MechanismNet load_mechanism_checkpoint(const std::string& path) {
  json j = read_json(path, "mechanism");
  return MechanismNet(mlp_from_json(j.at("body")),
                      mechanism_head_from_json(j.at("head")));
}

AdversaryNet load_adversary_checkpoint(const std::string& path) {
  json j = read_json(path, "adversary");
  return AdversaryNet(mlp_from_json(j.at("body")),
                      adversary_head_from_json(j.at("head")));
}

DiscriminatorNet load_discriminator_checkpoint(const std::string& path) {
  json j = read_json(path, "discriminator");
  return DiscriminatorNet(mlp_from_json(j.at("body")));
}

}  // namespace privmech

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

#ifndef PRIVMECH_ADAM_HPP
#define PRIVMECH_ADAM_HPP

#include <vector>

#include "privmech/tensor.hpp"

namespace privmech {

struct AdamConfig {
  double alpha = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected Adam over a fixed parameter set. step() descends; callers
// that ascend negate the loss before backward().
class Adam {
 public:
  explicit Adam(std::vector<ad::Tensor> params, AdamConfig cfg = {});

  // One update from the grads currently stored on the parameters.
  // Throws ContractError if any parameter has no grad.
  void step();

  void zero_grad();

  long step_count() const { return step_count_; }
  const AdamConfig& config() const { return cfg_; }
  const std::vector<double>& first_moment(std::size_t i) const {
    return m_[i];
  }
  const std::vector<double>& second_moment(std::size_t i) const {
    return v_[i];
  }

 private:
  std::vector<ad::Tensor> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  long step_count_ = 0;
  AdamConfig cfg_;
};

}  // namespace privmech

#endif  // PRIVMECH_ADAM_HPP

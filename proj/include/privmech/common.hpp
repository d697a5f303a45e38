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

#ifndef PRIVMECH_COMMON_HPP
#define PRIVMECH_COMMON_HPP

#include <stdexcept>
#include <string>

namespace privmech {

// Floor applied to probabilities and Bernoulli pixel values before any log.
inline constexpr double kProbEps = 1e-12;

// All information quantities in this library are in nats (natural log).

// Shape or dimensionality violation between tensors/networks/data.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Mathematical domain violation (log of nonpositive value, singular map).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Caller violated a documented precondition.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed external input (IDX file, CSV, config file).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid statistical model specification (e.g. non-PSD covariance).
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Training aborted on a non-finite loss; carries the failing iteration and
// the individual loss terms for diagnosis.
class TrainDivergedError : public std::runtime_error {
 public:
  TrainDivergedError(const std::string& what, int epoch, int batch)
      : std::runtime_error(what), epoch(epoch), batch(batch) {}
  int epoch;
  int batch;
};

}  // namespace privmech

#endif  // PRIVMECH_COMMON_HPP

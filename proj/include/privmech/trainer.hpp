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

#ifndef PRIVMECH_TRAINER_HPP
#define PRIVMECH_TRAINER_HPP

#include <functional>
#include <optional>
#include <vector>

#include "privmech/adam.hpp"
#include "privmech/datagen.hpp"
#include "privmech/estimators.hpp"
#include "privmech/losses.hpp"
#include "privmech/nets.hpp"

namespace privmech {

struct TrainConfig {
  int epochs = 250;
  int minibatch_size = 200;
  int adversary_steps = 5;  // inner maximization updates per mechanism step
  int k = 1;                // releases sampled per observation
  DistortionFn distortion{DistortionKind::SquaredError};
  BudgetMode budget = Lagrangian{1.0};
  double gamma = 0.0;  // discriminator weight; 0 disables the discriminator
  std::uint64_t seed = 0;  // shuffling and seed-noise stream
  AdamConfig adam{};
};

struct TrainResult {
  std::vector<double> epoch_mean_loss;
};

// Alternating minimax training. Per minibatch: sample k releases (skipped
// for finite alphabets, where the exact expectation is used), ascend the
// adversary adversary_steps times, ascend the discriminator when gamma > 0,
// then recompute the objective with fresh releases and descend the
// mechanism. Deterministic given cfg.seed. Throws TrainDivergedError on a
// non-finite loss.
TrainResult train(MechanismNet& mechanism, AdversaryNet& adversary,
                  DiscriminatorNet* discriminator, const Dataset& data,
                  const TrainConfig& cfg);

// Three-network variant for the mutual-information utility objective
//   log Q_X(x|z) - lambda log Q_Y(y|z):
// the privacy adversary ascends, the mechanism and the utility decoder
// descend. lambda is taken from cfg.budget (Lagrangian).
TrainResult train_mi_utility(MechanismNet& mechanism,
                             AdversaryNet& privacy_adversary,
                             AdversaryNet& utility_decoder,
                             const Dataset& data, const TrainConfig& cfg);

// --- Sweeps -------------------------------------------------------------------

struct SweepPointSetup {
  MechanismNet mechanism;
  AdversaryNet adversary;
  std::optional<DiscriminatorNet> discriminator;
  TrainConfig cfg;
};

// Builds fresh networks and a config for one grid value.
using PointFactory = std::function<SweepPointSetup(double grid_value, Rng& init)>;

// Evaluates a trained point on held-out data.
using PointEvaluator = std::function<TradeoffPoint(
    double grid_value, const MechanismNet& mechanism,
    const AdversaryNet& adversary, const Dataset& test, Rng& eval)>;

struct SweepPointOutcome {
  TradeoffPoint point;
  std::vector<double> epoch_mean_loss;
};

// One full training run per grid value, each on a freshly sampled dataset
// (n_train + n_test draws) with networks from `factory`, evaluated by
// `evaluate`. Failed points (diverged training) are flagged and the sweep
// continues. Points run on `workers` threads with disjoint seed streams;
// results are returned in grid order and do not depend on the worker count.
std::vector<SweepPointOutcome> sweep(const JointModel& model,
                                     const std::vector<double>& grid,
                                     int n_train, int n_test,
                                     const PointFactory& factory,
                                     const PointEvaluator& evaluate,
                                     std::uint64_t master_seed,
                                     int workers = 1);

// Seed-stream tags used to derive per-run substreams from a master seed.
namespace seed_tag {
inline constexpr std::uint64_t kTrainData = 1;
inline constexpr std::uint64_t kTestData = 2;
inline constexpr std::uint64_t kInit = 3;
inline constexpr std::uint64_t kTrainLoop = 4;
inline constexpr std::uint64_t kEval = 5;
}  // namespace seed_tag

}  // namespace privmech

#endif  // PRIVMECH_TRAINER_HPP

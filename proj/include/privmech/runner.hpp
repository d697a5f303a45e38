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

#ifndef PRIVMECH_RUNNER_HPP
#define PRIVMECH_RUNNER_HPP

#include <optional>
#include <string>
#include <vector>

#include "privmech/estimators.hpp"
#include "privmech/trainer.hpp"

namespace privmech {

// Experiment roster. Each id reproduces one tradeoff study at desk scale;
// oracle-only evaluates a closed-form curve without training.
enum class ExperimentId {
  ScalarUd,
  ScalarFd,
  VectorUd,
  RateDistortion,
  SymmetricPair,
  MnistToy,
  OracleOnly,
};

std::string experiment_name(ExperimentId id);
ExperimentId experiment_from_name(const std::string& name);

struct ExperimentConfig {
  ExperimentId id = ExperimentId::OracleOnly;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  int workers = 1;

  // Grid of swept values: distortion budgets, or lambdas for mnist-toy.
  std::vector<double> grid;

  // Training setup.
  int epochs = 250;
  int minibatch_size = 200;
  int adversary_steps = 5;
  int k = 1;
  double lambda = 10.0;
  double gamma = 0.0;
  bool penalty_budget = true;  // false: Lagrangian with fixed lambda
  int n_train = 8000;
  int n_test = 4000;
  int hidden_width = 5;
  int seed_dim = 1;

  // Model parameters.
  double rho = 0.85;
  double var_x = 1.0;
  double var_y = 1.0;
  std::vector<double> rho_vec;
  std::vector<double> variances;
  int m = 4;
  double p = 0.25;
  Observation observation = Observation::UsefulOnly;
  int release_alphabet = 0;  // defaults to m

  // mnist-toy inputs; synthetic digits are generated when paths are empty.
  std::string idx_train_images, idx_train_labels;
  std::string idx_test_images, idx_test_labels;

  // First N test releases dumped to releases.csv (0 disables).
  int dump_releases = 0;

  // oracle-only: which curve to evaluate.
  ExperimentId curve = ExperimentId::ScalarUd;
};

// Paper-default configuration for an experiment id.
ExperimentConfig default_config(ExperimentId id);

// Parse `key = value` lines ('#' comments). Unknown or malformed keys raise
// FormatError naming the line.
ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& origin);

struct RunArtifacts {
  std::vector<TradeoffPoint> points;
  std::string tradeoff_csv;  // written file paths
  std::string history_csv;
  std::string releases_csv;  // empty unless a release dump was requested
  bool any_failed = false;
};

// Execute the configured experiment and write CSV artifacts under
// cfg.out_dir. Deterministic in cfg (byte-identical files for equal seeds).
RunArtifacts run_experiment(const ExperimentConfig& cfg);

// The closed-form curve value for a grid point of the configured model;
// NaN when no oracle exists (mnist-toy).
double oracle_value(const ExperimentConfig& cfg, double grid_value);

// --- CSV ----------------------------------------------------------------------

inline constexpr const char* kTradeoffHeader =
    "delta_target,empirical_distortion,leakage_nats,oracle_leakage_nats,"
    "adversary_accuracy,seed";

void write_tradeoff_csv(const std::string& path,
                        const std::vector<TradeoffPoint>& points);

struct HistoryRow {
  double grid_value;
  int epoch;
  double mean_loss;
};
void write_history_csv(const std::string& path,
                       const std::vector<HistoryRow>& rows);

// Fixed shortest-round-trip formatting shared by all CSV writers.
std::string format_double(double v);

// --- Compare -------------------------------------------------------------------

struct CompareRow {
  double delta_target;
  double leakage_nats;
  double oracle_leakage_nats;
  double gap;  // leakage - oracle
};

struct CompareReport {
  std::vector<CompareRow> rows;   // rows with a finite oracle value
  int skipped = 0;                // rows without a finite oracle value
  double max_abs_gap = 0.0;
  double mean_abs_gap = 0.0;
  double tolerance = 0.0;
  bool pass = true;
  std::vector<double> failing_deltas;
};

// Reads a tradeoff CSV and reports per-point oracle gaps against the
// tolerance. Missing or misnamed columns raise FormatError.
CompareReport compare_tradeoff_csv(const std::string& path, double tolerance);

std::string render_compare_report(const CompareReport& report);

}  // namespace privmech

#endif  // PRIVMECH_RUNNER_HPP

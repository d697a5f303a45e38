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

#ifndef PRIVMECH_ESTIMATORS_HPP
#define PRIVMECH_ESTIMATORS_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "privmech/losses.hpp"
#include "privmech/nets.hpp"

namespace privmech {

enum class LeakageEstimator { GaussianApprox, ExactDiscrete, VariationalBound };

std::string estimator_name(LeakageEstimator e);

// Degenerate conditional covariance is reported as this capped sentinel.
inline constexpr double kCappedLeakageNats = 50.0;

struct MiEstimate {
  double nats = 0.0;
  bool capped = false;
};

// Mutual information under a joint Gaussian approximation:
//   0.5 log( det(Sx) / det(Sx - Sxz Sz^+ Sxz^T) )
// with empirical covariances and a pseudoinverse of Sz (relative singular
// value cutoff 1e-10). Underestimates the true value for jointly Gaussian
// data; clamped at 0. Rows of x and z are paired samples.
MiEstimate gaussian_mi_estimate(const Eigen::MatrixXd& x,
                                const Eigen::MatrixXd& z);

// Exact mutual information in nats of a (possibly unnormalized) nonnegative
// joint table over X x Z, with 0 log 0 = 0.
double exact_discrete_mi(const Eigen::MatrixXd& joint);

// h(X) + mean_i log Q(x_i|z_i): the adversary-based variational lower bound,
// reported raw (may be negative). Labels overload for categorical heads.
double variational_mi_lower_bound(const AdversaryNet& adversary,
                                  const std::vector<int>& x_labels,
                                  const Eigen::MatrixXd& z, double h_x);
double variational_mi_lower_bound(const AdversaryNet& adversary,
                                  const Eigen::MatrixXd& x,
                                  const Eigen::MatrixXd& z, double h_x);

// Exact form of the same bound on a finite alphabet: h(X) plus the exact
// expectation of log q(x|z) under the joint. `q` rows are q(.|z), |Z| x |X|.
double variational_mi_bound_exact(const Eigen::MatrixXd& joint_xz,
                                  const Eigen::MatrixXd& q);

double empirical_distortion(const Eigen::MatrixXd& y, const Eigen::MatrixXd& z,
                            const DistortionFn& dist);

// Fraction of pairs where argmax_x Q(x|z_i) equals x_i; ties break to the
// lowest index.
double adversary_accuracy(const AdversaryNet& adversary,
                          const std::vector<int>& x_labels,
                          const Eigen::MatrixXd& z);

// One privacy/utility operating point with provenance.
struct TradeoffPoint {
  double grid_value = 0.0;            // swept delta (or lambda) target
  double empirical_distortion = 0.0;
  double leakage_nats = 0.0;          // >= 0, or the capped sentinel
  double oracle_leakage_nats =
      std::numeric_limits<double>::quiet_NaN();
  LeakageEstimator estimator = LeakageEstimator::GaussianApprox;
  double adversary_accuracy = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 0;
  double lambda = 0.0;
  std::string model_id;
  bool leakage_capped = false;
  bool failed = false;
  std::string error;
};

// --- Tensor/Eigen bridges ----------------------------------------------------

ad::Tensor tensor_from_matrix(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_tensor(const ad::Tensor& t);
ad::Tensor one_hot(const std::vector<int>& labels, int alphabet);

}  // namespace privmech

#endif  // PRIVMECH_ESTIMATORS_HPP

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

#ifndef PRIVMECH_ORACLE_HPP
#define PRIVMECH_ORACLE_HPP

#include <Eigen/Dense>
#include <vector>

namespace privmech {

// Analytically optimal leakage-vs-distortion curves for known data models,
// all in nats. These are the exact references the trained mechanisms are
// judged against.

// W = Y (useful data only) or W = (X, Y); Identity means W = X = Y.
enum class Observation { UsefulOnly, FullData, Identity };

struct ScalarGaussParams {
  double var_x = 1.0;
  double var_y = 1.0;
  double rho = 0.0;  // correlation coefficient, |rho| <= 1
};

// Normalized cross-covariance singular values of the reparameterized model,
// plus the scale c with V_P^T Sigma_Y V_P = c I.
struct VectorGaussParams {
  std::vector<double> rho;  // each in (0, 1]
  double c = 1.0;
};

struct SymmetricPairParams {
  int m = 2;       // alphabet size
  double p = 0.0;  // P(Y != X); off-diagonal symbols share mass p/(m-1)
};

// Optimal scalar mechanism z = gain_y * y + N(0, noise_var).
struct ScalarUdOptimum {
  double leakage_nats = 0.0;
  double gain_y = 0.0;
  double noise_var = 0.0;
};

// min I(X;Z) s.t. E(Y-Z)^2 <= delta with W = Y:
//   leakage = max{0, 0.5 log(1 / (1 - rho^2 + rho^2 delta / var_y))},
//   attained by z = (1 - delta/var_y) y + N(0, delta (1 - delta/var_y)),
//   and z = 0 when delta >= var_y.
ScalarUdOptimum scalar_ud_optimum(const ScalarGaussParams& params,
                                  double delta);

// Optimal full-data mechanism z = coeff_y * y + coeff_res * (x - rho y),
// unit variances assumed.
struct ScalarFdOptimum {
  double leakage_nats = 0.0;
  double coeff_y = 0.0;
  double coeff_res = 0.0;
};

// min I(X;Z) s.t. E(Y-Z)^2 <= delta with W = (X, Y), rho in [0, 1]:
//   zero leakage for delta >= rho^2, otherwise
//   0.5 log(1 / (1 - (sqrt(rho^2 (1-delta)) - sqrt((1-rho^2) delta))^2)).
ScalarFdOptimum scalar_fd_optimum(double rho, double delta);

struct WaterfillResult {
  double leakage_nats = 0.0;
  std::vector<double> allocation;  // per-component distortion
  double level = 0.0;              // common water level
};

// Modified water-filling: per-component delta_i' = max{0, min{1,
// t - (rho_i^-2 - 1)}} with sum delta_i' = delta / c, and leakage
// sum max{0, -0.5 log(1 - rho_i^2 + rho_i^2 delta_i')}.
WaterfillResult vector_ud_optimum(const VectorGaussParams& params,
                                  double delta);

// Shannon rate-distortion for independent Gaussian components: D_j =
// min(sigma_j^2, w) with sum D_j = D, R = sum max{0, 0.5 log(sigma_j^2 /
// D_j)}. D beyond sum sigma_j^2 gives R = 0 with full per-component
// distortion and slack.
WaterfillResult rate_distortion(const std::vector<double>& variances,
                                double d_total);

// I(X;Y) of the symmetric pair distribution:
//   r_m(p) = log m - p log(m-1) - h2(p).
double symmetric_pair_mi(const SymmetricPairParams& params);
double binary_entropy(double p);

// Optimal leakage at error-probability budget delta in [0, 1].
// FullData:   r_m(p + delta) while delta <= 1 - 1/m - p,
//             r_m(p - delta) while delta <= p - (1 - 1/m), else 0.
// UsefulOnly: r_m(p + delta (1 - p m/(m-1))) for delta < 1 - 1/m, else 0.
double symmetric_pair_curve(const SymmetricPairParams& params, double delta,
                            Observation observation);

// Reduce a general jointly Gaussian (Sigma_X, Sigma_Y, Sigma_XY) model to
// VectorGaussParams via the SVD of Sigma_X^-1/2 Sigma_XY Sigma_Y^-1/2.
// Rejects models where V_P^T Sigma_Y V_P deviates from c I by more than
// 1e-8, and models with non-positive singular values.
VectorGaussParams vector_params_from_covariances(
    const Eigen::MatrixXd& sigma_x, const Eigen::MatrixXd& sigma_y,
    const Eigen::MatrixXd& sigma_xy);

}  // namespace privmech

#endif  // PRIVMECH_ORACLE_HPP

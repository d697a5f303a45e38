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

#include "privmech/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "privmech/common.hpp"

namespace privmech {

namespace {

constexpr int kBisectionIterations = 200;
constexpr double kBisectionTolerance = 1e-10;

// Monotone increasing allocation total as a function of the level; solves
// total(level) = target by bisection on [lo, hi] until the allocation sum
// residual is inside kBisectionTolerance.
template <typename TotalFn>
double bisect_level(double lo, double hi, double target, TotalFn total) {
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < kBisectionIterations; ++it) {
    mid = 0.5 * (lo + hi);
    const double value = total(mid);
    if (std::abs(value - target) <= kBisectionTolerance) break;
    if (value < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return mid;
}

}  // namespace

ScalarUdOptimum scalar_ud_optimum(const ScalarGaussParams& params,
                                  double delta) {
  if (delta < 0.0) {
    throw ContractError("scalar_ud_optimum: delta must be nonnegative");
  }
  if (!(params.var_x > 0.0) || !(params.var_y > 0.0) ||
      std::abs(params.rho) > 1.0) {
    throw ModelError("scalar_ud_optimum: invalid Gaussian parameters");
  }
  ScalarUdOptimum out;
  if (delta >= params.var_y) {
    return out;  // z = 0 releases nothing
  }
  const double ratio = delta / params.var_y;
  out.gain_y = 1.0 - ratio;
  out.noise_var = delta * (1.0 - ratio);
  const double rho2 = params.rho * params.rho;
  out.leakage_nats =
      std::max(0.0, 0.5 * std::log(1.0 / (1.0 - rho2 + rho2 * ratio)));
  return out;
}

ScalarFdOptimum scalar_fd_optimum(double rho, double delta) {
  if (delta < 0.0) {
    throw ContractError("scalar_fd_optimum: delta must be nonnegative");
  }
  if (rho < 0.0 || rho > 1.0) {
    throw ContractError("scalar_fd_optimum: rho must lie in [0, 1]");
  }
  const double rho2 = rho * rho;
  ScalarFdOptimum out;
  if (delta >= rho2) {
    // z = y - rho x is feasible and independent of x.
    out.coeff_y = 1.0 - rho2;
    out.coeff_res = -rho;
    return out;
  }
  if (rho == 1.0) {
    throw DomainError("scalar_fd_optimum: rho = 1 with delta < 1 is singular");
  }
  out.coeff_y = 1.0 - delta;
  out.coeff_res = -std::sqrt(delta * (1.0 - delta) / (1.0 - rho2));
  const double root = std::sqrt(rho2 * (1.0 - delta)) -
                      std::sqrt((1.0 - rho2) * delta);
  out.leakage_nats = 0.5 * std::log(1.0 / (1.0 - root * root));
  return out;
}

WaterfillResult vector_ud_optimum(const VectorGaussParams& params,
                                  double delta) {
  if (delta < 0.0) {
    throw ContractError("vector_ud_optimum: delta must be nonnegative");
  }
  if (!(params.c > 0.0) || params.rho.empty()) {
    throw ModelError("vector_ud_optimum: invalid parameters");
  }
  for (double r : params.rho) {
    if (!(r > 0.0) || r > 1.0) {
      throw ModelError("vector_ud_optimum: singular values must be in (0, 1]");
    }
  }
  const std::size_t k = params.rho.size();
  std::vector<double> offsets(k);  // rho_i^-2 - 1
  for (std::size_t i = 0; i < k; ++i) {
    offsets[i] = 1.0 / (params.rho[i] * params.rho[i]) - 1.0;
  }

  WaterfillResult out;
  out.allocation.assign(k, 0.0);
  const double target = delta / params.c;
  if (target >= static_cast<double>(k)) {
    // Budget exceeds what full per-component distortion can use.
    out.allocation.assign(k, 1.0);
    out.level = *std::max_element(offsets.begin(), offsets.end()) + 1.0;
    return out;
  }

  const auto alloc_at = [&](double t, std::vector<double>* alloc) {
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double a = std::max(0.0, std::min(1.0, t - offsets[i]));
      if (alloc) (*alloc)[i] = a;
      total += a;
    }
    return total;
  };

  const double hi = *std::max_element(offsets.begin(), offsets.end()) + 1.0;
  out.level = bisect_level(0.0, hi, target,
                           [&](double t) { return alloc_at(t, nullptr); });
  alloc_at(out.level, &out.allocation);

  for (std::size_t i = 0; i < k; ++i) {
    const double rho2 = params.rho[i] * params.rho[i];
    const double term =
        -0.5 * std::log(1.0 - rho2 + rho2 * out.allocation[i]);
    out.leakage_nats += std::max(0.0, term);
  }
  return out;
}

WaterfillResult rate_distortion(const std::vector<double>& variances,
                                double d_total) {
  if (d_total < 0.0) {
    throw ContractError("rate_distortion: distortion must be nonnegative");
  }
  if (variances.empty()) {
    throw ModelError("rate_distortion: no components");
  }
  for (double v : variances) {
    if (!(v > 0.0)) {
      throw ModelError("rate_distortion: variances must be positive");
    }
  }
  WaterfillResult out;
  const double total_var =
      std::accumulate(variances.begin(), variances.end(), 0.0);
  if (d_total >= total_var) {
    out.allocation = variances;
    out.level = *std::max_element(variances.begin(), variances.end());
    return out;
  }

  const auto alloc_total = [&](double w) {
    double total = 0.0;
    for (double v : variances) total += std::min(v, w);
    return total;
  };
  const double hi = *std::max_element(variances.begin(), variances.end());
  out.level = bisect_level(0.0, hi, d_total, alloc_total);

  out.allocation.resize(variances.size());
  for (std::size_t j = 0; j < variances.size(); ++j) {
    out.allocation[j] = std::min(variances[j], out.level);
    out.leakage_nats +=
        std::max(0.0, 0.5 * std::log(variances[j] / out.allocation[j]));
  }
  return out;
}

double binary_entropy(double p) {
  if (p < 0.0 || p > 1.0) {
    throw ContractError("binary_entropy: p outside [0, 1]");
  }
  double h = 0.0;
  if (p > 0.0) h -= p * std::log(p);
  if (p < 1.0) h -= (1.0 - p) * std::log(1.0 - p);
  return h;
}

double symmetric_pair_mi(const SymmetricPairParams& params) {
  if (params.m < 2 || params.p < 0.0 || params.p > 1.0) {
    throw ModelError("symmetric_pair_mi: need m >= 2 and p in [0, 1]");
  }
  return std::log(static_cast<double>(params.m)) -
         params.p * std::log(static_cast<double>(params.m - 1)) -
         binary_entropy(params.p);
}

double symmetric_pair_curve(const SymmetricPairParams& params, double delta,
                            Observation observation) {
  if (delta < 0.0 || delta > 1.0) {
    throw ContractError("symmetric_pair_curve: delta outside [0, 1]");
  }
  const double m = static_cast<double>(params.m);
  const double p = params.p;
  SymmetricPairParams shifted = params;
  switch (observation) {
    case Observation::FullData: {
      if (delta <= 1.0 - 1.0 / m - p) {
        shifted.p = p + delta;
        return symmetric_pair_mi(shifted);
      }
      if (delta <= p - (1.0 - 1.0 / m)) {
        shifted.p = p - delta;
        return symmetric_pair_mi(shifted);
      }
      return 0.0;
    }
    case Observation::UsefulOnly: {
      if (delta < 1.0 - 1.0 / m) {
        shifted.p = p + delta * (1.0 - p * m / (m - 1.0));
        return symmetric_pair_mi(shifted);
      }
      return 0.0;
    }
    case Observation::Identity:
      throw ContractError(
          "symmetric_pair_curve: no closed form for the identity observation");
  }
  throw ContractError("symmetric_pair_curve: unknown observation");
}

VectorGaussParams vector_params_from_covariances(
    const Eigen::MatrixXd& sigma_x, const Eigen::MatrixXd& sigma_y,
    const Eigen::MatrixXd& sigma_xy) {
  if (sigma_x.rows() != sigma_x.cols() || sigma_y.rows() != sigma_y.cols() ||
      sigma_xy.rows() != sigma_x.rows() || sigma_xy.cols() != sigma_y.rows()) {
    throw DimensionError("vector_params_from_covariances: shape mismatch");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esx(sigma_x);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esy(sigma_y);
  if (esx.eigenvalues().minCoeff() <= 0.0 ||
      esy.eigenvalues().minCoeff() <= 0.0) {
    throw ModelError(
        "vector_params_from_covariances: covariances must be positive "
        "definite");
  }
  Eigen::MatrixXd p = esx.operatorInverseSqrt() * sigma_xy *
                      esy.operatorInverseSqrt();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      p, Eigen::ComputeThinU | Eigen::ComputeThinV);

  Eigen::MatrixXd v = svd.matrixV();
  Eigen::MatrixXd vsv = v.transpose() * sigma_y * v;
  const double c = vsv.trace() / static_cast<double>(vsv.rows());
  Eigen::MatrixXd residual =
      vsv - c * Eigen::MatrixXd::Identity(vsv.rows(), vsv.cols());
  if (residual.cwiseAbs().maxCoeff() > 1e-8) {
    throw ModelError(
        "vector_params_from_covariances: V_P^T Sigma_Y V_P is not a scaled "
        "identity; the closed form does not apply");
  }

  VectorGaussParams out;
  out.c = c;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
    const double s = svd.singularValues()[i];
    if (!(s > 0.0)) {
      throw ModelError(
          "vector_params_from_covariances: singular values must be strictly "
          "positive");
    }
    out.rho.push_back(std::min(1.0, s));
  }
  return out;
}

}  // namespace privmech

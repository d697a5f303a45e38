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

#ifndef PRIVMECH_TESTS_ORACLE_REFERENCE_HPP
#define PRIVMECH_TESTS_ORACLE_REFERENCE_HPP

// Independent reference solutions for the closed-form tradeoff curves.
// These deliberately avoid the formulas under test: scalar curves come from
// refined searches over linear mechanisms on the distortion boundary,
// waterfilling curves from exhaustive KKT pattern enumeration, and the
// symmetric-pair curve from the exact mutual information of the composed
// channel table.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "privmech/estimators.hpp"
#include "privmech/oracle.hpp"

namespace privmech::testing {

// Leakage of the linear release z = a y + N(0, v) against x, for the scalar
// model, from plain covariance algebra.
inline double linear_ud_leakage(const ScalarGaussParams& p, double a,
                                double v) {
  const double var_z = a * a * p.var_y + v;
  if (var_z <= 0.0) return 0.0;
  const double cov_xz = p.rho * std::sqrt(p.var_x * p.var_y) * a;
  const double r2 = cov_xz * cov_xz / (p.var_x * var_z);
  if (r2 >= 1.0) return std::numeric_limits<double>::infinity();
  return std::max(0.0, -0.5 * std::log(1.0 - r2));
}

// Best leakage over linear mechanisms with the distortion budget active,
// found by three rounds of grid refinement over the gain.
inline double scalar_ud_reference(const ScalarGaussParams& p, double delta) {
  if (delta >= p.var_y) return 0.0;
  const double reach = std::sqrt(delta / p.var_y);
  double lo = 1.0 - reach, hi = 1.0;
  double best = std::numeric_limits<double>::infinity();
  double best_a = lo;
  for (int round = 0; round < 4; ++round) {
    const int steps = 4000;
    for (int i = 0; i <= steps; ++i) {
      const double a = lo + (hi - lo) * i / steps;
      const double v = delta - (1.0 - a) * (1.0 - a) * p.var_y;
      if (v < 0.0) continue;
      const double leak = linear_ud_leakage(p, a, v);
      if (leak < best) {
        best = leak;
        best_a = a;
      }
    }
    const double span = (hi - lo) / steps * 8.0;
    lo = best_a - span;
    hi = best_a + span;
  }
  return best;
}

// Leakage of z = alpha x + beta y for the unit-variance full-data model.
inline double linear_fd_leakage(double rho, double alpha, double beta) {
  const double var_z =
      alpha * alpha + beta * beta + 2.0 * rho * alpha * beta;
  if (var_z <= 1e-300) return 0.0;
  const double cov_xz = alpha + rho * beta;
  const double r2 = cov_xz * cov_xz / var_z;
  if (r2 >= 1.0) return std::numeric_limits<double>::infinity();
  return std::max(0.0, -0.5 * std::log(1.0 - r2));
}

// Best leakage over deterministic linear full-data mechanisms with the
// distortion constraint active, refined over the coefficient on x with both
// roots of the boundary quadratic for the coefficient on y.
inline double scalar_fd_reference(double rho, double delta) {
  if (delta >= rho * rho) return 0.0;
  const double reach = std::sqrt(delta / (1.0 - rho * rho));
  double lo = -reach, hi = reach;
  double best = std::numeric_limits<double>::infinity();
  double best_alpha = 0.0;
  for (int round = 0; round < 4; ++round) {
    const int steps = 4000;
    for (int i = 0; i <= steps; ++i) {
      const double alpha = lo + (hi - lo) * i / steps;
      const double disc =
          rho * rho * alpha * alpha - alpha * alpha + delta;
      if (disc < 0.0) continue;
      for (const double sign : {-1.0, 1.0}) {
        const double u = rho * alpha + sign * std::sqrt(disc);  // u = 1-beta
        const double leak = linear_fd_leakage(rho, alpha, 1.0 - u);
        if (leak < best) {
          best = leak;
          best_alpha = alpha;
        }
      }
    }
    const double span = (hi - lo) / steps * 8.0;
    lo = std::max(-reach, best_alpha - span);
    hi = std::min(reach, best_alpha + span);
  }
  return best;
}

// Exhaustive KKT pattern enumeration for the per-component distortion
// allocation: every component is zero, interior at the common level, or
// capped at one. Returns the best objective over all consistent patterns.
inline double vector_ud_reference(const VectorGaussParams& params,
                                  double delta) {
  const std::size_t k = params.rho.size();
  std::vector<double> offset(k);
  for (std::size_t i = 0; i < k; ++i) {
    offset[i] = 1.0 / (params.rho[i] * params.rho[i]) - 1.0;
  }
  const double target = delta / params.c;

  const auto objective = [&](const std::vector<double>& alloc) {
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double r2 = params.rho[i] * params.rho[i];
      total += std::max(0.0, -0.5 * std::log(1.0 - r2 + r2 * alloc[i]));
    }
    return total;
  };

  double best = std::numeric_limits<double>::infinity();
  std::vector<int> pattern(k, 0);  // 0 = zero, 1 = interior, 2 = capped
  const std::size_t total_patterns = static_cast<std::size_t>(std::pow(3, k));
  for (std::size_t code = 0; code < total_patterns; ++code) {
    std::size_t c = code;
    int interior = 0, capped = 0;
    double interior_offsets = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      pattern[i] = static_cast<int>(c % 3);
      c /= 3;
      if (pattern[i] == 1) {
        ++interior;
        interior_offsets += offset[i];
      } else if (pattern[i] == 2) {
        ++capped;
      }
    }
    double level;
    if (interior > 0) {
      level = (target - capped + interior_offsets) / interior;
    } else {
      if (std::abs(capped - target) > 1e-12) continue;
      level = 0.0;
    }
    bool ok = true;
    std::vector<double> alloc(k);
    for (std::size_t i = 0; i < k && ok; ++i) {
      switch (pattern[i]) {
        case 0:
          alloc[i] = 0.0;
          if (interior > 0 && level - offset[i] > 1e-12) ok = false;
          break;
        case 1:
          alloc[i] = level - offset[i];
          if (alloc[i] < -1e-12 || alloc[i] > 1.0 + 1e-12) ok = false;
          alloc[i] = std::min(1.0, std::max(0.0, alloc[i]));
          break;
        case 2:
          alloc[i] = 1.0;
          if (interior > 0 && level - offset[i] < 1.0 - 1e-12) ok = false;
          break;
      }
    }
    if (!ok) continue;
    double sum = 0.0;
    for (double a : alloc) sum += a;
    if (std::abs(sum - target) > 1e-9) continue;
    best = std::min(best, objective(alloc));
  }
  if (target >= static_cast<double>(k)) best = std::min(best, 0.0);
  return best;
}

// Clamp-pattern enumeration for the reverse waterfilling rate.
inline double rate_distortion_reference(const std::vector<double>& variances,
                                        double d_total) {
  const std::size_t k = variances.size();
  double total_var = 0.0;
  for (double v : variances) total_var += v;
  if (d_total >= total_var) return 0.0;

  double best = std::numeric_limits<double>::infinity();
  for (std::size_t mask = 0; mask < (1u << k); ++mask) {
    double clamped_var = 0.0;
    int active = 0;
    for (std::size_t j = 0; j < k; ++j) {
      if (mask & (1u << j)) {
        clamped_var += variances[j];
      } else {
        ++active;
      }
    }
    if (active == 0) continue;
    const double level = (d_total - clamped_var) / active;
    if (level <= 0.0) continue;
    bool ok = true;
    double rate = 0.0;
    for (std::size_t j = 0; j < k && ok; ++j) {
      if (mask & (1u << j)) {
        if (variances[j] > level + 1e-12) ok = false;  // should stay active
      } else {
        if (level > variances[j] + 1e-12) ok = false;  // should be clamped
        rate += std::max(0.0, 0.5 * std::log(variances[j] / level));
      }
    }
    if (ok) best = std::min(best, rate);
  }
  return best;
}

// Symmetric channel composition: x -- symmetric(p) -- y -- symmetric(q) -- z,
// evaluated as an exact joint table.
inline Eigen::MatrixXd symmetric_pair_joint(int m, double p) {
  Eigen::MatrixXd joint(m, m);
  const double off = p / static_cast<double>(m - 1);
  for (int x = 0; x < m; ++x)
    for (int y = 0; y < m; ++y)
      joint(x, y) = (x == y ? 1.0 - p : off) / static_cast<double>(m);
  return joint;
}

// r_m(p) evaluated as the mutual information of its defining table.
inline double symmetric_pair_mi_reference(int m, double p) {
  return exact_discrete_mi(symmetric_pair_joint(m, p));
}

// Useful-data-only reference: the exact mutual information of the optimal
// release channel (a symmetric channel with flip probability delta applied
// to y).
inline double symmetric_pair_ud_reference(int m, double p, double delta) {
  if (delta >= 1.0 - 1.0 / m) return 0.0;
  Eigen::MatrixXd joint_xy = symmetric_pair_joint(m, p);
  Eigen::MatrixXd channel(m, m);
  const double off = delta / static_cast<double>(m - 1);
  for (int y = 0; y < m; ++y)
    for (int z = 0; z < m; ++z) channel(y, z) = (y == z ? 1.0 - delta : off);
  Eigen::MatrixXd joint_xz = joint_xy * channel;
  return exact_discrete_mi(joint_xz);
}

}  // namespace privmech::testing

#endif  // PRIVMECH_TESTS_ORACLE_REFERENCE_HPP

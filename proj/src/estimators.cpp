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

#include "privmech/estimators.hpp"

#include <cmath>

#include "privmech/common.hpp"

namespace privmech {

namespace {

constexpr double kPinvCutoff = 1e-10;   // relative singular value cutoff
constexpr double kDegenerateDet = 1e-300;

Eigen::MatrixXd centered(const Eigen::MatrixXd& a) {
  return a.rowwise() - a.colwise().mean();
}

// Moore-Penrose pseudoinverse of a symmetric PSD matrix.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double cutoff = kPinvCutoff * std::max(ev.cwiseAbs().maxCoeff(), 0.0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] > cutoff) inv[i] = 1.0 / ev[i];
  }
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

std::string estimator_name(LeakageEstimator e) {
  switch (e) {
    case LeakageEstimator::GaussianApprox:
      return "gaussian_approx";
    case LeakageEstimator::ExactDiscrete:
      return "exact_discrete";
    case LeakageEstimator::VariationalBound:
      return "variational_bound";
  }
  return "unknown";
}

MiEstimate gaussian_mi_estimate(const Eigen::MatrixXd& x,
                                const Eigen::MatrixXd& z) {
  const Eigen::Index n = x.rows();
  if (n != z.rows()) {
    throw DimensionError("gaussian_mi_estimate: x and z must be paired");
  }
  if (n < 2) {
    throw ContractError("gaussian_mi_estimate: need at least 2 samples");
  }
  const double denom = static_cast<double>(n - 1);
  Eigen::MatrixXd xc = centered(x);
  Eigen::MatrixXd zc = centered(z);
  Eigen::MatrixXd sx = (xc.transpose() * xc) / denom;
  Eigen::MatrixXd sz = (zc.transpose() * zc) / denom;
  Eigen::MatrixXd sxz = (xc.transpose() * zc) / denom;

  Eigen::MatrixXd cond =
      sx - sxz * pseudo_inverse(sz) * sxz.transpose();

  const double det_x = sx.partialPivLu().determinant();
  const double det_cond = cond.partialPivLu().determinant();
  if (!(det_cond > kDegenerateDet) || !std::isfinite(det_cond)) {
    return {kCappedLeakageNats, true};
  }
  if (!(det_x > 0.0)) {
    // Degenerate X has no information to leak.
    return {0.0, false};
  }
  const double nats = 0.5 * std::log(det_x / det_cond);
  if (!std::isfinite(nats)) return {kCappedLeakageNats, true};
  if (nats >= kCappedLeakageNats) return {kCappedLeakageNats, true};
  return {std::max(0.0, nats), false};
}

double exact_discrete_mi(const Eigen::MatrixXd& joint) {
  const double total = joint.sum();
  if (joint.rows() == 0 || joint.cols() == 0 || !(total > 0.0)) {
    throw ContractError("exact_discrete_mi: table is empty or all zero");
  }
  if ((joint.array() < 0.0).any()) {
    throw ContractError("exact_discrete_mi: negative entry in joint table");
  }
  Eigen::MatrixXd p = joint / total;
  Eigen::VectorXd px = p.rowwise().sum();
  Eigen::VectorXd pz = p.colwise().sum();
  double mi = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      const double pij = p(i, j);
      if (pij > 0.0) mi += pij * std::log(pij / (px[i] * pz[j]));
    }
  }
  return std::max(0.0, mi);
}

double variational_mi_lower_bound(const AdversaryNet& adversary,
                                  const std::vector<int>& x_labels,
                                  const Eigen::MatrixXd& z, double h_x) {
  if (x_labels.size() != static_cast<std::size_t>(z.rows())) {
    throw DimensionError("variational_mi_lower_bound: unpaired samples");
  }
  if (x_labels.empty()) {
    throw ContractError("variational_mi_lower_bound: empty sample set");
  }
  Eigen::MatrixXd post =
      matrix_from_tensor(adversary.posterior(tensor_from_matrix(z)));
  double mean_logq = 0.0;
  for (Eigen::Index i = 0; i < post.rows(); ++i) {
    mean_logq += std::log(std::max(post(i, x_labels[i]), kProbEps));
  }
  mean_logq /= static_cast<double>(post.rows());
  return h_x + mean_logq;
}

double variational_mi_lower_bound(const AdversaryNet& adversary,
                                  const Eigen::MatrixXd& x,
                                  const Eigen::MatrixXd& z, double h_x) {
  if (x.rows() != z.rows()) {
    throw DimensionError("variational_mi_lower_bound: unpaired samples");
  }
  if (x.rows() == 0) {
    throw ContractError("variational_mi_lower_bound: empty sample set");
  }
  ad::Tensor logq =
      adversary.log_prob(tensor_from_matrix(x), tensor_from_matrix(z));
  double mean_logq = 0.0;
  for (double v : logq.values()) mean_logq += v;
  mean_logq /= static_cast<double>(logq.size());
  return h_x + mean_logq;
}

double variational_mi_bound_exact(const Eigen::MatrixXd& joint_xz,
                                  const Eigen::MatrixXd& q) {
  if (q.rows() != joint_xz.cols() || q.cols() != joint_xz.rows()) {
    throw DimensionError(
        "variational_mi_bound_exact: q must be |Z| x |X| for a |X| x |Z| "
        "joint");
  }
  const double total = joint_xz.sum();
  if (!(total > 0.0)) {
    throw ContractError("variational_mi_bound_exact: empty joint");
  }
  Eigen::MatrixXd p = joint_xz / total;
  Eigen::VectorXd px = p.rowwise().sum();
  double h_x = 0.0;
  for (Eigen::Index i = 0; i < px.size(); ++i) {
    if (px[i] > 0.0) h_x -= px[i] * std::log(px[i]);
  }
  double e_logq = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      if (p(i, j) > 0.0) {
        e_logq += p(i, j) * std::log(std::max(q(j, i), kProbEps));
      }
    }
  }
  return h_x + e_logq;
}

double empirical_distortion(const Eigen::MatrixXd& y, const Eigen::MatrixXd& z,
                            const DistortionFn& dist) {
  if (y.rows() != z.rows() || y.cols() != z.cols()) {
    throw DimensionError("empirical_distortion: unpaired samples");
  }
  if (y.rows() == 0) {
    throw ContractError("empirical_distortion: empty sample set");
  }
  // Row-major copies so each sample is contiguous.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> yr = y;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> zr = z;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < yr.rows(); ++i) {
    acc += dist.value({yr.row(i).data(), static_cast<std::size_t>(yr.cols())},
                      {zr.row(i).data(), static_cast<std::size_t>(zr.cols())});
  }
  return acc / static_cast<double>(yr.rows());
}

double adversary_accuracy(const AdversaryNet& adversary,
                          const std::vector<int>& x_labels,
                          const Eigen::MatrixXd& z) {
  if (x_labels.size() != static_cast<std::size_t>(z.rows())) {
    throw DimensionError("adversary_accuracy: unpaired samples");
  }
  if (x_labels.empty()) {
    throw ContractError("adversary_accuracy: empty sample set");
  }
  Eigen::MatrixXd post =
      matrix_from_tensor(adversary.posterior(tensor_from_matrix(z)));
  int hits = 0;
  for (Eigen::Index i = 0; i < post.rows(); ++i) {
    int best = 0;
    for (Eigen::Index j = 1; j < post.cols(); ++j) {
      if (post(i, j) > post(i, best)) best = static_cast<int>(j);
    }
    if (best == x_labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(post.rows());
}

ad::Tensor tensor_from_matrix(const Eigen::MatrixXd& m) {
  std::vector<double> v(static_cast<std::size_t>(m.rows()) * m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      v[r * m.cols() + c] = m(r, c);
  return ad::Tensor::constant(static_cast<int>(m.rows()),
                              static_cast<int>(m.cols()), std::move(v));
}

Eigen::MatrixXd matrix_from_tensor(const ad::Tensor& t) {
  Eigen::MatrixXd m(t.rows(), t.cols());
  for (int r = 0; r < t.rows(); ++r)
    for (int c = 0; c < t.cols(); ++c) m(r, c) = t.at(r, c);
  return m;
}

ad::Tensor one_hot(const std::vector<int>& labels, int alphabet) {
  std::vector<double> v(labels.size() * alphabet, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= alphabet) {
      throw ContractError("one_hot: label " + std::to_string(labels[i]) +
                          " outside alphabet of size " +
                          std::to_string(alphabet));
    }
    v[i * alphabet + labels[i]] = 1.0;
  }
  return ad::Tensor::constant(static_cast<int>(labels.size()), alphabet,
                              std::move(v));
}

}  // namespace privmech

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

#ifndef PRIVMECH_DATAGEN_HPP
#define PRIVMECH_DATAGEN_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "privmech/oracle.hpp"
#include "privmech/rng.hpp"

namespace privmech {

// Generative description of (W, X, Y): the data model an experiment samples
// from, with the observation map applied last.
class JointModel {
 public:
  enum class Kind { ScalarGauss, VectorGauss, SymmetricPair };

  static JointModel scalar_gauss(const ScalarGaussParams& params,
                                 Observation obs);
  static JointModel vector_gauss(const Eigen::MatrixXd& sigma_x,
                                 const Eigen::MatrixXd& sigma_y,
                                 const Eigen::MatrixXd& sigma_xy,
                                 Observation obs);
  // Degenerate W = X = Y model (rate-distortion experiments).
  static JointModel identity_gauss(const Eigen::MatrixXd& sigma_x);
  static JointModel symmetric_pair(const SymmetricPairParams& params,
                                   Observation obs);

  Kind kind() const { return kind_; }
  Observation observation() const { return observation_; }
  bool discrete() const { return kind_ == Kind::SymmetricPair; }

  int x_dim() const;  // alphabet size when discrete
  int y_dim() const;
  int w_dim() const;  // one-hot width when discrete

  const ScalarGaussParams& scalar_params() const { return scalar_; }
  const SymmetricPairParams& pair_params() const { return pair_; }
  const Eigen::MatrixXd& sigma_x() const { return sigma_x_; }
  const Eigen::MatrixXd& sigma_y() const { return sigma_y_; }
  const Eigen::MatrixXd& sigma_xy() const { return sigma_xy_; }

  // True joint pmf over X x Y (discrete models only).
  Eigen::MatrixXd joint_pmf() const;

  std::string id() const;

 private:
  JointModel() = default;
  void build_gaussian_factor();

  Kind kind_ = Kind::ScalarGauss;
  Observation observation_ = Observation::UsefulOnly;
  ScalarGaussParams scalar_;
  SymmetricPairParams pair_;
  Eigen::MatrixXd sigma_x_, sigma_y_, sigma_xy_;
  Eigen::MatrixXd joint_factor_;  // lower-triangular factor of cov([X; Y])

 public:
  const Eigen::MatrixXd& joint_factor() const { return joint_factor_; }
};

// i.i.d. draws of (w, x, y). Continuous data sits in the matrices; discrete
// data also carries symbol ids (one-hot encodings are in the matrices).
struct Dataset {
  Eigen::MatrixXd w, x, y;
  std::vector<int> w_id, x_id, y_id;
  bool discrete = false;
  int alphabet = 0;  // x/y alphabet size when discrete
  int n() const { return static_cast<int>(w.rows()); }
};

Dataset sample(const JointModel& model, int n, Rng& rng);

// --- IDX image/label files ---------------------------------------------------
// Big-endian IDX format; pixels are scaled to [0, 1] on load. Malformed
// files raise FormatError naming the byte offset.

struct IdxImages {
  Eigen::MatrixXd pixels;  // n x (rows*cols), values in [0, 1]
  int rows = 0;
  int cols = 0;
};

IdxImages load_idx_images(const std::string& path);
std::vector<int> load_idx_labels(const std::string& path);
void write_idx_images(const std::string& path, const Eigen::MatrixXd& pixels,
                      int rows, int cols);
void write_idx_labels(const std::string& path, const std::vector<int>& labels);

// --- Synthetic digit corpus --------------------------------------------------
// Self-contained stand-in for handwritten-digit data: 28x28 glyph renderings
// with random placement and intensity jitter, labels in {0..9}.

struct DigitData {
  Eigen::MatrixXd images;  // n x 784 in [0, 1]
  std::vector<int> labels;
};

DigitData synthetic_digits(int n, Rng& rng);

}  // namespace privmech

#endif  // PRIVMECH_DATAGEN_HPP

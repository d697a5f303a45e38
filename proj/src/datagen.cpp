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

#include "privmech/datagen.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "privmech/common.hpp"

namespace privmech {

namespace {

constexpr double kCholeskyJitter = 1e-12;

// Lower-triangular factor L with L L^T = cov; retries once with diagonal
// jitter for semidefinite inputs, then rejects the model.
Eigen::MatrixXd robust_cholesky(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) {
    return llt.matrixL();
  }
  Eigen::MatrixXd jittered = cov;
  jittered.diagonal().array() += kCholeskyJitter;
  Eigen::LLT<Eigen::MatrixXd> retry(jittered);
  if (retry.info() == Eigen::Success) {
    return retry.matrixL();
  }
  throw ModelError("joint covariance is not positive semidefinite");
}

}  // namespace

JointModel JointModel::scalar_gauss(const ScalarGaussParams& params,
                                    Observation obs) {
  if (!(params.var_x > 0.0) || !(params.var_y > 0.0) ||
      std::abs(params.rho) > 1.0) {
    throw ModelError("scalar_gauss: invalid parameters");
  }
  JointModel m;
  m.kind_ = Kind::ScalarGauss;
  m.observation_ = obs;
  m.scalar_ = params;
  const double sx = std::sqrt(params.var_x);
  const double sy = std::sqrt(params.var_y);
  m.sigma_x_ = Eigen::MatrixXd::Constant(1, 1, params.var_x);
  m.sigma_y_ = Eigen::MatrixXd::Constant(1, 1, params.var_y);
  m.sigma_xy_ = Eigen::MatrixXd::Constant(1, 1, params.rho * sx * sy);
  // Closed-form 2x2 factor keeps rho = +/-1 exact (no jitter).
  m.joint_factor_ = Eigen::MatrixXd::Zero(2, 2);
  m.joint_factor_(0, 0) = sx;
  m.joint_factor_(1, 0) = params.rho * sy;
  m.joint_factor_(1, 1) = sy * std::sqrt(std::max(0.0, 1.0 - params.rho * params.rho));
  return m;
}

JointModel JointModel::vector_gauss(const Eigen::MatrixXd& sigma_x,
                                    const Eigen::MatrixXd& sigma_y,
                                    const Eigen::MatrixXd& sigma_xy,
                                    Observation obs) {
  if (sigma_x.rows() != sigma_x.cols() || sigma_y.rows() != sigma_y.cols() ||
      sigma_xy.rows() != sigma_x.rows() || sigma_xy.cols() != sigma_y.rows()) {
    throw ModelError("vector_gauss: covariance shapes are inconsistent");
  }
  JointModel m;
  m.kind_ = Kind::VectorGauss;
  m.observation_ = obs;
  m.sigma_x_ = sigma_x;
  m.sigma_y_ = sigma_y;
  m.sigma_xy_ = sigma_xy;
  m.build_gaussian_factor();
  return m;
}

JointModel JointModel::identity_gauss(const Eigen::MatrixXd& sigma_x) {
  JointModel m;
  m.kind_ = Kind::VectorGauss;
  m.observation_ = Observation::Identity;
  m.sigma_x_ = sigma_x;
  m.sigma_y_ = sigma_x;
  m.sigma_xy_ = sigma_x;
  // Only X is sampled; Y and W are copies.
  m.joint_factor_ = robust_cholesky(sigma_x);
  return m;
}

JointModel JointModel::symmetric_pair(const SymmetricPairParams& params,
                                      Observation obs) {
  if (params.m < 2 || params.p < 0.0 || params.p > 1.0) {
    throw ModelError("symmetric_pair: need m >= 2 and p in [0, 1]");
  }
  if (obs == Observation::Identity) {
    throw ModelError("symmetric_pair: identity observation is not defined");
  }
  JointModel m;
  m.kind_ = Kind::SymmetricPair;
  m.observation_ = obs;
  m.pair_ = params;
  return m;
}

void JointModel::build_gaussian_factor() {
  const Eigen::Index dx = sigma_x_.rows();
  const Eigen::Index dy = sigma_y_.rows();
  Eigen::MatrixXd cov(dx + dy, dx + dy);
  cov.topLeftCorner(dx, dx) = sigma_x_;
  cov.topRightCorner(dx, dy) = sigma_xy_;
  cov.bottomLeftCorner(dy, dx) = sigma_xy_.transpose();
  cov.bottomRightCorner(dy, dy) = sigma_y_;
  joint_factor_ = robust_cholesky(cov);
}

int JointModel::x_dim() const {
  if (discrete()) return pair_.m;
  return static_cast<int>(sigma_x_.rows());
}

int JointModel::y_dim() const {
  if (discrete()) return pair_.m;
  return static_cast<int>(sigma_y_.rows());
}

int JointModel::w_dim() const {
  switch (observation_) {
    case Observation::UsefulOnly:
      return y_dim();
    case Observation::FullData:
      return discrete() ? pair_.m * pair_.m : x_dim() + y_dim();
    case Observation::Identity:
      return x_dim();
  }
  throw ContractError("w_dim: unknown observation");
}

Eigen::MatrixXd JointModel::joint_pmf() const {
  if (!discrete()) {
    throw ContractError("joint_pmf is defined for discrete models only");
  }
  const int m = pair_.m;
  const double p = pair_.p;
  Eigen::MatrixXd joint(m, m);
  const double off = p / static_cast<double>(m - 1);
  for (int x = 0; x < m; ++x) {
    for (int y = 0; y < m; ++y) {
      joint(x, y) = (x == y ? 1.0 - p : off) / static_cast<double>(m);
    }
  }
  return joint;
}

std::string JointModel::id() const {
  std::ostringstream out;
  switch (kind_) {
    case Kind::ScalarGauss:
      out << "scalar_gauss(rho=" << scalar_.rho << ")";
      break;
    case Kind::VectorGauss:
      out << "vector_gauss(dim=" << sigma_x_.rows() << ")";
      break;
    case Kind::SymmetricPair:
      out << "symmetric_pair(m=" << pair_.m << ",p=" << pair_.p << ")";
      break;
  }
  switch (observation_) {
    case Observation::UsefulOnly:
      out << "/ud";
      break;
    case Observation::FullData:
      out << "/fd";
      break;
    case Observation::Identity:
      out << "/id";
      break;
  }
  return out.str();
}

Dataset sample(const JointModel& model, int n, Rng& rng) {
  if (n < 1) throw ContractError("sample: n must be >= 1");

  Dataset data;
  if (model.discrete()) {
    const int m = model.pair_params().m;
    const double p = model.pair_params().p;
    data.discrete = true;
    data.alphabet = m;
    data.x_id.resize(n);
    data.y_id.resize(n);
    data.w_id.resize(n);
    for (int i = 0; i < n; ++i) {
      const int x = static_cast<int>(rng.uniform_int(m));
      int y = x;
      if (rng.uniform() < p) {
        // Uniform over the other m-1 symbols.
        const int shift = 1 + static_cast<int>(rng.uniform_int(m - 1));
        y = (x + shift) % m;
      }
      data.x_id[i] = x;
      data.y_id[i] = y;
      data.w_id[i] = model.observation() == Observation::FullData
                         ? x * m + y
                         : y;
    }
    const int w_alpha = model.w_dim();
    data.x = Eigen::MatrixXd::Zero(n, m);
    data.y = Eigen::MatrixXd::Zero(n, m);
    data.w = Eigen::MatrixXd::Zero(n, w_alpha);
    for (int i = 0; i < n; ++i) {
      data.x(i, data.x_id[i]) = 1.0;
      data.y(i, data.y_id[i]) = 1.0;
      data.w(i, data.w_id[i]) = 1.0;
    }
    return data;
  }

  const int dx = model.x_dim();
  const int dy = model.y_dim();
  if (model.observation() == Observation::Identity) {
    const Eigen::MatrixXd& factor = model.joint_factor();
    data.x.resize(n, dx);
    Eigen::VectorXd g(dx);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < dx; ++j) g[j] = rng.normal();
      data.x.row(i) = (factor * g).transpose();
    }
    data.y = data.x;
    data.w = data.x;
    return data;
  }

  const Eigen::MatrixXd& factor = model.joint_factor();
  data.x.resize(n, dx);
  data.y.resize(n, dy);
  Eigen::VectorXd g(dx + dy);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < dx + dy; ++j) g[j] = rng.normal();
    Eigen::VectorXd v = factor * g;
    data.x.row(i) = v.head(dx).transpose();
    data.y.row(i) = v.tail(dy).transpose();
  }
  if (model.observation() == Observation::UsefulOnly) {
    data.w = data.y;
  } else {
    data.w.resize(n, dx + dy);
    data.w << data.x, data.y;
  }
  return data;
}

// --- IDX ----------------------------------------------------------------------

namespace {

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

std::uint32_t read_be32(std::istream& in, const std::string& path,
                        std::streamoff offset) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw FormatError("IDX file '" + path + "': truncated at offset " +
                      std::to_string(offset));
  }
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {
      static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
      static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

IdxImages load_idx_images(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("IDX file '" + path + "': cannot open");
  const std::uint32_t magic = read_be32(in, path, 0);
  if (magic != kIdxImageMagic) {
    throw FormatError("IDX file '" + path + "': bad magic " +
                      std::to_string(magic) + " at offset 0");
  }
  const std::uint32_t count = read_be32(in, path, 4);
  const std::uint32_t rows = read_be32(in, path, 8);
  const std::uint32_t cols = read_be32(in, path, 12);
  const std::size_t pixels = std::size_t(rows) * cols;

  IdxImages out;
  out.rows = static_cast<int>(rows);
  out.cols = static_cast<int>(cols);
  out.pixels.resize(count, pixels);
  std::vector<unsigned char> buf(pixels);
  for (std::uint32_t i = 0; i < count; ++i) {
    if (!in.read(reinterpret_cast<char*>(buf.data()), pixels)) {
      throw FormatError("IDX file '" + path + "': truncated at offset " +
                        std::to_string(16 + std::size_t(i) * pixels));
    }
    for (std::size_t j = 0; j < pixels; ++j) {
      out.pixels(i, j) = static_cast<double>(buf[j]) / 255.0;
    }
  }
  return out;
}

std::vector<int> load_idx_labels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("IDX file '" + path + "': cannot open");
  const std::uint32_t magic = read_be32(in, path, 0);
  if (magic != kIdxLabelMagic) {
    throw FormatError("IDX file '" + path + "': bad magic " +
                      std::to_string(magic) + " at offset 0");
  }
  const std::uint32_t count = read_be32(in, path, 4);
  std::vector<int> labels(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    char b;
    if (!in.get(b)) {
      throw FormatError("IDX file '" + path + "': truncated at offset " +
                        std::to_string(8 + i));
    }
    labels[i] = static_cast<unsigned char>(b);
  }
  return labels;
}

void write_idx_images(const std::string& path, const Eigen::MatrixXd& pixels,
                      int rows, int cols) {
  if (pixels.cols() != static_cast<Eigen::Index>(rows) * cols) {
    throw DimensionError("write_idx_images: pixel width != rows*cols");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("IDX file '" + path + "': cannot open for write");
  write_be32(out, kIdxImageMagic);
  write_be32(out, static_cast<std::uint32_t>(pixels.rows()));
  write_be32(out, static_cast<std::uint32_t>(rows));
  write_be32(out, static_cast<std::uint32_t>(cols));
  std::vector<unsigned char> buf(pixels.cols());
  for (Eigen::Index i = 0; i < pixels.rows(); ++i) {
    for (Eigen::Index j = 0; j < pixels.cols(); ++j) {
      const double v = std::min(1.0, std::max(0.0, pixels(i, j)));
      buf[j] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    out.write(reinterpret_cast<const char*>(buf.data()), buf.size());
  }
  if (!out) throw FormatError("IDX file '" + path + "': write failed");
}

void write_idx_labels(const std::string& path, const std::vector<int>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("IDX file '" + path + "': cannot open for write");
  write_be32(out, kIdxLabelMagic);
  write_be32(out, static_cast<std::uint32_t>(labels.size()));
  for (int l : labels) {
    out.put(static_cast<char>(static_cast<unsigned char>(l)));
  }
  if (!out) throw FormatError("IDX file '" + path + "': write failed");
}

// --- Synthetic digits ----------------------------------------------------------

namespace {

// 5x7 glyph bitmaps, one row per string.
const char* const kDigitGlyphs[10][7] = {
    {"01110", "10001", "10011", "10101", "11001", "10001", "01110"},
    {"00100", "01100", "00100", "00100", "00100", "00100", "01110"},
    {"01110", "10001", "00001", "00010", "00100", "01000", "11111"},
    {"11111", "00010", "00100", "00010", "00001", "10001", "01110"},
    {"00010", "00110", "01010", "10010", "11111", "00010", "00010"},
    {"11111", "10000", "11110", "00001", "00001", "10001", "01110"},
    {"00110", "01000", "10000", "11110", "10001", "10001", "01110"},
    {"11111", "00001", "00010", "00100", "01000", "01000", "01000"},
    {"01110", "10001", "10001", "01110", "10001", "10001", "01110"},
    {"01110", "10001", "10001", "01111", "00001", "00010", "01100"}};

constexpr int kGlyphRows = 7;
constexpr int kGlyphCols = 5;
constexpr int kScale = 3;  // rendered stroke cell is kScale x kScale
constexpr int kImageSide = 28;

}  // namespace

DigitData synthetic_digits(int n, Rng& rng) {
  if (n < 1) throw ContractError("synthetic_digits: n must be >= 1");
  DigitData out;
  out.images = Eigen::MatrixXd::Zero(n, kImageSide * kImageSide);
  out.labels.resize(n);

  const int glyph_h = kGlyphRows * kScale;  // 21
  const int glyph_w = kGlyphCols * kScale;  // 15
  for (int i = 0; i < n; ++i) {
    const int digit = static_cast<int>(rng.uniform_int(10));
    out.labels[i] = digit;
    const int row0 = static_cast<int>(rng.uniform_int(kImageSide - glyph_h));
    const int col0 = static_cast<int>(rng.uniform_int(kImageSide - glyph_w));
    const double intensity = rng.uniform(0.75, 1.0);
    for (int gr = 0; gr < kGlyphRows; ++gr) {
      for (int gc = 0; gc < kGlyphCols; ++gc) {
        if (kDigitGlyphs[digit][gr][gc] != '1') continue;
        for (int dr = 0; dr < kScale; ++dr) {
          for (int dc = 0; dc < kScale; ++dc) {
            const int r = row0 + gr * kScale + dr;
            const int c = col0 + gc * kScale + dc;
            out.images(i, r * kImageSide + c) = intensity;
          }
        }
      }
    }
    // Light background speckle.
    const int speckles = static_cast<int>(rng.uniform_int(8));
    for (int s = 0; s < speckles; ++s) {
      const int pix =
          static_cast<int>(rng.uniform_int(kImageSide * kImageSide));
      out.images(i, pix) =
          std::min(1.0, out.images(i, pix) + rng.uniform(0.0, 0.25));
    }
  }
  return out;
}

}  // namespace privmech

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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "privmech/common.hpp"
#include "privmech/datagen.hpp"
#include "privmech/runner.hpp"

namespace {

namespace fs = std::filesystem;
using namespace privmech;

constexpr int kExitOk = 0;
constexpr int kExitRunFailure = 1;
constexpr int kExitBadInput = 2;

struct CommonOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> workers;

  void apply(ExperimentConfig& cfg) const {
    if (seed) cfg.seed = *seed;
    if (out_dir) cfg.out_dir = *out_dir;
    if (workers) cfg.workers = *workers;
  }
};

void add_common_flags(CLI::App* cmd, CommonOverrides& overrides) {
  cmd->add_option("--seed", overrides.seed, "Master seed override");
  cmd->add_option("--out-dir", overrides.out_dir,
                  "Output directory (default: config value, then "
                  "$PRIVMECH_OUT, then '.')");
  cmd->add_option("--workers", overrides.workers,
                  "Grid-point worker threads");
}

int cmd_run(const std::string& config_path, const CommonOverrides& overrides) {
  ExperimentConfig cfg = parse_config_file(config_path);
  overrides.apply(cfg);
  RunArtifacts artifacts = run_experiment(cfg);
  std::cout << "experiment: " << experiment_name(cfg.id) << "\n"
            << "tradeoff:   " << artifacts.tradeoff_csv << "\n"
            << "history:    " << artifacts.history_csv << "\n";
  if (!artifacts.releases_csv.empty()) {
    std::cout << "releases:   " << artifacts.releases_csv << "\n";
  }
  for (const TradeoffPoint& p : artifacts.points) {
    if (p.failed) {
      std::cerr << "point " << format_double(p.grid_value)
                << " failed: " << p.error << "\n";
    }
  }
  if (artifacts.any_failed) {
    std::cerr << "some grid points failed; their CSV rows hold nan\n";
    return kExitRunFailure;
  }
  return kExitOk;
}

int cmd_oracle(const std::string& config_path,
               const CommonOverrides& overrides) {
  ExperimentConfig cfg = parse_config_file(config_path);
  overrides.apply(cfg);
  if (cfg.id != ExperimentId::OracleOnly) {
    if (cfg.id == ExperimentId::MnistToy) {
      throw FormatError("oracle: no closed-form curve for mnist-toy");
    }
    cfg.curve = cfg.id;
    cfg.id = ExperimentId::OracleOnly;
  }
  RunArtifacts artifacts = run_experiment(cfg);
  std::cout << "curve:    " << experiment_name(cfg.curve) << "\n"
            << "tradeoff: " << artifacts.tradeoff_csv << "\n";
  return kExitOk;
}

int cmd_compare(const std::string& csv_path, double tolerance) {
  CompareReport report = compare_tradeoff_csv(csv_path, tolerance);
  std::cout << render_compare_report(report);
  return report.pass ? kExitOk : kExitRunFailure;
}

int cmd_datagen(const std::string& config_path, int n,
                const CommonOverrides& overrides) {
  ExperimentConfig cfg = parse_config_file(config_path);
  overrides.apply(cfg);
  std::string out_dir = cfg.out_dir;
  if (out_dir.empty()) {
    const char* env = std::getenv("PRIVMECH_OUT");
    out_dir = (env != nullptr && *env != '\0') ? env : ".";
  }
  fs::create_directories(out_dir);
  Rng rng = Rng(cfg.seed).child(seed_tag::kTrainData);

  if (cfg.id == ExperimentId::MnistToy) {
    DigitData digits = synthetic_digits(n > 0 ? n : cfg.n_train, rng);
    const std::string images = (fs::path(out_dir) / "digits-images-idx3-ubyte").string();
    const std::string labels = (fs::path(out_dir) / "digits-labels-idx1-ubyte").string();
    write_idx_images(images, digits.images, 28, 28);
    write_idx_labels(labels, digits.labels);
    std::cout << "images: " << images << "\nlabels: " << labels << "\n";
    return kExitOk;
  }

  if (cfg.id == ExperimentId::OracleOnly) {
    throw FormatError("datagen: oracle-only has no data model");
  }
  ExperimentConfig model_cfg = cfg;
  JointModel model = [&] {
    switch (cfg.id) {
      case ExperimentId::ScalarUd:
        return JointModel::scalar_gauss({cfg.var_x, cfg.var_y, cfg.rho},
                                        Observation::UsefulOnly);
      case ExperimentId::ScalarFd:
        return JointModel::scalar_gauss({1.0, 1.0, cfg.rho},
                                        Observation::FullData);
      case ExperimentId::VectorUd: {
        const int d = static_cast<int>(cfg.rho_vec.size());
        Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d, d);
        Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(d, d);
        for (int i = 0; i < d; ++i) cross(i, i) = cfg.rho_vec[i];
        return JointModel::vector_gauss(eye, eye, cross,
                                        Observation::UsefulOnly);
      }
      case ExperimentId::RateDistortion: {
        const int d = static_cast<int>(cfg.variances.size());
        Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(d, d);
        for (int i = 0; i < d; ++i) sigma(i, i) = cfg.variances[i];
        return JointModel::identity_gauss(sigma);
      }
      case ExperimentId::SymmetricPair:
        return JointModel::symmetric_pair({cfg.m, cfg.p}, cfg.observation);
      default:
        throw FormatError("datagen: unsupported experiment");
    }
  }();

  Dataset data = sample(model, n > 0 ? n : cfg.n_train, rng);
  const std::string path = (fs::path(out_dir) / "dataset.csv").string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("datagen: cannot open '" + path + "'");
  out << "kind";
  for (int c = 0; c < data.w.cols(); ++c) out << ",w" << c;
  for (int c = 0; c < data.x.cols(); ++c) out << ",x" << c;
  for (int c = 0; c < data.y.cols(); ++c) out << ",y" << c;
  out << "\n";
  for (int i = 0; i < data.n(); ++i) {
    out << i;
    for (int c = 0; c < data.w.cols(); ++c)
      out << ',' << format_double(data.w(i, c));
    for (int c = 0; c < data.x.cols(); ++c)
      out << ',' << format_double(data.x(i, c));
    for (int c = 0; c < data.y.cols(); ++c)
      out << ',' << format_double(data.y(i, c));
    out << "\n";
  }
  std::cout << "dataset: " << path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Adversarially trained randomized release mechanisms trading "
      "mutual-information leakage against distortion, with closed-form "
      "oracle curves"};
  app.require_subcommand(1);

  std::string config_path, csv_path;
  double tolerance = 0.1;
  int datagen_n = 0;
  CommonOverrides run_over, oracle_over, datagen_over;

  CLI::App* run_cmd =
      app.add_subcommand("run", "Train an experiment and emit tradeoff CSVs");
  run_cmd->add_option("config", config_path, "Experiment config file")
      ->required();
  add_common_flags(run_cmd, run_over);

  CLI::App* oracle_cmd = app.add_subcommand(
      "oracle", "Evaluate the closed-form curve for a config, no training");
  oracle_cmd->add_option("config", config_path, "Experiment config file")
      ->required();
  add_common_flags(oracle_cmd, oracle_over);

  CLI::App* compare_cmd = app.add_subcommand(
      "compare", "Report leakage-vs-oracle gaps for a tradeoff CSV");
  compare_cmd->add_option("csv", csv_path, "tradeoff.csv path")->required();
  compare_cmd->add_option("--tolerance", tolerance,
                          "Max |gap| in nats before failing");

  CLI::App* datagen_cmd = app.add_subcommand(
      "datagen", "Sample the config's data model to CSV (or IDX for images)");
  datagen_cmd->add_option("config", config_path, "Experiment config file")
      ->required();
  datagen_cmd->add_option("-n,--count", datagen_n, "Sample count");
  add_common_flags(datagen_cmd, datagen_over);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return cmd_run(config_path, run_over);
    if (oracle_cmd->parsed()) return cmd_oracle(config_path, oracle_over);
    if (compare_cmd->parsed()) return cmd_compare(csv_path, tolerance);
    if (datagen_cmd->parsed())
      return cmd_datagen(config_path, datagen_n, datagen_over);
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const ModelError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRunFailure;
  }
  return kExitOk;
}

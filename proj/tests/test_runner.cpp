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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "privmech/common.hpp"
#include "privmech/runner.hpp"

using namespace privmech;

namespace {

namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("config parsing fills defaults and applies overrides") {
  ExperimentConfig cfg = parse_config_text(
      "# comment line\n"
      "experiment = scalar-ud\n"
      "seed = 9\n"
      "lambda = 12.5\n"
      "grid = 0.1, 0.5\n"
      "epochs = 3\n",
      "inline");
  CHECK(cfg.id == ExperimentId::ScalarUd);
  CHECK(cfg.seed == 9);
  CHECK(cfg.lambda == 12.5);
  CHECK(cfg.epochs == 3);
  REQUIRE(cfg.grid.size() == 2);
  CHECK(cfg.grid[0] == 0.1);
  CHECK(cfg.grid[1] == 0.5);
  // Untouched defaults survive.
  CHECK(cfg.rho == 0.85);
  CHECK(cfg.minibatch_size == 200);
  CHECK(cfg.adversary_steps == 5);
}

TEST_CASE("config errors carry the offending line") {
  SUBCASE("unknown keys are rejected per experiment") {
    CHECK_THROWS_WITH_AS(
        parse_config_text("experiment = scalar-ud\nrho_vec = 0.5,0.5\n",
                          "cfg"),
        doctest::Contains("cfg:2"), FormatError);
  }
  SUBCASE("malformed numbers name the key") {
    CHECK_THROWS_WITH_AS(
        parse_config_text("experiment = scalar-ud\nlambda = ten\n", "cfg"),
        doctest::Contains("lambda"), FormatError);
  }
  SUBCASE("missing experiment key") {
    CHECK_THROWS_AS(parse_config_text("seed = 4\n", "cfg"), FormatError);
  }
  SUBCASE("duplicate keys") {
    CHECK_THROWS_WITH_AS(
        parse_config_text("experiment = scalar-ud\nseed = 1\nseed = 2\n",
                          "cfg"),
        doctest::Contains("duplicate"), FormatError);
  }
  SUBCASE("lines without an equals sign") {
    CHECK_THROWS_WITH_AS(
        parse_config_text("experiment = scalar-ud\nbogus line\n", "cfg"),
        doctest::Contains("cfg:2"), FormatError);
  }
  SUBCASE("partial grid range specification") {
    CHECK_THROWS_AS(
        parse_config_text("experiment = scalar-ud\ngrid_min = 0\n", "cfg"),
        FormatError);
  }
}

TEST_CASE("grid ranges expand to linearly spaced values") {
  ExperimentConfig cfg = parse_config_text(
      "experiment = oracle-only\ncurve = scalar-ud\n"
      "grid_min = 0\ngrid_max = 1\ngrid_count = 5\n",
      "inline");
  REQUIRE(cfg.grid.size() == 5);
  CHECK(cfg.grid[0] == 0.0);
  CHECK(cfg.grid[2] == doctest::Approx(0.5));
  CHECK(cfg.grid[4] == 1.0);
}

TEST_CASE("oracle-only runs emit the curve with zero gaps") {
  TempDir dir("privmech_test_oracle_run");
  ExperimentConfig cfg = parse_config_text(
      "experiment = oracle-only\ncurve = rate-distortion\n"
      "variances = 0.47,0.24,0.85,0.07,0.66\n"
      "grid = 0.25,1.0,2.0\n",
      "inline");
  cfg.out_dir = dir.str();
  RunArtifacts artifacts = run_experiment(cfg);
  CHECK_FALSE(artifacts.any_failed);
  REQUIRE(artifacts.points.size() == 3);
  CHECK(artifacts.points[0].leakage_nats == doctest::Approx(4.7796).epsilon(1e-4));

  CompareReport report = compare_tradeoff_csv(artifacts.tradeoff_csv, 1e-12);
  CHECK(report.pass);
  CHECK(report.max_abs_gap == 0.0);
  CHECK(report.rows.size() == 3);
}

TEST_CASE("compare reports exact gap statistics on a hand-built csv") {
  TempDir dir("privmech_test_compare");
  const std::string path = (dir.path / "tradeoff.csv").string();
  std::ofstream out(path, std::ios::binary);
  out << kTradeoffHeader << "\n";
  out << "0.1,0.1,0.5,0.45,nan,1\n";   // gap +0.05
  out << "0.2,0.2,0.30,0.50,nan,1\n";  // gap -0.20
  out << "0.3,0.3,0.7,nan,nan,1\n";    // skipped: no oracle
  out.close();

  CompareReport report = compare_tradeoff_csv(path, 0.1);
  CHECK(report.rows.size() == 2);
  CHECK(report.skipped == 1);
  CHECK(report.max_abs_gap == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(report.mean_abs_gap == doctest::Approx(0.125).epsilon(1e-12));
  CHECK_FALSE(report.pass);
  REQUIRE(report.failing_deltas.size() == 1);
  CHECK(report.failing_deltas[0] == 0.2);

  const std::string text = render_compare_report(report);
  CHECK(text.find("FAIL") != std::string::npos);
  CHECK(text.find("0.2") != std::string::npos);
}

TEST_CASE("compare rejects missing or misnamed columns") {
  TempDir dir("privmech_test_compare_bad");
  const std::string path = (dir.path / "bad.csv").string();
  std::ofstream out(path, std::ios::binary);
  out << "delta,leakage\n0.1,0.5\n";
  out.close();
  CHECK_THROWS_AS(compare_tradeoff_csv(path, 0.1), FormatError);
}

TEST_CASE("runs are byte-identical under a fixed seed") {
  SUBCASE("symmetric pair training") {
    TempDir dir_a("privmech_test_det_a");
    TempDir dir_b("privmech_test_det_b");
    ExperimentConfig cfg = parse_config_text(
        "experiment = symmetric-pair\nepochs = 5\nn_train = 200\n"
        "n_test = 100\ngrid = 0.2,0.5\nseed = 123\n",
        "inline");
    cfg.out_dir = dir_a.str();
    RunArtifacts a = run_experiment(cfg);
    cfg.out_dir = dir_b.str();
    RunArtifacts b = run_experiment(cfg);
    CHECK(read_file(a.tradeoff_csv) == read_file(b.tradeoff_csv));
    CHECK(read_file(a.history_csv) == read_file(b.history_csv));
  }
  SUBCASE("worker count does not change the artifacts") {
    TempDir dir_a("privmech_test_det_w1");
    TempDir dir_b("privmech_test_det_w2");
    ExperimentConfig cfg = parse_config_text(
        "experiment = scalar-ud\nepochs = 2\nn_train = 200\nn_test = 100\n"
        "grid = 0.3,0.6\nseed = 7\n",
        "inline");
    cfg.out_dir = dir_a.str();
    cfg.workers = 1;
    RunArtifacts a = run_experiment(cfg);
    cfg.out_dir = dir_b.str();
    cfg.workers = 2;
    RunArtifacts b = run_experiment(cfg);
    CHECK(read_file(a.tradeoff_csv) == read_file(b.tradeoff_csv));
    CHECK(read_file(a.history_csv) == read_file(b.history_csv));
  }
}

TEST_CASE("failed grid points flag the run and leave nan rows") {
  TempDir dir("privmech_test_failed_point");
  ExperimentConfig cfg = parse_config_text(
      "experiment = scalar-ud\nvar_y = 100\nepochs = 1\nn_train = 100\n"
      "n_test = 50\ngrid = 0.5\nlambda = 1e308\nbudget = lagrangian\n",
      "inline");
  cfg.out_dir = dir.str();
  RunArtifacts artifacts = run_experiment(cfg);
  CHECK(artifacts.any_failed);
  REQUIRE(artifacts.points.size() == 1);
  CHECK(artifacts.points[0].failed);
  const std::string csv = read_file(artifacts.tradeoff_csv);
  CHECK(csv.find("nan") != std::string::npos);
}

TEST_CASE("a tiny image run emits valid artifacts") {
  TempDir dir("privmech_test_mnist_tiny");
  ExperimentConfig cfg = parse_config_text(
      "experiment = mnist-toy\nn_train = 120\nn_test = 40\nepochs = 1\n"
      "hidden_width = 30\ngrid = 35\ndump_releases = 3\nseed = 5\n",
      "inline");
  cfg.out_dir = dir.str();
  RunArtifacts artifacts = run_experiment(cfg);
  CHECK_FALSE(artifacts.any_failed);
  REQUIRE(artifacts.points.size() == 1);
  const TradeoffPoint& p = artifacts.points[0];
  CHECK(std::isfinite(p.empirical_distortion));
  CHECK(p.adversary_accuracy >= 0.0);
  CHECK(p.adversary_accuracy <= 1.0);
  CHECK(p.leakage_nats >= 0.0);

  // releases.csv: header plus 3 originals and 3 releases, pixels in [0, 1].
  REQUIRE(!artifacts.releases_csv.empty());
  std::ifstream in(artifacts.releases_csv);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line.rfind("lambda,index,label,kind", 0) == 0);
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::stringstream ss(line);
    std::string field;
    int col = 0;
    while (std::getline(ss, field, ',')) {
      if (col >= 4) {
        const double v = std::strtod(field.c_str(), nullptr);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
      ++col;
    }
    CHECK(col == 4 + 784);
  }
  CHECK(rows == 6);
}

TEST_CASE("idx-backed image runs use the provided files") {
  TempDir dir("privmech_test_mnist_idx");
  // Build a small IDX corpus from the synthetic generator.
  Rng rng(17);
  DigitData train = synthetic_digits(80, rng);
  DigitData test = synthetic_digits(30, rng);
  const std::string tri = (dir.path / "tri").string();
  const std::string trl = (dir.path / "trl").string();
  const std::string tei = (dir.path / "tei").string();
  const std::string tel = (dir.path / "tel").string();
  write_idx_images(tri, train.images, 28, 28);
  write_idx_labels(trl, train.labels);
  write_idx_images(tei, test.images, 28, 28);
  write_idx_labels(tel, test.labels);

  std::ostringstream cfg_text;
  cfg_text << "experiment = mnist-toy\nn_train = 64\nn_test = 25\n"
           << "epochs = 1\nhidden_width = 20\ngrid = 10\ndump_releases = 0\n"
           << "idx_train_images = " << tri << "\n"
           << "idx_train_labels = " << trl << "\n"
           << "idx_test_images = " << tei << "\n"
           << "idx_test_labels = " << tel << "\n";
  ExperimentConfig cfg = parse_config_text(cfg_text.str(), "inline");
  cfg.out_dir = dir.str();
  RunArtifacts artifacts = run_experiment(cfg);
  CHECK_FALSE(artifacts.any_failed);
  REQUIRE(artifacts.points.size() == 1);
  CHECK(std::isfinite(artifacts.points[0].empirical_distortion));

  // Incomplete path sets are rejected.
  std::ostringstream partial;
  partial << "experiment = mnist-toy\nidx_train_images = " << tri << "\n";
  ExperimentConfig bad = parse_config_text(partial.str(), "inline");
  bad.out_dir = dir.str();
  CHECK_THROWS_AS(run_experiment(bad), FormatError);
}

TEST_CASE("doubles are formatted with round-trip precision") {
  for (double v : {0.1, 1.0 / 3.0, 12345.6789, 1e-300, 0.0}) {
    const std::string s = format_double(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
  CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
}

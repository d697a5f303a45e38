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

#include "privmech/runner.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "privmech/common.hpp"
#include "privmech/oracle.hpp"

namespace privmech {

namespace {

namespace fs = std::filesystem;

std::vector<double> linspace(double lo, double hi, int count) {
  std::vector<double> out;
  if (count == 1) {
    out.push_back(lo);
    return out;
  }
  for (int i = 0; i < count; ++i) {
    out.push_back(lo + (hi - lo) * static_cast<double>(i) /
                           static_cast<double>(count - 1));
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

std::string experiment_name(ExperimentId id) {
  switch (id) {
    case ExperimentId::ScalarUd:
      return "scalar-ud";
    case ExperimentId::ScalarFd:
      return "scalar-fd";
    case ExperimentId::VectorUd:
      return "vector-ud";
    case ExperimentId::RateDistortion:
      return "rate-distortion";
    case ExperimentId::SymmetricPair:
      return "symmetric-pair";
    case ExperimentId::MnistToy:
      return "mnist-toy";
    case ExperimentId::OracleOnly:
      return "oracle-only";
  }
  return "unknown";
}

ExperimentId experiment_from_name(const std::string& name) {
  for (ExperimentId id :
       {ExperimentId::ScalarUd, ExperimentId::ScalarFd, ExperimentId::VectorUd,
        ExperimentId::RateDistortion, ExperimentId::SymmetricPair,
        ExperimentId::MnistToy, ExperimentId::OracleOnly}) {
    if (experiment_name(id) == name) return id;
  }
  throw FormatError("unknown experiment '" + name + "'");
}

ExperimentConfig default_config(ExperimentId id) {
  ExperimentConfig cfg;
  cfg.id = id;
  cfg.out_dir = "";
  switch (id) {
    case ExperimentId::ScalarUd:
      cfg.grid = linspace(0.0, 1.0, 20);
      cfg.lambda = 10.0;
      cfg.hidden_width = 5;
      cfg.seed_dim = 1;
      cfg.rho = 0.85;
      break;
    case ExperimentId::ScalarFd:
      cfg.grid = linspace(0.0, 0.8, 20);
      cfg.lambda = 50.0;
      cfg.hidden_width = 5;
      cfg.seed_dim = 1;
      cfg.rho = 0.85;
      cfg.observation = Observation::FullData;
      break;
    case ExperimentId::VectorUd:
      cfg.grid = linspace(0.0, 4.5, 20);
      cfg.lambda = 10.0;
      cfg.hidden_width = 20;
      cfg.seed_dim = 8;
      cfg.rho_vec = {0.47, 0.24, 0.85, 0.07, 0.66};
      break;
    case ExperimentId::RateDistortion:
      cfg.grid = linspace(0.0, 2.5, 20);
      cfg.lambda = 500.0;
      // The budget fills slowly where the curve is steep; 250 epochs leave
      // the low-distortion points visibly short of their targets.
      cfg.epochs = 400;
      cfg.hidden_width = 20;
      cfg.seed_dim = 8;
      cfg.variances = {0.47, 0.24, 0.85, 0.07, 0.66};
      cfg.observation = Observation::Identity;
      break;
    case ExperimentId::SymmetricPair:
      cfg.grid = {0.05, 0.15, 0.3, 0.45, 0.6};
      cfg.lambda = 500.0;
      // Small budgets fill slowly after the initial clamp-down; the extra
      // epochs cost fractions of a second on the 4x4 matrices.
      cfg.epochs = 500;
      cfg.m = 4;
      cfg.p = 0.25;
      break;
    case ExperimentId::MnistToy:
      cfg.grid = {35.0, 8.0};  // lambda grid
      cfg.gamma = 0.0;
      cfg.epochs = 5;
      cfg.minibatch_size = 100;
      cfg.adversary_steps = 1;
      cfg.hidden_width = 1000;
      cfg.seed_dim = 20;
      cfg.n_train = 2000;
      cfg.n_test = 500;
      cfg.penalty_budget = false;
      cfg.dump_releases = 16;
      break;
    case ExperimentId::OracleOnly:
      cfg.grid = linspace(0.0, 1.0, 21);
      cfg.curve = ExperimentId::ScalarUd;
      break;
  }
  return cfg;
}

// --- Config parsing -----------------------------------------------------------

namespace {

const std::set<std::string> kSharedKeys = {
    "experiment", "seed",        "out_dir",         "workers",
    "grid",       "grid_min",    "grid_max",        "grid_count",
    "epochs",     "minibatch_size", "adversary_steps", "k",
    "lambda",     "gamma",       "budget",          "n_train",
    "n_test",     "hidden_width", "seed_dim",       "dump_releases"};

std::set<std::string> allowed_keys(ExperimentId id) {
  std::set<std::string> keys = kSharedKeys;
  switch (id) {
    case ExperimentId::ScalarUd:
      keys.insert({"rho", "var_x", "var_y"});
      break;
    case ExperimentId::ScalarFd:
      keys.insert({"rho"});
      break;
    case ExperimentId::VectorUd:
      keys.insert({"rho_vec"});
      break;
    case ExperimentId::RateDistortion:
      keys.insert({"variances"});
      break;
    case ExperimentId::SymmetricPair:
      keys.insert({"m", "p", "observation", "release_alphabet"});
      break;
    case ExperimentId::MnistToy:
      keys.insert({"idx_train_images", "idx_train_labels", "idx_test_images",
                   "idx_test_labels"});
      break;
    case ExperimentId::OracleOnly:
      keys.insert({"curve", "rho", "var_x", "var_y", "rho_vec", "variances",
                   "m", "p", "observation"});
      break;
  }
  return keys;
}

struct ConfigEntry {
  std::string value;
  int line;
};

[[noreturn]] void config_error(const std::string& origin, int line,
                               const std::string& what) {
  throw FormatError(origin + ":" + std::to_string(line) + ": " + what);
}

double parse_double_value(const std::string& origin, const ConfigEntry& e,
                          const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(e.value, &used);
    if (used != e.value.size()) throw std::invalid_argument("trailing text");
    return v;
  } catch (const std::exception&) {
    config_error(origin, e.line, "key '" + key + "': expected a number, got '" +
                                     e.value + "'");
  }
}

int parse_int_value(const std::string& origin, const ConfigEntry& e,
                    const std::string& key) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(e.value, &used);
    if (used != e.value.size()) throw std::invalid_argument("trailing text");
    return v;
  } catch (const std::exception&) {
    config_error(origin, e.line, "key '" + key +
                                     "': expected an integer, got '" +
                                     e.value + "'");
  }
}

std::vector<double> parse_double_list(const std::string& origin,
                                      const ConfigEntry& e,
                                      const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(e.value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      config_error(origin, e.line, "key '" + key + "': bad list entry '" +
                                       item + "'");
    }
  }
  if (out.empty()) {
    config_error(origin, e.line, "key '" + key + "': empty list");
  }
  return out;
}

Observation parse_observation(const std::string& origin, const ConfigEntry& e) {
  if (e.value == "ud") return Observation::UsefulOnly;
  if (e.value == "fd") return Observation::FullData;
  config_error(origin, e.line,
               "key 'observation': expected 'ud' or 'fd', got '" + e.value +
                   "'");
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& origin) {
  std::map<std::string, ConfigEntry> entries;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      config_error(origin, line_no, "expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) config_error(origin, line_no, "empty key");
    if (entries.count(key)) {
      config_error(origin, line_no, "duplicate key '" + key + "'");
    }
    entries[key] = {value, line_no};
  }

  const auto exp_it = entries.find("experiment");
  if (exp_it == entries.end()) {
    throw FormatError(origin + ": missing required key 'experiment'");
  }
  ExperimentId id;
  try {
    id = experiment_from_name(exp_it->second.value);
  } catch (const FormatError& e) {
    config_error(origin, exp_it->second.line, e.what());
  }

  const std::set<std::string> allowed = allowed_keys(id);
  for (const auto& [key, entry] : entries) {
    if (!allowed.count(key)) {
      config_error(origin, entry.line,
                   "unknown key '" + key + "' for experiment '" +
                       experiment_name(id) + "'");
    }
  }

  ExperimentConfig cfg = default_config(id);
  std::optional<double> grid_min, grid_max;
  std::optional<int> grid_count;
  for (const auto& [key, e] : entries) {
    if (key == "experiment") continue;
    if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(
          std::strtoull(e.value.c_str(), nullptr, 10));
    } else if (key == "out_dir") {
      cfg.out_dir = e.value;
    } else if (key == "workers") {
      cfg.workers = parse_int_value(origin, e, key);
    } else if (key == "grid") {
      cfg.grid = parse_double_list(origin, e, key);
    } else if (key == "grid_min") {
      grid_min = parse_double_value(origin, e, key);
    } else if (key == "grid_max") {
      grid_max = parse_double_value(origin, e, key);
    } else if (key == "grid_count") {
      grid_count = parse_int_value(origin, e, key);
    } else if (key == "epochs") {
      cfg.epochs = parse_int_value(origin, e, key);
    } else if (key == "minibatch_size") {
      cfg.minibatch_size = parse_int_value(origin, e, key);
    } else if (key == "adversary_steps") {
      cfg.adversary_steps = parse_int_value(origin, e, key);
    } else if (key == "k") {
      cfg.k = parse_int_value(origin, e, key);
    } else if (key == "lambda") {
      cfg.lambda = parse_double_value(origin, e, key);
    } else if (key == "gamma") {
      cfg.gamma = parse_double_value(origin, e, key);
    } else if (key == "budget") {
      if (e.value == "penalty") {
        cfg.penalty_budget = true;
      } else if (e.value == "lagrangian") {
        cfg.penalty_budget = false;
      } else {
        config_error(origin, e.line,
                     "key 'budget': expected 'penalty' or 'lagrangian'");
      }
    } else if (key == "n_train") {
      cfg.n_train = parse_int_value(origin, e, key);
    } else if (key == "n_test") {
      cfg.n_test = parse_int_value(origin, e, key);
    } else if (key == "hidden_width") {
      cfg.hidden_width = parse_int_value(origin, e, key);
    } else if (key == "seed_dim") {
      cfg.seed_dim = parse_int_value(origin, e, key);
    } else if (key == "dump_releases") {
      cfg.dump_releases = parse_int_value(origin, e, key);
    } else if (key == "rho") {
      cfg.rho = parse_double_value(origin, e, key);
    } else if (key == "var_x") {
      cfg.var_x = parse_double_value(origin, e, key);
    } else if (key == "var_y") {
      cfg.var_y = parse_double_value(origin, e, key);
    } else if (key == "rho_vec") {
      cfg.rho_vec = parse_double_list(origin, e, key);
    } else if (key == "variances") {
      cfg.variances = parse_double_list(origin, e, key);
    } else if (key == "m") {
      cfg.m = parse_int_value(origin, e, key);
    } else if (key == "p") {
      cfg.p = parse_double_value(origin, e, key);
    } else if (key == "observation") {
      cfg.observation = parse_observation(origin, e);
    } else if (key == "release_alphabet") {
      cfg.release_alphabet = parse_int_value(origin, e, key);
    } else if (key == "idx_train_images") {
      cfg.idx_train_images = e.value;
    } else if (key == "idx_train_labels") {
      cfg.idx_train_labels = e.value;
    } else if (key == "idx_test_images") {
      cfg.idx_test_images = e.value;
    } else if (key == "idx_test_labels") {
      cfg.idx_test_labels = e.value;
    } else if (key == "curve") {
      try {
        cfg.curve = experiment_from_name(e.value);
      } catch (const FormatError& err) {
        config_error(origin, e.line, err.what());
      }
      if (cfg.curve == ExperimentId::MnistToy ||
          cfg.curve == ExperimentId::OracleOnly) {
        config_error(origin, e.line,
                     "key 'curve': no closed form for '" + e.value + "'");
      }
    } else {
      config_error(origin, e.line, "unhandled key '" + key + "'");
    }
  }

  if (grid_min || grid_max || grid_count) {
    if (!(grid_min && grid_max && grid_count)) {
      throw FormatError(origin +
                        ": grid_min, grid_max and grid_count must be given "
                        "together");
    }
    if (*grid_count < 1) {
      throw FormatError(origin + ": grid_count must be >= 1");
    }
    cfg.grid = linspace(*grid_min, *grid_max, *grid_count);
  }
  if (cfg.grid.empty()) {
    throw FormatError(origin + ": grid is empty");
  }
  if (cfg.release_alphabet == 0) cfg.release_alphabet = cfg.m;
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("config '" + path + "': cannot open");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

// --- Oracle curves --------------------------------------------------------------

namespace {

JointModel make_model(const ExperimentConfig& cfg, ExperimentId id) {
  switch (id) {
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
      throw ContractError("make_model: experiment has no data model");
  }
}

}  // namespace

double oracle_value(const ExperimentConfig& cfg, double grid_value) {
  const ExperimentId id =
      cfg.id == ExperimentId::OracleOnly ? cfg.curve : cfg.id;
  switch (id) {
    case ExperimentId::ScalarUd:
      return scalar_ud_optimum({cfg.var_x, cfg.var_y, cfg.rho}, grid_value)
          .leakage_nats;
    case ExperimentId::ScalarFd:
      return scalar_fd_optimum(cfg.rho, grid_value).leakage_nats;
    case ExperimentId::VectorUd: {
      VectorGaussParams params;
      params.rho = cfg.rho_vec;
      params.c = 1.0;
      return vector_ud_optimum(params, grid_value).leakage_nats;
    }
    case ExperimentId::RateDistortion:
      return rate_distortion(cfg.variances, grid_value).leakage_nats;
    case ExperimentId::SymmetricPair:
      return symmetric_pair_curve({cfg.m, cfg.p}, grid_value,
                                  cfg.observation);
    case ExperimentId::MnistToy:
    case ExperimentId::OracleOnly:
      return std::numeric_limits<double>::quiet_NaN();
  }
  return std::numeric_limits<double>::quiet_NaN();
}

// --- CSV ------------------------------------------------------------------------

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_tradeoff_csv(const std::string& path,
                        const std::vector<TradeoffPoint>& points) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out << kTradeoffHeader << "\n";
  for (const TradeoffPoint& p : points) {
    out << format_double(p.grid_value) << ','
        << format_double(p.empirical_distortion) << ','
        << format_double(p.leakage_nats) << ','
        << format_double(p.oracle_leakage_nats) << ','
        << format_double(p.adversary_accuracy) << ',' << p.seed << "\n";
  }
  if (!out) throw FormatError("write failed for '" + path + "'");
}

void write_history_csv(const std::string& path,
                       const std::vector<HistoryRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out << "delta_target,epoch,mean_loss\n";
  for (const HistoryRow& r : rows) {
    out << format_double(r.grid_value) << ',' << r.epoch << ','
        << format_double(r.mean_loss) << "\n";
  }
  if (!out) throw FormatError("write failed for '" + path + "'");
}

// --- Experiment execution --------------------------------------------------------

namespace {

struct EvalContext {
  const ExperimentConfig* cfg;
};

PointFactory continuous_factory(const ExperimentConfig& cfg,
                                const JointModel& model) {
  const int w_dim = model.w_dim();
  const int z_dim = model.y_dim();
  const int x_dim = model.x_dim();
  return [&cfg, w_dim, z_dim, x_dim](double grid_value,
                                     Rng& init) -> SweepPointSetup {
    SweepPointSetup setup;
    const std::vector<int> hidden = {cfg.hidden_width, cfg.hidden_width};
    setup.mechanism = MechanismNet::universal_approximator(
        w_dim, cfg.seed_dim, hidden, z_dim, Activation::ReLU,
        Activation::None, init);
    setup.adversary = AdversaryNet::diagonal_gaussian(z_dim, hidden, x_dim,
                                                      Activation::ReLU, init);
    setup.cfg.epochs = cfg.epochs;
    setup.cfg.minibatch_size = cfg.minibatch_size;
    setup.cfg.adversary_steps = cfg.adversary_steps;
    setup.cfg.k = cfg.k;
    setup.cfg.distortion = {DistortionKind::SquaredError};
    setup.cfg.budget = cfg.penalty_budget
                           ? BudgetMode(Penalty{cfg.lambda, grid_value})
                           : BudgetMode(Lagrangian{cfg.lambda});
    return setup;
  };
}

PointEvaluator continuous_evaluator(const ExperimentConfig& cfg) {
  return [&cfg](double /*grid_value*/, const MechanismNet& mechanism,
                const AdversaryNet&, const Dataset& test,
                Rng& eval) -> TradeoffPoint {
    ad::Tensor w = tensor_from_matrix(test.w);
    Eigen::MatrixXd z = matrix_from_tensor(mechanism.sample(w, eval, 1)[0]);
    TradeoffPoint point;
    MiEstimate mi = gaussian_mi_estimate(test.x, z);
    point.leakage_nats = mi.nats;
    point.leakage_capped = mi.capped;
    point.empirical_distortion =
        empirical_distortion(test.y, z, {DistortionKind::SquaredError});
    point.estimator = LeakageEstimator::GaussianApprox;
    point.lambda = cfg.lambda;
    return point;
  };
}

PointFactory symmetric_factory(const ExperimentConfig& cfg,
                               const JointModel& model) {
  const int w_dim = model.w_dim();
  const int x_dim = model.x_dim();
  return [&cfg, w_dim, x_dim](double grid_value,
                              Rng& init) -> SweepPointSetup {
    SweepPointSetup setup;
    setup.mechanism = MechanismNet::categorical(w_dim, {},
                                                cfg.release_alphabet, init);
    setup.adversary = AdversaryNet::categorical(cfg.release_alphabet, {},
                                                x_dim, Activation::ReLU, init);
    setup.cfg.epochs = cfg.epochs;
    setup.cfg.minibatch_size = cfg.minibatch_size;
    setup.cfg.adversary_steps = cfg.adversary_steps;
    setup.cfg.k = 1;
    setup.cfg.distortion = {DistortionKind::ZeroOne};
    setup.cfg.budget = cfg.penalty_budget
                           ? BudgetMode(Penalty{cfg.lambda, grid_value})
                           : BudgetMode(Lagrangian{cfg.lambda});
    return setup;
  };
}

// Joint pmf over X x Z induced by the true model and a learned channel
// matrix P(z|w), rows indexed by w.
Eigen::MatrixXd induced_joint_xz(const JointModel& model,
                                 const Eigen::MatrixXd& channel) {
  const Eigen::MatrixXd joint_xy = model.joint_pmf();
  const int m = static_cast<int>(joint_xy.rows());
  const int nz = static_cast<int>(channel.cols());
  Eigen::MatrixXd joint_xz = Eigen::MatrixXd::Zero(m, nz);
  for (int x = 0; x < m; ++x) {
    for (int y = 0; y < m; ++y) {
      const int w = model.observation() == Observation::FullData ? x * m + y
                                                                 : y;
      joint_xz.row(x) += joint_xy(x, y) * channel.row(w);
    }
  }
  return joint_xz;
}

// Exact expected distortion of a learned channel against the true joint.
double exact_channel_distortion(const JointModel& model,
                                const Eigen::MatrixXd& channel,
                                const DistortionFn& dist) {
  const Eigen::MatrixXd joint_xy = model.joint_pmf();
  const int m = static_cast<int>(joint_xy.rows());
  const int nz = static_cast<int>(channel.cols());
  double acc = 0.0;
  for (int x = 0; x < m; ++x) {
    for (int y = 0; y < m; ++y) {
      const int w = model.observation() == Observation::FullData ? x * m + y
                                                                 : y;
      for (int z = 0; z < nz; ++z) {
        acc += joint_xy(x, y) * channel(w, z) * dist.discrete(y, z);
      }
    }
  }
  return acc;
}

PointEvaluator symmetric_evaluator(const ExperimentConfig& cfg,
                                   const JointModel& model) {
  return [&cfg, &model](double /*grid_value*/, const MechanismNet& mechanism,
                        const AdversaryNet& adversary, const Dataset& test,
                        Rng& eval) -> TradeoffPoint {
    const int w_dim = model.w_dim();
    Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(w_dim, w_dim);
    Eigen::MatrixXd channel =
        matrix_from_tensor(mechanism.distribution(tensor_from_matrix(eye)));

    TradeoffPoint point;
    point.leakage_nats = exact_discrete_mi(induced_joint_xz(model, channel));
    point.empirical_distortion =
        exact_channel_distortion(model, channel, {DistortionKind::ZeroOne});
    point.estimator = LeakageEstimator::ExactDiscrete;
    point.lambda = cfg.lambda;

    // Adversary accuracy on sampled test releases.
    const int n = test.n();
    std::vector<int> z_ids(n);
    for (int i = 0; i < n; ++i) {
      const double u = eval.uniform();
      double acc = 0.0;
      int z = 0;
      for (int c = 0; c < channel.cols(); ++c) {
        acc += channel(test.w_id[i], c);
        if (u < acc) {
          z = c;
          break;
        }
        z = c;
      }
      z_ids[i] = z;
    }
    Eigen::MatrixXd z_onehot =
        Eigen::MatrixXd::Zero(n, channel.cols());
    for (int i = 0; i < n; ++i) z_onehot(i, z_ids[i]) = 1.0;
    point.adversary_accuracy = adversary_accuracy(adversary, test.x_id,
                                                  z_onehot);
    return point;
  };
}

struct MnistData {
  Dataset train;
  Dataset test;
};

Dataset dataset_from_images(const Eigen::MatrixXd& images,
                            const std::vector<int>& labels) {
  Dataset d;
  d.w = images;
  d.y = images;
  d.x = Eigen::MatrixXd::Zero(images.rows(), 10);
  d.x_id = labels;
  for (Eigen::Index i = 0; i < images.rows(); ++i) d.x(i, labels[i]) = 1.0;
  return d;
}

MnistData load_mnist_data(const ExperimentConfig& cfg) {
  MnistData data;
  const bool any_path = !cfg.idx_train_images.empty() ||
                        !cfg.idx_train_labels.empty() ||
                        !cfg.idx_test_images.empty() ||
                        !cfg.idx_test_labels.empty();
  if (any_path) {
    if (cfg.idx_train_images.empty() || cfg.idx_train_labels.empty() ||
        cfg.idx_test_images.empty() || cfg.idx_test_labels.empty()) {
      throw FormatError(
          "mnist-toy: all four idx_* paths are required to use IDX data");
    }
    IdxImages train_images = load_idx_images(cfg.idx_train_images);
    std::vector<int> train_labels = load_idx_labels(cfg.idx_train_labels);
    IdxImages test_images = load_idx_images(cfg.idx_test_images);
    std::vector<int> test_labels = load_idx_labels(cfg.idx_test_labels);
    if (train_images.pixels.rows() !=
            static_cast<Eigen::Index>(train_labels.size()) ||
        test_images.pixels.rows() !=
            static_cast<Eigen::Index>(test_labels.size())) {
      throw FormatError("mnist-toy: image/label counts differ");
    }
    const int n_train = std::min<int>(cfg.n_train,
                                      static_cast<int>(train_labels.size()));
    const int n_test =
        std::min<int>(cfg.n_test, static_cast<int>(test_labels.size()));
    data.train = dataset_from_images(
        train_images.pixels.topRows(n_train),
        {train_labels.begin(), train_labels.begin() + n_train});
    data.test = dataset_from_images(
        test_images.pixels.topRows(n_test),
        {test_labels.begin(), test_labels.begin() + n_test});
    return data;
  }
  Rng base(cfg.seed);
  Rng train_rng = base.child(seed_tag::kTrainData);
  Rng test_rng = base.child(seed_tag::kTestData);
  DigitData train_digits = synthetic_digits(cfg.n_train, train_rng);
  DigitData test_digits = synthetic_digits(cfg.n_test, test_rng);
  data.train = dataset_from_images(train_digits.images, train_digits.labels);
  data.test = dataset_from_images(test_digits.images, test_digits.labels);
  return data;
}

void write_releases_csv(const std::string& path,
                        const std::vector<std::string>& rows,
                        const std::string& header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out << header << "\n";
  for (const std::string& r : rows) out << r << "\n";
  if (!out) throw FormatError("write failed for '" + path + "'");
}

RunArtifacts run_mnist_toy(const ExperimentConfig& cfg,
                           const std::string& out_dir) {
  MnistData data = load_mnist_data(cfg);
  const int image_dim = static_cast<int>(data.train.w.cols());

  std::vector<SweepPointOutcome> outcomes(cfg.grid.size());
  std::vector<std::vector<std::string>> release_rows(cfg.grid.size());

  const auto run_point = [&](std::size_t i) {
    const double lambda = cfg.grid[i];
    Rng point_rng = Rng(cfg.seed).child(i);
    TradeoffPoint& point = outcomes[i].point;
    point.grid_value = lambda;
    point.seed = point_rng.seed();
    point.model_id = "digits";
    point.lambda = lambda;
    try {
      Rng init = point_rng.child(seed_tag::kInit);
      Rng eval = point_rng.child(seed_tag::kEval);
      const std::vector<int> hidden = {cfg.hidden_width, cfg.hidden_width};
      MechanismNet mechanism = MechanismNet::universal_approximator(
          image_dim, cfg.seed_dim, hidden, image_dim, Activation::Tanh,
          Activation::Sigmoid, init);
      AdversaryNet adversary = AdversaryNet::categorical(
          image_dim, hidden, 10, Activation::Tanh, init);
      std::optional<DiscriminatorNet> discriminator;
      if (cfg.gamma > 0.0) {
        discriminator = DiscriminatorNet::make(image_dim, 500, init);
      }

      TrainConfig tc;
      tc.epochs = cfg.epochs;
      tc.minibatch_size = cfg.minibatch_size;
      tc.adversary_steps = cfg.adversary_steps;
      tc.k = cfg.k;
      tc.distortion = {DistortionKind::PixelBernoulliCE};
      tc.budget = Lagrangian{lambda};
      tc.gamma = cfg.gamma;
      tc.seed = point_rng.child(seed_tag::kTrainLoop).seed();

      TrainResult trained =
          train(mechanism, adversary,
                discriminator ? &*discriminator : nullptr, data.train, tc);
      outcomes[i].epoch_mean_loss = std::move(trained.epoch_mean_loss);

      ad::Tensor w = tensor_from_matrix(data.test.w);
      Eigen::MatrixXd z = matrix_from_tensor(mechanism.sample(w, eval, 1)[0]);
      point.empirical_distortion = empirical_distortion(
          data.test.y, z, {DistortionKind::PixelBernoulliCE});
      point.adversary_accuracy =
          adversary_accuracy(adversary, data.test.x_id, z);
      point.leakage_nats = std::max(
          0.0, variational_mi_lower_bound(adversary, data.test.x_id, z,
                                          std::log(10.0)));
      point.estimator = LeakageEstimator::VariationalBound;

      const int dump = std::min<int>(cfg.dump_releases,
                                     static_cast<int>(z.rows()));
      for (int r = 0; r < dump; ++r) {
        for (const bool original : {true, false}) {
          std::ostringstream row;
          row << format_double(lambda) << ',' << r << ','
              << data.test.x_id[r] << ',' << (original ? "original" : "release");
          const auto& mat = original ? data.test.y : z;
          for (int c = 0; c < image_dim; ++c) {
            row << ',' << format_double(mat(r, c));
          }
          release_rows[i].push_back(row.str());
        }
      }
    } catch (const std::exception& e) {
      point.failed = true;
      point.error = e.what();
      point.empirical_distortion = std::numeric_limits<double>::quiet_NaN();
      point.leakage_nats = std::numeric_limits<double>::quiet_NaN();
      point.adversary_accuracy = std::numeric_limits<double>::quiet_NaN();
    }
  };

  const int workers =
      std::max(1, std::min<int>(cfg.workers, static_cast<int>(cfg.grid.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < cfg.grid.size(); ++i) run_point(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < cfg.grid.size();
             i = next.fetch_add(1)) {
          run_point(i);
        }
      });
    }
    for (std::thread& th : pool) th.join();
  }

  RunArtifacts artifacts;
  std::vector<HistoryRow> history;
  for (const SweepPointOutcome& o : outcomes) {
    artifacts.points.push_back(o.point);
    artifacts.any_failed = artifacts.any_failed || o.point.failed;
    for (std::size_t e = 0; e < o.epoch_mean_loss.size(); ++e) {
      history.push_back({o.point.grid_value, static_cast<int>(e),
                         o.epoch_mean_loss[e]});
    }
  }

  artifacts.tradeoff_csv = (fs::path(out_dir) / "tradeoff.csv").string();
  artifacts.history_csv = (fs::path(out_dir) / "history.csv").string();
  write_tradeoff_csv(artifacts.tradeoff_csv, artifacts.points);
  write_history_csv(artifacts.history_csv, history);

  if (cfg.dump_releases > 0) {
    std::ostringstream header;
    header << "lambda,index,label,kind";
    for (int c = 0; c < image_dim; ++c) header << ",p" << c;
    std::vector<std::string> all_rows;
    for (const auto& rows : release_rows) {
      all_rows.insert(all_rows.end(), rows.begin(), rows.end());
    }
    artifacts.releases_csv = (fs::path(out_dir) / "releases.csv").string();
    write_releases_csv(artifacts.releases_csv, all_rows, header.str());
  }
  return artifacts;
}

}  // namespace

RunArtifacts run_experiment(const ExperimentConfig& cfg) {
  std::string out_dir = cfg.out_dir;
  if (out_dir.empty()) {
    const char* env = std::getenv("PRIVMECH_OUT");
    out_dir = (env != nullptr && *env != '\0') ? env : ".";
  }
  fs::create_directories(out_dir);

  if (cfg.id == ExperimentId::MnistToy) {
    return run_mnist_toy(cfg, out_dir);
  }

  RunArtifacts artifacts;
  std::vector<HistoryRow> history;

  if (cfg.id == ExperimentId::OracleOnly) {
    for (double v : cfg.grid) {
      TradeoffPoint p;
      p.grid_value = v;
      p.empirical_distortion = v;
      p.leakage_nats = oracle_value(cfg, v);
      p.oracle_leakage_nats = p.leakage_nats;
      p.adversary_accuracy = std::numeric_limits<double>::quiet_NaN();
      p.seed = cfg.seed;
      artifacts.points.push_back(p);
    }
  } else {
    JointModel model = make_model(cfg, cfg.id);
    PointFactory factory = cfg.id == ExperimentId::SymmetricPair
                               ? symmetric_factory(cfg, model)
                               : continuous_factory(cfg, model);
    PointEvaluator evaluator = cfg.id == ExperimentId::SymmetricPair
                                   ? symmetric_evaluator(cfg, model)
                                   : continuous_evaluator(cfg);
    std::vector<SweepPointOutcome> outcomes =
        sweep(model, cfg.grid, cfg.n_train, cfg.n_test, factory, evaluator,
              cfg.seed, cfg.workers);
    for (SweepPointOutcome& o : outcomes) {
      o.point.oracle_leakage_nats = oracle_value(cfg, o.point.grid_value);
      artifacts.points.push_back(o.point);
      artifacts.any_failed = artifacts.any_failed || o.point.failed;
      for (std::size_t e = 0; e < o.epoch_mean_loss.size(); ++e) {
        history.push_back({o.point.grid_value, static_cast<int>(e),
                           o.epoch_mean_loss[e]});
      }
    }
  }

  artifacts.tradeoff_csv = (fs::path(out_dir) / "tradeoff.csv").string();
  artifacts.history_csv = (fs::path(out_dir) / "history.csv").string();
  write_tradeoff_csv(artifacts.tradeoff_csv, artifacts.points);
  write_history_csv(artifacts.history_csv, history);
  return artifacts;
}

// --- Compare ---------------------------------------------------------------------

CompareReport compare_tradeoff_csv(const std::string& path, double tolerance) {
  std::ifstream in(path);
  if (!in) throw FormatError("compare: cannot open '" + path + "'");
  std::string header;
  if (!std::getline(in, header)) {
    throw FormatError("compare: '" + path + "' is empty");
  }
  if (trim(header) != kTradeoffHeader) {
    throw FormatError("compare: '" + path +
                      "' does not have the tradeoff CSV header");
  }

  CompareReport report;
  report.tolerance = tolerance;
  std::string line;
  int line_no = 1;
  double abs_sum = 0.0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 6) {
      throw FormatError("compare: " + path + ":" + std::to_string(line_no) +
                        ": expected 6 columns, got " +
                        std::to_string(fields.size()));
    }
    const double delta = std::strtod(fields[0].c_str(), nullptr);
    const double leakage = std::strtod(fields[2].c_str(), nullptr);
    const double oracle = std::strtod(fields[3].c_str(), nullptr);
    if (!std::isfinite(oracle)) {
      ++report.skipped;
      continue;
    }
    CompareRow row;
    row.delta_target = delta;
    row.leakage_nats = leakage;
    row.oracle_leakage_nats = oracle;
    row.gap = std::isfinite(leakage)
                  ? leakage - oracle
                  : std::numeric_limits<double>::infinity();
    report.rows.push_back(row);
    const double abs_gap = std::abs(row.gap);
    abs_sum += abs_gap;
    report.max_abs_gap = std::max(report.max_abs_gap, abs_gap);
    if (abs_gap > tolerance) {
      report.pass = false;
      report.failing_deltas.push_back(delta);
    }
  }
  if (!report.rows.empty()) {
    report.mean_abs_gap = abs_sum / static_cast<double>(report.rows.size());
  }
  return report;
}

std::string render_compare_report(const CompareReport& report) {
  std::ostringstream out;
  for (const CompareRow& r : report.rows) {
    out << "delta=" << format_double(r.delta_target)
        << " leakage=" << format_double(r.leakage_nats)
        << " oracle=" << format_double(r.oracle_leakage_nats)
        << " gap=" << format_double(r.gap) << "\n";
  }
  out << "points=" << report.rows.size() << " skipped=" << report.skipped
      << " max|gap|=" << format_double(report.max_abs_gap)
      << " mean|gap|=" << format_double(report.mean_abs_gap) << "\n";
  if (report.pass) {
    out << "PASS (tolerance " << format_double(report.tolerance) << ")\n";
  } else {
    out << "FAIL (tolerance " << format_double(report.tolerance) << "):";
    for (double d : report.failing_deltas) {
      out << ' ' << format_double(d);
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace privmech

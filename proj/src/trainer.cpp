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

#include "privmech/trainer.hpp"

#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include "privmech/common.hpp"

namespace privmech {

namespace {

using ad::Tensor;

Tensor rows_subset(const Eigen::MatrixXd& m, const std::vector<int>& idx,
                   int begin, int count) {
  const int cols = static_cast<int>(m.cols());
  std::vector<double> v(static_cast<std::size_t>(count) * cols);
  for (int i = 0; i < count; ++i) {
    const int r = idx[begin + i];
    for (int c = 0; c < cols; ++c) v[i * cols + c] = m(r, c);
  }
  return Tensor::constant(count, cols, std::move(v));
}

// d(y_i, z) for every candidate release symbol.
Tensor distortion_table(const Dataset& data, const std::vector<int>& idx,
                        int begin, int count, int alphabet,
                        const DistortionFn& dist) {
  std::vector<double> v(static_cast<std::size_t>(count) * alphabet);
  for (int i = 0; i < count; ++i) {
    const int y = data.y_id[idx[begin + i]];
    for (int z = 0; z < alphabet; ++z) v[i * alphabet + z] = dist.discrete(y, z);
  }
  return Tensor::constant(count, alphabet, std::move(v));
}

double tensor_mean(const Tensor& t) {
  double s = 0.0;
  for (double v : t.values()) s += v;
  return s / static_cast<double>(t.size());
}

// gamma * mean_j [ log D(z_j) + log(1 - D(y)) ] over the sampled releases.
Tensor discriminator_terms(const DiscriminatorNet& disc,
                           const std::vector<Tensor>& releases,
                           const Tensor& y, double gamma) {
  Tensor log_dy = ad::log_op(ad::clamp_min(
      ad::sub(Tensor::scalar(1.0), disc.prob(y)), kProbEps));
  Tensor acc;
  for (const Tensor& z : releases) {
    Tensor log_dz = ad::log_op(ad::clamp_min(disc.prob(z), kProbEps));
    Tensor term = ad::add(log_dz, log_dy);
    acc = acc.defined() ? ad::add(acc, term) : term;
  }
  return ad::mean(
      ad::scalar_mul(acc, gamma / static_cast<double>(releases.size())));
}

void check_finite_loss_value(double loss, int epoch, int batch,
                             double logq_mean, double dist_mean) {
  if (std::isfinite(loss)) return;
  std::ostringstream msg;
  msg << "training diverged: loss=" << loss << " at epoch " << epoch
      << ", batch " << batch << " (mean log Q=" << logq_mean
      << ", mean distortion=" << dist_mean << ")";
  throw TrainDivergedError(msg.str(), epoch, batch);
}

struct BatchPlan {
  std::vector<int> idx;
  int batch_size;
  int n;

  int batches() const { return (n + batch_size - 1) / batch_size; }
  int begin(int b) const { return b * batch_size; }
  int count(int b) const { return std::min(batch_size, n - begin(b)); }
};

// Dual multiplier that steers the batch-mean distortion onto the budget.
// The one-sided quadratic penalty alone settles at an excess of
// |dI/d delta| / (2 lambda) above the budget, and provides no pull at all
// from below; the multiplier absorbs the tradeoff slope so the expected
// distortion converges to delta itself. It is signed: a negative value
// rewards distortion while the mechanism is still under budget, which is
// where the optimum sits for every budget inside the useful range.
class BudgetMultiplier {
 public:
  explicit BudgetMultiplier(const BudgetMode& budget) {
    if (const auto* pen = std::get_if<Penalty>(&budget)) {
      active_ = true;
      delta_ = pen->delta;
      // Kept well below the penalty curvature so the multiplier tracks the
      // slow constraint violation rather than per-batch noise.
      rate_ = std::min(0.1, 0.01 * pen->lambda);
      // Integration window: violations beyond this are the quadratic
      // penalty's job, and integrating them would wind the multiplier up
      // during the initial transient. The floor keeps the stationary excess
      // |dI/d delta| / (2 lambda) inside the window.
      window_ = std::max(0.1 * delta_, 0.1);
    }
  }

  // mu * d-bar, added to the mechanism objective (zero when inactive).
  Tensor term(const Tensor& mean_dist) const {
    return ad::scalar_mul(mean_dist, mu_);
  }

  void update(double mean_dist_value) {
    if (!active_) return;
    const double excess = mean_dist_value - delta_;
    if (excess >= window_) return;
    mu_ += rate_ * std::max(excess, -window_);
  }

  bool active() const { return active_; }

 private:
  bool active_ = false;
  double delta_ = 0.0;
  double rate_ = 0.0;
  double window_ = 0.0;
  double mu_ = 0.0;
};

}  // namespace

TrainResult train(MechanismNet& mechanism, AdversaryNet& adversary,
                  DiscriminatorNet* discriminator, const Dataset& data,
                  const TrainConfig& cfg) {
  if (data.n() < 1) throw ContractError("train: dataset is empty");
  if (cfg.epochs < 1 || cfg.minibatch_size < 1 || cfg.adversary_steps < 1) {
    throw ContractError("train: epochs, minibatch_size and adversary_steps "
                        "must be >= 1");
  }
  if (cfg.gamma > 0.0 && discriminator == nullptr) {
    throw ContractError("train: gamma > 0 requires a discriminator");
  }

  Rng base(cfg.seed);
  Rng shuffle_rng = base.child(1);
  Rng noise_rng = base.child(2);

  Adam mech_opt(mechanism.parameters(), cfg.adam);
  Adam adv_opt(adversary.parameters(), cfg.adam);
  std::optional<Adam> disc_opt;
  if (cfg.gamma > 0.0) disc_opt.emplace(discriminator->parameters(), cfg.adam);

  const bool finite = mechanism.is_categorical();
  if (finite && !data.discrete) {
    throw ContractError("train: categorical mechanism needs discrete data");
  }

  BatchPlan plan;
  plan.n = data.n();
  plan.batch_size = std::min(cfg.minibatch_size, plan.n);
  plan.idx.resize(plan.n);
  std::iota(plan.idx.begin(), plan.idx.end(), 0);

  TrainResult result;
  result.epoch_mean_loss.reserve(cfg.epochs);
  BudgetMultiplier dual(cfg.budget);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(plan.idx);
    double epoch_loss = 0.0;
    for (int b = 0; b < plan.batches(); ++b) {
      const int begin = plan.begin(b);
      const int count = plan.count(b);
      Tensor w = rows_subset(data.w, plan.idx, begin, count);
      Tensor x = rows_subset(data.x, plan.idx, begin, count);
      Tensor y = rows_subset(data.y, plan.idx, begin, count);

      double loss_value;
      if (finite) {
        const auto* head = std::get_if<CategoricalHead>(&mechanism.head());
        Tensor dtable = distortion_table(data, plan.idx, begin, count,
                                         head->alphabet, cfg.distortion);
        Tensor p_frozen = mechanism.distribution(w).detach();
        for (int s = 0; s < cfg.adversary_steps; ++s) {
          Tensor adv_loss =
              finite_loss(x, p_frozen, adversary, dtable, cfg.budget);
          adv_opt.zero_grad();
          ad::backward(ad::scalar_mul(adv_loss, -1.0));
          adv_opt.step();
        }
        Tensor p = mechanism.distribution(w);
        Tensor loss = finite_loss(x, p, adversary, dtable, cfg.budget);
        Tensor mean_dist = ad::mean(ad::row_sum(ad::mul(p, dtable)));
        if (dual.active()) loss = ad::add(loss, dual.term(mean_dist));
        mech_opt.zero_grad();
        ad::backward(loss);
        mech_opt.step();
        dual.update(mean_dist.item());
        loss_value = loss.item();
        check_finite_loss_value(loss_value, epoch, b, loss_value, 0.0);
      } else {
        std::vector<Tensor> frozen;
        for (const Tensor& z : mechanism.sample(w, noise_rng, cfg.k)) {
          frozen.push_back(z.detach());
        }
        for (int s = 0; s < cfg.adversary_steps; ++s) {
          Tensor acc;
          for (const Tensor& z : frozen) {
            Tensor lp = adversary.log_prob(x, z);
            acc = acc.defined() ? ad::add(acc, lp) : lp;
          }
          Tensor adv_loss = ad::mean(
              ad::scalar_mul(acc, 1.0 / static_cast<double>(frozen.size())));
          adv_opt.zero_grad();
          ad::backward(ad::scalar_mul(adv_loss, -1.0));
          adv_opt.step();
        }
        if (cfg.gamma > 0.0) {
          Tensor disc_loss =
              discriminator_terms(*discriminator, frozen, y, cfg.gamma);
          disc_opt->zero_grad();
          ad::backward(ad::scalar_mul(disc_loss, -1.0));
          disc_opt->step();
        }

        // Recompute the objective with fresh releases for the mechanism step.
        std::vector<Tensor> releases = mechanism.sample(w, noise_rng, cfg.k);
        Tensor loss =
            ppan_loss(x, y, releases, adversary, cfg.distortion, cfg.budget);
        if (cfg.gamma > 0.0) {
          loss = ad::add(loss, discriminator_terms(*discriminator, releases,
                                                   y, cfg.gamma));
        }
        if (dual.active()) {
          Tensor dist_acc;
          for (const Tensor& z : releases) {
            Tensor d = cfg.distortion.rows(y, z);
            dist_acc = dist_acc.defined() ? ad::add(dist_acc, d) : d;
          }
          Tensor mean_dist = ad::mean(ad::scalar_mul(
              dist_acc, 1.0 / static_cast<double>(releases.size())));
          loss = ad::add(loss, dual.term(mean_dist));
          mech_opt.zero_grad();
          ad::backward(loss);
          mech_opt.step();
          dual.update(mean_dist.item());
        } else {
          mech_opt.zero_grad();
          ad::backward(loss);
          mech_opt.step();
        }
        loss_value = loss.item();
        if (!std::isfinite(loss_value)) {
          // Recompute the terms for the diagnostic.
          double logq = tensor_mean(adversary.log_prob(x, releases[0]));
          double dmean =
              tensor_mean(cfg.distortion.rows(y, releases[0]));
          check_finite_loss_value(loss_value, epoch, b, logq, dmean);
        }
      }
      epoch_loss += loss_value * count;
    }
    result.epoch_mean_loss.push_back(epoch_loss / plan.n);
  }
  return result;
}

TrainResult train_mi_utility(MechanismNet& mechanism,
                             AdversaryNet& privacy_adversary,
                             AdversaryNet& utility_decoder,
                             const Dataset& data, const TrainConfig& cfg) {
  if (data.n() < 1) throw ContractError("train_mi_utility: dataset is empty");
  const double lambda = std::holds_alternative<Lagrangian>(cfg.budget)
                            ? std::get<Lagrangian>(cfg.budget).lambda
                            : std::get<Penalty>(cfg.budget).lambda;

  Rng base(cfg.seed);
  Rng shuffle_rng = base.child(1);
  Rng noise_rng = base.child(2);

  Adam mech_opt(mechanism.parameters(), cfg.adam);
  Adam adv_opt(privacy_adversary.parameters(), cfg.adam);
  Adam dec_opt(utility_decoder.parameters(), cfg.adam);

  BatchPlan plan;
  plan.n = data.n();
  plan.batch_size = std::min(cfg.minibatch_size, plan.n);
  plan.idx.resize(plan.n);
  std::iota(plan.idx.begin(), plan.idx.end(), 0);

  TrainResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(plan.idx);
    double epoch_loss = 0.0;
    for (int b = 0; b < plan.batches(); ++b) {
      const int begin = plan.begin(b);
      const int count = plan.count(b);
      Tensor w = rows_subset(data.w, plan.idx, begin, count);
      Tensor x = rows_subset(data.x, plan.idx, begin, count);
      Tensor y = rows_subset(data.y, plan.idx, begin, count);

      Tensor frozen = mechanism.sample(w, noise_rng, cfg.k)[0].detach();
      for (int s = 0; s < cfg.adversary_steps; ++s) {
        Tensor adv_loss = ad::mean(privacy_adversary.log_prob(x, frozen));
        adv_opt.zero_grad();
        ad::backward(ad::scalar_mul(adv_loss, -1.0));
        adv_opt.step();
      }

      Tensor z = mechanism.sample(w, noise_rng, cfg.k)[0];
      Tensor loss =
          mi_utility_loss(x, y, z, privacy_adversary, utility_decoder, lambda);
      mech_opt.zero_grad();
      dec_opt.zero_grad();
      ad::backward(loss);
      mech_opt.step();
      dec_opt.step();
      const double loss_value = loss.item();
      check_finite_loss_value(loss_value, epoch, b, loss_value, 0.0);
      epoch_loss += loss_value * count;
    }
    result.epoch_mean_loss.push_back(epoch_loss / plan.n);
  }
  return result;
}

std::vector<SweepPointOutcome> sweep(const JointModel& model,
                                     const std::vector<double>& grid,
                                     int n_train, int n_test,
                                     const PointFactory& factory,
                                     const PointEvaluator& evaluate,
                                     std::uint64_t master_seed, int workers) {
  if (grid.empty()) throw ContractError("sweep: grid is empty");
  std::vector<SweepPointOutcome> results(grid.size());

  const auto run_point = [&](std::size_t i) {
    Rng point_rng = Rng(master_seed).child(i);
    TradeoffPoint& point = results[i].point;
    point.grid_value = grid[i];
    point.seed = point_rng.seed();
    point.model_id = model.id();
    try {
      Rng train_data_rng = point_rng.child(seed_tag::kTrainData);
      Rng test_data_rng = point_rng.child(seed_tag::kTestData);
      Rng init_rng = point_rng.child(seed_tag::kInit);
      Rng eval_rng = point_rng.child(seed_tag::kEval);

      Dataset train_data = sample(model, n_train, train_data_rng);
      Dataset test_data = sample(model, n_test, test_data_rng);

      SweepPointSetup setup = factory(grid[i], init_rng);
      setup.cfg.seed = point_rng.child(seed_tag::kTrainLoop).seed();

      TrainResult trained =
          train(setup.mechanism, setup.adversary,
                setup.discriminator ? &*setup.discriminator : nullptr,
                train_data, setup.cfg);
      results[i].epoch_mean_loss = std::move(trained.epoch_mean_loss);

      TradeoffPoint evaluated = evaluate(grid[i], setup.mechanism,
                                         setup.adversary, test_data, eval_rng);
      evaluated.grid_value = grid[i];
      evaluated.seed = point.seed;
      evaluated.model_id = point.model_id;
      point = evaluated;
    } catch (const std::exception& e) {
      point.failed = true;
      point.error = e.what();
      point.empirical_distortion = std::numeric_limits<double>::quiet_NaN();
      point.leakage_nats = std::numeric_limits<double>::quiet_NaN();
      point.adversary_accuracy = std::numeric_limits<double>::quiet_NaN();
    }
  };

  const int thread_count =
      std::max(1, std::min<int>(workers, static_cast<int>(grid.size())));
  if (thread_count == 1) {
    for (std::size_t i = 0; i < grid.size(); ++i) run_point(i);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(thread_count);
  for (int t = 0; t < thread_count; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < grid.size();
           i = next.fetch_add(1)) {
        run_point(i);
      }
    });
  }
  for (std::thread& th : pool) th.join();
  return results;
}

}  // namespace privmech

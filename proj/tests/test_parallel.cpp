// The OpenMP kernels must reproduce the serial reference bit for bit: items
// derive their randomness from (step_key, index) and reductions run serially
// in item order, so thread count and scheduling cannot influence results.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>

#include "pacer/trainer/ablation.hpp"
#include "pacer/trainer/trainer.hpp"

using namespace pacer;
using namespace pacer::trainer;

namespace {

struct Fixture {
  env::EnvSpec spec;
  std::unique_ptr<actor::Policy> policy;
  std::unique_ptr<critic::TwinCritics> critics;
  std::vector<env::Transition> batch;

  Fixture(int state_dim, int action_dim, int m, bool gaussian, std::uint64_t seed) {
    spec.name = "fixture";
    spec.state_dim = state_dim;
    spec.action_dim = action_dim;
    spec.action_low.assign(action_dim, -1.5);
    spec.action_high.assign(action_dim, 1.5);
    spec.max_episode_steps = 50;
    Rng rng(seed);
    if (gaussian)
      policy = std::make_unique<GaussianPolicy>(spec, std::vector<int>{12, 10},
                                                rng);
    else
      policy = std::make_unique<actor::PushForwardPolicy>(
          spec, std::vector<int>{12, 10}, action_dim, rng);
    critics = std::make_unique<critic::TwinCritics>(
        state_dim, action_dim, std::vector<int>{12, 10}, 0.005, rng);
    for (int i = 0; i < m; ++i) {
      env::Transition t;
      for (int k = 0; k < state_dim; ++k) {
        t.state.push_back(rng.uniform(-1, 1));
        t.next_state.push_back(rng.uniform(-1, 1));
      }
      for (int k = 0; k < action_dim; ++k)
        t.action.push_back(rng.uniform(-1.5, 1.5));
      t.reward = rng.uniform(-2, 2);
      batch.push_back(t);
    }
  }
};

bool identical(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         (a.empty() ||
          std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

}  // namespace

TEST_CASE("critic_batch: OpenMP path is bitwise identical to the serial reference") {
  for (const bool gaussian : {false, true}) {
    for (const int m : {1, 7, 64}) {
      Fixture fx(3, 2, m, gaussian, mix64(1, m));
      const critic::QuantileHuberParams qh{1.0, 16};
      const utility::UtilityFunction util;
      BatchWorkspace ws;
      ws.configure(m, static_cast<int>(fx.policy->params().data.size()),
                   fx.critics->online1.param_count());
      const CriticBatchResult serial =
          critic_batch(*fx.critics, *fx.policy, fx.batch, qh, 0.97, util, 555,
                       Exec::kSerial, ws);
      const CriticBatchResult parallel =
          critic_batch(*fx.critics, *fx.policy, fx.batch, qh, 0.97, util, 555,
                       Exec::kParallel, ws);
      CHECK(serial.loss == parallel.loss);
      CHECK(identical(serial.grad1, parallel.grad1));
      CHECK(identical(serial.grad2, parallel.grad2));
    }
  }
}

TEST_CASE("actor_batch: OpenMP path is bitwise identical to the serial reference") {
  for (const bool gaussian : {false, true}) {
    for (const int m : {1, 7, 64}) {
      Fixture fx(2, 2, m, gaussian, mix64(2, m));
      const encourager::MmdKernel kernel = encourager::MmdKernel::gaussian(2.0);
      const utility::UtilityFunction util = utility::UtilityFunction::cvar(0.5);
      BatchWorkspace ws;
      ws.configure(m, static_cast<int>(fx.policy->params().data.size()),
                   fx.critics->online1.param_count());
      const ActorBatchResult serial =
          actor_batch(*fx.critics, *fx.policy, fx.batch, 12, kernel, 16, true,
                      0.8, util, 777, Exec::kSerial, ws);
      const ActorBatchResult parallel =
          actor_batch(*fx.critics, *fx.policy, fx.batch, 12, kernel, 16, true,
                      0.8, util, 777, Exec::kParallel, ws);
      CHECK(serial.loss == parallel.loss);
      CHECK(serial.v_mean == parallel.v_mean);
      CHECK(serial.d_mean == parallel.d_mean);
      CHECK(identical(serial.grad, parallel.grad));
    }
  }
}

TEST_CASE("evaluation: parallel episodes match the serial reference") {
  Rng rng(9);
  env::EnvSpec pend;
  {
    auto e = env::make_env("pendulum");
    pend = e->spec();
  }
  actor::PushForwardPolicy policy(pend, {12, 10}, 1, rng);
  env::ObsNormalizer norm(pend.state_dim);
  for (int i = 0; i < 100; ++i)
    norm.update({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-8, 8)});

  const EvalSummary serial =
      evaluate_policy(policy, norm, "pendulum", 6, 2024, Exec::kSerial);
  const EvalSummary parallel =
      evaluate_policy(policy, norm, "pendulum", 6, 2024, Exec::kParallel);
  CHECK(serial.mean_return == parallel.mean_return);
  CHECK(serial.std_return == parallel.std_return);
}

TEST_CASE("full training is bitwise reproducible under the parallel kernels") {
  auto run_once = [](Exec exec) {
    auto env = env::make_env("bimodal_bandit");
    TrainConfig cfg;
    cfg.batch_size = 8;
    cfg.quantiles = 4;
    cfg.mmd_samples = 8;
    cfg.hidden = {8, 8};
    cfg.warmup = 16;
    cfg.update_every = 8;
    cfg.total_steps = 48;
    cfg.eval_every = 16;
    cfg.eval_episodes = 2;
    cfg.seed = 31;
    cfg.exec = exec;
    Trainer t(std::move(env), cfg);
    return t.run();
  };
  const RunResult serial = run_once(Exec::kSerial);
  const RunResult parallel = run_once(Exec::kParallel);
  REQUIRE(serial.train_rows.size() == parallel.train_rows.size());
  for (size_t i = 0; i < serial.train_rows.size(); ++i) {
    CHECK(serial.train_rows[i].critic_loss == parallel.train_rows[i].critic_loss);
    CHECK(serial.train_rows[i].actor_loss == parallel.train_rows[i].actor_loss);
    CHECK(serial.train_rows[i].d_m == parallel.train_rows[i].d_m);
    CHECK(serial.train_rows[i].alpha == parallel.train_rows[i].alpha);
  }
  REQUIRE(serial.eval_rows.size() == parallel.eval_rows.size());
  for (size_t i = 0; i < serial.eval_rows.size(); ++i) {
    CHECK(serial.eval_rows[i].mean_return == parallel.eval_rows[i].mean_return);
    CHECK(serial.eval_rows[i].std_return == parallel.eval_rows[i].std_return);
  }
}

// Compares the serial reference and OpenMP batch kernels on a synthetic
// workload: same inputs, timed repeatedly, results checked for bitwise
// equality.
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "pacer/actor/policy.hpp"
#include "pacer/critic/critic.hpp"
#include "pacer/encourager/mmd.hpp"
#include "pacer/rng.hpp"
#include "pacer/trainer/kernels.hpp"

using namespace pacer;

namespace {

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

struct Fixture {
  env::EnvSpec spec;
  std::unique_ptr<actor::PushForwardPolicy> policy;
  std::unique_ptr<critic::TwinCritics> critics;
  std::vector<env::Transition> batch;
  encourager::MmdKernel kernel{2.0};

  Fixture(int state_dim, int action_dim, int hidden, int m) {
    spec.name = "bench";
    spec.state_dim = state_dim;
    spec.action_dim = action_dim;
    spec.action_low.assign(action_dim, -1.0);
    spec.action_high.assign(action_dim, 1.0);
    spec.max_episode_steps = 100;
    Rng rng(42);
    policy = std::make_unique<actor::PushForwardPolicy>(
        spec, std::vector<int>{hidden, hidden}, action_dim, rng);
    critics = std::make_unique<critic::TwinCritics>(
        state_dim, action_dim, std::vector<int>{hidden, hidden}, 0.005, rng);
    for (int i = 0; i < m; ++i) {
      env::Transition t;
      for (int k = 0; k < state_dim; ++k) {
        t.state.push_back(rng.uniform(-1, 1));
        t.next_state.push_back(rng.uniform(-1, 1));
      }
      for (int k = 0; k < action_dim; ++k) t.action.push_back(rng.uniform(-1, 1));
      t.reward = rng.uniform(-1, 1);
      batch.push_back(t);
    }
  }
};

template <typename F>
double time_best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const double t0 = now_ms();
    f();
    best = std::min(best, now_ms() - t0);
  }
  return best;
}

bool same(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

int main(int argc, char** argv) {
  const int m = argc > 1 ? std::atoi(argv[1]) : 100;
  const int hidden = argc > 2 ? std::atoi(argv[2]) : 32;
  const int reps = argc > 3 ? std::atoi(argv[3]) : 5;
  Fixture fx(3, 1, hidden, m);
  const critic::QuantileHuberParams qh{1.0, 32};
  const utility::UtilityFunction util;
  trainer::BatchWorkspace ws;
  ws.configure(m, static_cast<int>(fx.policy->params().data.size()),
               fx.critics->online1.param_count());

  std::printf("batch=%d hidden=%d threads=%d reps=%d\n", m, hidden,
              omp_get_max_threads(), reps);

  trainer::CriticBatchResult cs, cp;
  const double tc_serial = time_best_of(reps, [&] {
    cs = trainer::critic_batch(*fx.critics, *fx.policy, fx.batch, qh, 0.99, util,
                               123, trainer::Exec::kSerial, ws);
  });
  const double tc_par = time_best_of(reps, [&] {
    cp = trainer::critic_batch(*fx.critics, *fx.policy, fx.batch, qh, 0.99, util,
                               123, trainer::Exec::kParallel, ws);
  });
  std::printf("critic_batch  serial %8.2f ms   openmp %8.2f ms   speedup %.2fx   bitwise %s\n",
              tc_serial, tc_par, tc_serial / tc_par,
              same(cs.grad1, cp.grad1) && same(cs.grad2, cp.grad2) &&
                      cs.loss == cp.loss
                  ? "==" : "MISMATCH");

  trainer::ActorBatchResult as, ap;
  const double ta_serial = time_best_of(reps, [&] {
    as = trainer::actor_batch(*fx.critics, *fx.policy, fx.batch, 32, fx.kernel,
                              32, true, 0.7, util, 456, trainer::Exec::kSerial,
                              ws);
  });
  const double ta_par = time_best_of(reps, [&] {
    ap = trainer::actor_batch(*fx.critics, *fx.policy, fx.batch, 32, fx.kernel,
                              32, true, 0.7, util, 456, trainer::Exec::kParallel,
                              ws);
  });
  std::printf("actor_batch   serial %8.2f ms   openmp %8.2f ms   speedup %.2fx   bitwise %s\n",
              ta_serial, ta_par, ta_serial / ta_par,
              same(as.grad, ap.grad) && as.loss == ap.loss ? "==" : "MISMATCH");
  return 0;
}

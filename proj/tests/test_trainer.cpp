#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "pacer/ad/gradcheck.hpp"
#include "pacer/errors.hpp"
#include "pacer/trainer/ablation.hpp"
#include "pacer/trainer/trainer.hpp"
#include "test_util.hpp"

using namespace pacer;
using namespace pacer::trainer;

namespace {

// single absorbing state, reward supplied by a callback; used as the TD
// fixed-point fixture
class ConstEnv final : public env::Env {
 public:
  using RewardFn = double (*)(Rng&);
  ConstEnv(RewardFn fn, int horizon) : fn_(fn) {
    spec_.name = "const";
    spec_.state_dim = 1;
    spec_.action_dim = 1;
    spec_.action_low = {-1.0};
    spec_.action_high = {1.0};
    spec_.max_episode_steps = horizon;
    spec_.gamma_default = 0.5;
  }
  const env::EnvSpec& spec() const override { return spec_; }
  std::vector<double> reset(std::optional<std::uint64_t> seed) override {
    if (seed) rng_.reseed(*seed);
    t_ = 0;
    return {0.0};
  }
  env::StepResult step(const std::vector<double>&) override {
    t_ += 1;
    return {{0.0}, fn_(rng_), t_ >= spec_.max_episode_steps};
  }

 private:
  env::EnvSpec spec_;
  RewardFn fn_;
  Rng rng_;
  int t_ = 0;
};

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.quantiles = 8;
  cfg.mmd_samples = 8;
  cfg.hidden = {16, 16};
  cfg.warmup = 32;
  cfg.update_every = 8;
  cfg.eval_every = 0;
  cfg.total_steps = 64;
  cfg.exec = Exec::kSerial;
  return cfg;
}

}  // namespace

TEST_CASE("alpha loss: sign structure, exact sgd step, clamps") {
  TrainerState st;
  st.log_alpha = 0.0;
  st.beta = 0.5;

  // d_m = β → no movement
  alpha_update(st, 0.5, 1e-3);
  CHECK(st.log_alpha == 0.0);

  // β=0.5, d=0.7, lr 1e-3 → log α increases by exactly 2e-4
  alpha_update(st, 0.7, 1e-3);
  CHECK(st.log_alpha == doctest::Approx(2e-4).epsilon(1e-12));

  // loss value itself: (ln α)(β − d)
  CHECK(alpha_loss_value(std::exp(1.0), 0.5, 0.7) ==
        doctest::Approx(1.0 * (0.5 - 0.7)));

  // clamp contract over a long fuzz
  Rng rng(5);
  TrainerState fuzz;
  fuzz.beta = 0.5;
  for (int i = 0; i < 1000000; ++i) {
    alpha_update(fuzz, rng.uniform(0.0, 3.0), 0.05);
    const double a = fuzz.alpha();
    CHECK(a >= kAlphaClampMin);
    CHECK(a <= kAlphaClampMax);
    if (a < kAlphaClampMin || a > kAlphaClampMax) break;
  }
  CHECK_THROWS_AS(alpha_update(st, -0.1, 1e-3), ConfigError);
}

TEST_CASE("alpha tracks the constraint direction monotonically") {
  // frozen d_m above β → α grows every step; below β → α decays
  TrainerState grow;
  grow.beta = 0.4;
  double prev = grow.alpha();
  for (int i = 0; i < 1000; ++i) {
    alpha_update(grow, 0.9, 1e-2);
    CHECK(grow.alpha() > prev);
    prev = grow.alpha();
  }
  TrainerState decay;
  decay.beta = 0.4;
  prev = decay.alpha();
  for (int i = 0; i < 1000; ++i) {
    alpha_update(decay, 0.1, 1e-2);
    CHECK(decay.alpha() < prev);
    prev = decay.alpha();
  }
}

TEST_CASE("beta update direction table") {
  TrainerState st;
  st.alpha_min = 0.05;
  st.alpha_max = 5.0;
  st.beta = 0.5;

  st.log_alpha = std::log(0.5 * (0.05 + 5.0));  // interior
  beta_update(st, 0.01, 1e-3);
  CHECK(st.beta == 0.5);

  st.log_alpha = std::log(10.0);  // α > α_max → β increases by the step
  beta_update(st, 0.01, 1e-3);
  CHECK(st.beta == doctest::Approx(0.51).epsilon(1e-12));

  st.log_alpha = std::log(0.025);  // α < α_min → β decreases
  beta_update(st, 0.01, 1e-3);
  CHECK(st.beta == doctest::Approx(0.5).epsilon(1e-12));

  // floor
  st.beta = 5e-3;
  for (int i = 0; i < 10; ++i) beta_update(st, 0.01, 1e-3);
  CHECK(st.beta == doctest::Approx(1e-3));
}

TEST_CASE("suvpg estimator on the closed-form toy: pi=theta*xi, Q=-a^2") {
  // ∇_θ E[Q(θξ)] = -2θ·E[ξ²] = -2θ for ξ ~ N(0,1)
  const double theta = 0.8;
  Rng rng(11);
  const int n = 100000;
  double acc = 0.0;
  ad::Tape tape;
  for (int i = 0; i < n; ++i) {
    const double xi = rng.normal();
    tape.clear();
    const int th = tape.leaf({theta});
    const int a = tape.scale(th, xi);          // π(s, ξ; θ) = θ·ξ
    const int q = tape.scale(tape.square(a), -1.0);  // Q = −a²
    tape.backward(q);
    acc += tape.adjoint(th)[0];
  }
  const double grad = acc / n;
  CHECK(grad == doctest::Approx(-2.0 * theta).epsilon(0.01));

  // zero at the toy's critical point θ=0
  tape.clear();
  const int th = tape.leaf({0.0});
  const int q = tape.scale(tape.square(tape.scale(th, 1.3)), -1.0);
  tape.backward(q);
  CHECK(tape.adjoint(th)[0] == 0.0);
}

TEST_CASE("suvpg equals the explicit product form on random tiny nets") {
  // taped ∇_θ Q(s, π(s,ξ;θ)) vs ∇_θπ · ∇_a Q|_{a=π}, same ξ
  for (int trial = 0; trial < 20; ++trial) {
    Rng rng(mix64(900, trial));
    env::EnvSpec spec;
    spec.state_dim = 2;
    spec.action_dim = 2;
    spec.action_low = {-1, -1};
    spec.action_high = {1, 1};
    actor::PushForwardPolicy policy(spec, {5, 4}, 2, rng);
    critic::IqnNet critic_net(2, 2, {6, 5}, rng);
    const std::vector<double> s = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const std::vector<double> xi = {rng.normal(), rng.normal()};
    const std::vector<double> tau = {0.25, 0.6, 0.9};
    const std::vector<double> vw = {0.3, 0.5, 0.2};
    const int pa = static_cast<int>(policy.params().data.size());

    // route A: full composition on one tape
    ad::Tape full;
    std::vector<double> grad_full(pa, 0.0);
    {
      const int a = policy.act_rows_taped(full, s, xi.data(), 1,
                                          grad_full.data(), false);
      const int sa = full.concat(full.leaf(s), a);
      const int z = critic_net.quantile_values_taped(full, sa, tau, nullptr);
      const int v = full.weighted_sum(z, vw);
      full.backward(v);
    }

    // route B: ∇_a Q at a = π(s,ξ), then actor backward seeded with it
    std::vector<double> a_val(2);
    policy.act_rows(s, xi.data(), 1, a_val.data());
    ad::Tape qtape;
    std::vector<double> grad_a(2, 0.0);
    {
      std::vector<double> sa = s;
      sa.insert(sa.end(), a_val.begin(), a_val.end());
      const int x = qtape.leaf(sa);
      const int z = critic_net.quantile_values_taped(qtape, x, tau, nullptr);
      const int v = qtape.weighted_sum(z, vw);
      qtape.backward(v);
      grad_a[0] = qtape.adjoint(x)[2];
      grad_a[1] = qtape.adjoint(x)[3];
    }
    ad::Tape atape;
    std::vector<double> grad_prod(pa, 0.0);
    {
      const int a = policy.act_rows_taped(atape, s, xi.data(), 1,
                                          grad_prod.data(), false);
      const int seeded = atape.weighted_sum(a, grad_a);
      atape.backward(seeded);
    }

    double max_diff = 0.0;
    for (int i = 0; i < pa; ++i)
      max_diff = std::max(max_diff, std::abs(grad_full[i] - grad_prod[i]));
    CHECK(max_diff < 1e-10);
  }
}

TEST_CASE("train_step is reproducible and reports every metric field") {
  auto make = [] {
    auto env = std::make_unique<ConstEnv>(
        +[](Rng&) { return 1.0; }, 16);
    TrainConfig cfg = small_config();
    cfg.seed = 77;
    return std::make_unique<Trainer>(std::move(env), cfg);
  };
  auto a = make();
  auto b = make();
  const RunResult ra = a->run();
  const RunResult rb = b->run();
  REQUIRE(!ra.train_rows.empty());
  REQUIRE(ra.train_rows.size() == rb.train_rows.size());
  for (size_t i = 0; i < ra.train_rows.size(); ++i) {
    CHECK(ra.train_rows[i].critic_loss == rb.train_rows[i].critic_loss);
    CHECK(ra.train_rows[i].actor_loss == rb.train_rows[i].actor_loss);
    CHECK(ra.train_rows[i].d_m == rb.train_rows[i].d_m);
    CHECK(ra.train_rows[i].v_psi == rb.train_rows[i].v_psi);
    CHECK(ra.train_rows[i].alpha == rb.train_rows[i].alpha);
    CHECK(ra.train_rows[i].beta == rb.train_rows[i].beta);
    CHECK(std::isfinite(ra.train_rows[i].critic_loss));
    CHECK(std::isfinite(ra.train_rows[i].alpha));
  }
}

TEST_CASE("run_training with zero steps returns an untouched state") {
  auto env = std::make_unique<ConstEnv>(+[](Rng&) { return 0.0; }, 4);
  TrainConfig cfg = small_config();
  cfg.total_steps = 0;
  Trainer t(std::move(env), cfg);
  const double alpha0 = t.state().alpha();
  const RunResult r = t.run();
  CHECK(r.train_rows.empty());
  CHECK(t.state().env_steps == 0);
  CHECK(t.state().grad_steps == 0);
  CHECK(t.state().alpha() == alpha0);
}

TEST_CASE("distributional TD fixed point: constant reward, gamma 0.5") {
  // r ≡ 1, γ = 0.5 → return ≡ 2; atom mean must approach it
  auto env = std::make_unique<ConstEnv>(+[](Rng&) { return 1.0; }, 16);
  TrainConfig cfg = small_config();
  cfg.gamma = 0.5;
  cfg.total_steps = 2500;
  cfg.warmup = 64;
  cfg.update_every = 1;
  cfg.batch_size = 16;
  cfg.quantiles = 16;
  cfg.hidden = {24, 24};
  cfg.polyak = 0.02;
  cfg.seed = 3;
  Trainer t(std::move(env), cfg);
  t.run();

  Rng qrng(5);
  const critic::QuantileSample q = critic::sample_quantiles(64, qrng);
  const std::vector<double> s = t.state().normalizer.normalize({0.0});
  const std::vector<double> atoms =
      t.state().critics->online_min_atoms(s, {0.0}, q.tau_hats);
  double mean = 0.0;
  for (size_t i = 0; i < atoms.size(); ++i) mean += q.weights[i] * atoms[i];
  CHECK(mean == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("checkpoint save/load round trip preserves the agent") {
  auto env = std::make_unique<ConstEnv>(+[](Rng&) { return 1.0; }, 8);
  TrainConfig cfg = small_config();
  cfg.seed = 9;
  Trainer t(std::move(env), cfg);
  t.run();

  const std::string path = testutil::temp_path("pacer_agent.ckpt");
  save_agent(path, t.state(), t.config(), "risky_drive");
  const LoadedAgent agent = load_agent(path);
  CHECK(agent.env_name == "risky_drive");
  CHECK(agent.state.policy->params().data == t.state().policy->params().data);
  CHECK(agent.state.critics->online1.params().data ==
        t.state().critics->online1.params().data);
  CHECK(agent.state.log_alpha == t.state().log_alpha);
  CHECK(agent.state.beta == t.state().beta);
  CHECK(agent.state.normalizer.count() == t.state().normalizer.count());
  std::filesystem::remove(path);
  std::filesystem::remove(path + ".json");
}

TEST_CASE("ablation variants wire the requested policy and regularizer") {
  TrainConfig base = small_config();
  const TrainConfig pacer_cfg =
      ablation_variant(base, PolicyKind::kPushForward, RegularizerKind::kMmd);
  CHECK(pacer_cfg.policy_kind == PolicyKind::kPushForward);
  CHECK(pacer_cfg.regularizer == RegularizerKind::kMmd);

  auto env = std::make_unique<ConstEnv>(+[](Rng&) { return 0.0; }, 4);
  const TrainConfig g =
      ablation_variant(base, PolicyKind::kGaussian, RegularizerKind::kNone);
  Trainer t(std::move(env), g);
  CHECK(dynamic_cast<GaussianPolicy*>(t.state().policy.get()) != nullptr);

  // no-regularizer variants keep α and β frozen
  auto env2 = std::make_unique<ConstEnv>(+[](Rng&) { return 1.0; }, 8);
  TrainConfig cfg2 = ablation_variant(small_config(), PolicyKind::kPushForward,
                                      RegularizerKind::kNone);
  cfg2.seed = 10;
  Trainer t2(std::move(env2), cfg2);
  const double a0 = t2.state().alpha();
  const double b0 = t2.state().beta;
  t2.run();
  CHECK(t2.state().alpha() == a0);
  CHECK(t2.state().beta == b0);

  CHECK_THROWS_AS(policy_kind_from_string("boltzmann"), ConfigError);
  CHECK_THROWS_AS(regularizer_from_string("entropy"), ConfigError);
}

TEST_CASE("gaussian ablation head: bounds, reparameterized gradient") {
  env::EnvSpec spec;
  spec.state_dim = 2;
  spec.action_dim = 2;
  spec.action_low = {-2, -2};
  spec.action_high = {2, 2};
  Rng init(21);
  GaussianPolicy policy(spec, {6, 5}, init);
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const std::vector<double> xi = policy.sample_noise(actor::NoiseMode::kTrain, rng);
    for (double a : policy.act({0.1, -0.2}, xi)) {
      CHECK(a < 2.0);
      CHECK(a > -2.0);
    }
  }
  // taped path against raw path
  ad::Tape tape;
  const std::vector<double> xi = {0.4, -1.2};
  const int a = policy.act_rows_taped(tape, {0.1, -0.2}, xi.data(), 1, nullptr,
                                      false);
  std::vector<double> raw(2);
  policy.act_rows({0.1, -0.2}, xi.data(), 1, raw.data());
  CHECK(tape.value(a)[0] == doctest::Approx(raw[0]).epsilon(1e-14));
  CHECK(tape.value(a)[1] == doctest::Approx(raw[1]).epsilon(1e-14));

  // parameter gradients check out
  ad::ScalarBuilder f = [&](ad::Tape& t, const std::vector<double>& p,
                            double* sink) {
    Rng r0(0);
    GaussianPolicy scratch(spec, {6, 5}, r0);
    scratch.params().data = p;
    ad::ScalarBuild b;
    const int an = scratch.act_rows_taped(t, {0.1, -0.2}, xi.data(), 1, sink,
                                          false);
    b.out_node = t.weighted_sum(an, {1.0, -0.7});
    return b;
  };
  CHECK(ad::gradient_check(f, policy.params().data, 1e-4).pass);
}

TEST_CASE("nan rewards abort with a training error") {
  auto env = std::make_unique<ConstEnv>(
      +[](Rng&) { return std::numeric_limits<double>::quiet_NaN(); }, 4);
  TrainConfig cfg = small_config();
  CHECK_THROWS(Trainer(std::move(env), cfg).run());
}

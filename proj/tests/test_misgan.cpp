#include <doctest.h>

#include <cmath>

#include "misgan/misgan.hpp"
#include "misgan/trainer.hpp"

using namespace misgan;

namespace {

// A network computing w'v + b with fixed weights (identity activation).
Network linear_net(std::vector<double> w, double b = 0.0) {
  CounterRng rng(0, RngStream::kInit);
  const std::size_t n = w.size();
  Network net(n, {{1, Activation::kIdentity, 0.0}}, rng);
  net.layers()[0].weight->value.data = std::move(w);
  net.layers()[0].bias->value.data = {b};
  return net;
}

// Identity map on R^n.
Network identity_net(std::size_t n) {
  CounterRng rng(0, RngStream::kInit);
  Network net(n, {{n, Activation::kIdentity, 0.0}}, rng);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      net.layers()[0].weight->value.data[i * n + j] = i == j ? 1.0 : 0.0;
  net.layers()[0].bias->value.data.assign(n, 0.0);
  return net;
}

IncompleteDataset toy_dataset(std::uint64_t seed, std::size_t count = 512) {
  CounterRng data_rng(seed, RngStream::kData);
  CounterRng mask_rng(seed, RngStream::kMask);
  return make_incomplete(sample_ring8(count, data_rng), MaskMechanism::dropout(2, 0.5),
                         mask_rng);
}

MisganModel small_model(std::uint64_t seed) {
  CounterRng init(seed, RngStream::kInit);
  MisganArchitecture arch;
  arch.data_dim = 2;
  arch.noise_dim = 8;
  arch.generator_hidden = {16};
  arch.critic_hidden = {16};
  return make_misgan_model(arch, 0.0, 0.66, 0.2, init);
}

}  // namespace

TEST_CASE("loss_mask") {
  SUBCASE("constant critic cancels exactly") {
    Network d_m = linear_net({0.0, 0.0}, 3.7);
    Network g_m = identity_net(2);
    Tensor real({4, 2}), eps({3, 2});
    for (std::size_t i = 0; i < real.numel(); ++i) real.data[i] = (i % 3) * 0.5;
    for (std::size_t i = 0; i < eps.numel(); ++i) eps.data[i] = -0.2 + 0.1 * i;
    CHECK(loss_mask(d_m, g_m, real, eps)->value.data[0] == 0.0);
  }
  SUBCASE("sum critic on hand batches") {
    // D_m(m) = sum(m); real {(1,0)}, generated {(1,1)} -> 1 - 2 = -1.
    Network d_m = linear_net({1.0, 1.0});
    Network g_m = identity_net(2);
    Tensor real({1, 2});
    real.data = {1.0, 0.0};
    Tensor eps({1, 2});
    eps.data = {1.0, 1.0};
    CHECK(loss_mask(d_m, g_m, real, eps)->value.data[0] == doctest::Approx(-1.0));
  }
  SUBCASE("generated equal to real gives zero for any critic") {
    CounterRng init(5, RngStream::kInit);
    Network d_m(2, {{8, Activation::kRelu, 0.0}, {1, Activation::kIdentity, 0.0}}, init);
    Tensor batch({3, 2});
    batch.data = {0, 1, 1, 1, 0, 0};
    CHECK(loss_mask_on(d_m, constant(batch), constant(batch))->value.data[0] == 0.0);
  }
  SUBCASE("empty batch is rejected") {
    Network d_m = linear_net({1.0, 1.0});
    Network g_m = identity_net(2);
    CHECK_THROWS_AS(loss_mask(d_m, g_m, Tensor({0, 2}), Tensor({1, 2})),
                    std::invalid_argument);
  }
}

TEST_CASE("loss_data") {
  SUBCASE("constant critic cancels") {
    Network d_x = linear_net({0.0, 0.0}, -1.0);
    Network g_x = identity_net(2), g_m = identity_net(2);
    Tensor x({2, 2}), m({2, 2}), z({2, 2}), eps({2, 2});
    x.data = {1, 1, 0.5, 0.25};
    m.data = {1, 0, 0, 1};
    z.data = {0.3, 0.3, 0.1, 0.9};
    eps.data = {0.9, 0.9, 0.2, 0.8};
    CHECK(loss_data(d_x, g_x, g_m, x, m, z, eps, 0.0)->value.data[0] == 0.0);
  }
  SUBCASE("hand instance from the sum critic") {
    // real f_0((1,1),(1,0)) = (1,0); fake f_0((0.5,0.5),(1,1)) = (0.5,0.5).
    Network d_x = linear_net({1.0, 1.0});
    Network g_x = identity_net(2), g_m = identity_net(2);
    Tensor x({1, 2}), m({1, 2}), z({1, 2}), eps({1, 2});
    x.data = {1.0, 1.0};
    m.data = {1.0, 0.0};
    z.data = {0.5, 0.5};
    eps.data = {1.0, 1.0};
    CHECK(loss_data(d_x, g_x, g_m, x, m, z, eps, 0.0)->value.data[0] == doctest::Approx(0.0));
  }
  SUBCASE("generators reproducing the real batch give zero") {
    CounterRng init(6, RngStream::kInit);
    Network d_x(2, {{8, Activation::kRelu, 0.0}, {1, Activation::kIdentity, 0.0}}, init);
    Network g_x = identity_net(2), g_m = identity_net(2);
    Tensor x({2, 2}), m({2, 2});
    x.data = {0.7, -0.7, 0.2, 0.4};
    m.data = {1, 0, 1, 1};
    CHECK(loss_data(d_x, g_x, g_m, x, m, x, m, 0.25)->value.data[0] == 0.0);
  }
}

TEST_CASE("batch order does not change the loss") {
  CounterRng init(7, RngStream::kInit);
  Network d_m(2, {{8, Activation::kRelu, 0.0}, {1, Activation::kIdentity, 0.0}}, init);
  Tensor batch({3, 2}), swapped({3, 2});
  batch.data = {0, 1, 1, 1, 0, 0};
  swapped.data = {1, 1, 0, 0, 0, 1};  // rows permuted
  Tensor fake({3, 2});
  fake.data = {0.2, 0.8, 0.5, 0.5, 0.9, 0.1};
  const double a = loss_mask_on(d_m, constant(batch), constant(fake))->value.data[0];
  const double b = loss_mask_on(d_m, constant(swapped), constant(fake))->value.data[0];
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("sampling helpers") {
  MisganModel model = small_model(11);
  CounterRng rng(12, RngStream::kEval);

  SUBCASE("count 0 gives an empty batch") {
    CHECK(sample_data(model.g_x, rng, 0).shape == std::vector<std::size_t>{0, 2});
    CHECK(sample_masks(model.g_m, rng, 0).shape == std::vector<std::size_t>{0, 2});
  }
  SUBCASE("mask samples live in (0,1)") {
    const Tensor soft = sample_masks(model.g_m, rng, 64);
    for (double v : soft.data) {
      CHECK(v > 0.0);
      CHECK(v < 1.0);
    }
  }
  SUBCASE("thresholding is reporting-only and binary") {
    const Tensor soft = sample_masks(model.g_m, rng, 16);
    for (const Mask& m : threshold_masks(soft))
      for (std::uint8_t b : m.bits) CHECK((b == 0 || b == 1));
  }
}

TEST_CASE("temperature sigmoid saturation at lambda = 0.66") {
  // sigma_lambda is within 0.1 of {0,1} beyond |x| = lambda * ln 9 ~ 1.4502.
  const double threshold = 0.66 * std::log(9.0);
  CHECK(threshold == doctest::Approx(1.45).epsilon(1e-3));
  for (double x = threshold + 1e-6; x < 12.0; x += 0.173) {
    const double s =
        temperature_sigmoid(constant(Tensor::scalar(x)), 0.66)->value.data[0];
    CHECK(std::abs(s - std::round(s)) < 0.1);
    const double s_neg =
        temperature_sigmoid(constant(Tensor::scalar(-x)), 0.66)->value.data[0];
    CHECK(std::abs(s_neg - std::round(s_neg)) < 0.1);
  }
  // The bound is tight: exactly at the threshold the gap equals 0.1.
  const double edge =
      temperature_sigmoid(constant(Tensor::scalar(threshold)), 0.66)->value.data[0];
  CHECK(std::abs(edge - 1.0) == doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("alpha = 0 removes the data-loss gradient from the mask generator") {
  MisganModel model = small_model(13);
  Tensor x({4, 2}), m({4, 2});
  x.data = {1, 0, 0.7, 0.7, -1, 0, 0, -1};
  m.data = {1, 1, 0, 1, 1, 0, 1, 1};
  CounterRng noise(14, RngStream::kNoiseZ);
  const Tensor z = sample_noise(noise, 4, model.noise_dim);
  const Tensor eps = sample_noise(noise, 4, model.noise_dim);

  auto gm_grads = [&](double alpha) {
    const NodePtr mhat = model.g_m.forward(constant(eps));
    const NodePtr lm = loss_mask_on(model.d_m, constant(m), mhat);
    const NodePtr fake = mask_fill(model.g_x.forward(constant(z)), mhat, model.tau);
    const NodePtr real = constant(mask_fill_batch(x, m, model.tau));
    const NodePtr lx = loss_data_on(model.d_x, real, fake);
    backward(add(lm, scale(lx, alpha)));
    std::vector<double> grads;
    for (const NodePtr& p : model.g_m.parameters())
      grads.insert(grads.end(), p->grad.data.begin(), p->grad.data.end());
    return grads;
  };

  auto lm_only = [&] {
    const NodePtr lm = loss_mask(model.d_m, model.g_m, m, eps);
    backward(lm);
    std::vector<double> grads;
    for (const NodePtr& p : model.g_m.parameters())
      grads.insert(grads.end(), p->grad.data.begin(), p->grad.data.end());
    return grads;
  };

  const auto with_zero_alpha = gm_grads(0.0);
  const auto mask_loss_alone = lm_only();
  REQUIRE(with_zero_alpha.size() == mask_loss_alone.size());
  for (std::size_t i = 0; i < with_zero_alpha.size(); ++i)
    CHECK(with_zero_alpha[i] == mask_loss_alone[i]);

  // With alpha > 0 the data loss does reach G_m.
  const auto with_alpha = gm_grads(0.2);
  double diff = 0.0;
  for (std::size_t i = 0; i < with_alpha.size(); ++i)
    diff = std::max(diff, std::abs(with_alpha[i] - mask_loss_alone[i]));
  CHECK(diff > 0.0);
}

TEST_CASE("trainer determinism and clipping") {
  TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.n_critic = 2;
  cfg.learning_rate = 1e-4;
  cfg.clip_c = 0.05;
  cfg.total_steps = 8;
  cfg.seed = 17;

  auto run = [&cfg](bool ambient) {
    TrainConfig c = cfg;
    c.ambientgan_mode = ambient;
    MisganTrainer trainer(small_model(17), toy_dataset(17), c);
    trainer.run();
    return trainer;
  };

  SUBCASE("same seed twice gives bitwise-identical logs") {
    MisganTrainer a = run(false);
    MisganTrainer b = run(false);
    REQUIRE(a.log().size() == b.log().size());
    for (std::size_t i = 0; i < a.log().size(); ++i) {
      CHECK(a.log()[i].loss_mask == b.log()[i].loss_mask);
      CHECK(a.log()[i].loss_data == b.log()[i].loss_data);
    }
    CHECK(parameter_checksum(a.model().g_x) == parameter_checksum(b.model().g_x));
  }

  SUBCASE("critic parameters stay inside [-c, c]") {
    MisganTrainer t = run(false);
    for (const Network* critic : {&t.model().d_x, &t.model().d_m})
      for (const NodePtr& p : critic->parameters())
        for (double v : p->value.data) {
          CHECK(v <= cfg.clip_c);
          CHECK(v >= -cfg.clip_c);
        }
  }

  SUBCASE("zero learning rate leaves every parameter unchanged") {
    TrainConfig frozen = cfg;
    frozen.learning_rate = 0.0;
    MisganModel model = small_model(17);
    MisganTrainer trainer(std::move(model), toy_dataset(17), frozen);
    const double gx = parameter_checksum(trainer.model().g_x);
    const double gm = parameter_checksum(trainer.model().g_m);
    const double dx = parameter_checksum(trainer.model().d_x);
    const double dm = parameter_checksum(trainer.model().d_m);
    trainer.run();
    CHECK(parameter_checksum(trainer.model().g_x) == gx);
    CHECK(parameter_checksum(trainer.model().g_m) == gm);
    CHECK(parameter_checksum(trainer.model().d_x) == dx);
    CHECK(parameter_checksum(trainer.model().d_m) == dm);
  }

  SUBCASE("ambient mode never touches the mask critic") {
    TrainConfig c = cfg;
    c.ambientgan_mode = true;
    MisganTrainer trainer(small_model(17), toy_dataset(17), c);
    const double dm_before = parameter_checksum(trainer.model().d_m);
    trainer.run();
    CHECK(parameter_checksum(trainer.model().d_m) == dm_before);
    CHECK(std::isnan(trainer.log().back().loss_mask));
  }
}

TEST_CASE("trainer validates its inputs") {
  TrainConfig bad;
  bad.n_critic = 0;
  CHECK_THROWS_AS(MisganTrainer(small_model(1), toy_dataset(1), bad), std::invalid_argument);
  TrainConfig ok;
  IncompleteDataset empty;
  empty.n = 2;
  CHECK_THROWS_AS(MisganTrainer(small_model(1), empty, ok), std::invalid_argument);
}

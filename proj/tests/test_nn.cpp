#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "networld/nn/adam.hpp"
#include "networld/nn/checkpoint.hpp"
#include "networld/nn/gradcheck.hpp"
#include "networld/nn/graph.hpp"
#include "networld/nn/layers.hpp"
#include "networld/nn/tensor.hpp"

using namespace networld;
using nn::Index;

namespace {

nn::TensorD make2(Index r, Index c, std::initializer_list<double> v) {
  return nn::TensorD({r, c}, std::vector<double>(v));
}

}  // namespace

TEST_SUITE("nn") {

TEST_CASE("dense + silu forward matches a hand-computed example") {
  // One hidden layer on input [1, 2]; every intermediate verified by hand.
  nn::GraphD g;
  const int x = g.constant(make2(1, 2, {1.0, 2.0}));
  const int w1 = g.constant(make2(3, 2, {0.5, -0.25, 0.1, 0.3, -0.2, 0.6}));
  const int b1 = g.constant(nn::TensorD({3}, {0.1, -0.1, 0.2}));
  const int w2 = g.constant(make2(2, 3, {1.0, 0.5, -1.0, 0.25, 0.5, 0.75}));
  const int b2 = g.constant(nn::TensorD({2}, {0.05, -0.05}));

  const int h = g.add_rowvec(g.matmul_nt(x, w1), b1);
  CHECK(g.value(h).at(0, 0) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(g.value(h).at(0, 1) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(g.value(h).at(0, 2) == doctest::Approx(1.2).epsilon(1e-12));

  const int a = g.silu(h);
  CHECK(g.value(a).at(0, 0) == doctest::Approx(0.052497918747894).epsilon(1e-12));
  CHECK(g.value(a).at(0, 1) == doctest::Approx(0.3873937837354772).epsilon(1e-12));
  CHECK(g.value(a).at(0, 2) == doctest::Approx(0.9222297401988211).epsilon(1e-12));

  const int y = g.add_rowvec(g.matmul_nt(a, w2), b2);
  CHECK(g.value(y).at(0, 0) == doctest::Approx(-0.6260349295831884).epsilon(1e-12));
  CHECK(g.value(y).at(0, 1) == doctest::Approx(0.8484936767038279).epsilon(1e-12));
}

TEST_CASE("conv1d forward on tiny hand-checkable inputs") {
  nn::GraphD g;
  const int x = g.constant(nn::TensorD({1, 1, 4}, {1, 2, 3, 4}));
  const int b0 = g.constant(nn::TensorD({1}, {0.0}));

  // Centered delta kernel with same-padding is the identity.
  const int wid = g.constant(nn::TensorD({1, 1, 3}, {0, 1, 0}));
  const int y1 = g.conv1d(x, wid, b0, 1, 1);
  for (Index l = 0; l < 4; ++l) CHECK(g.value(y1).at(0, 0, l) == doctest::Approx(l + 1.0));

  // Left-shifted delta delays the sequence by one step.
  const int wsh = g.constant(nn::TensorD({1, 1, 3}, {1, 0, 0}));
  const int y2 = g.conv1d(x, wsh, b0, 1, 1);
  CHECK(g.value(y2).at(0, 0, 0) == doctest::Approx(0.0));
  CHECK(g.value(y2).at(0, 0, 3) == doctest::Approx(3.0));

  // Stride 2 keeps every other frame.
  const int y3 = g.conv1d(x, wid, b0, 2, 1);
  REQUIRE(g.value(y3).size(2) == 2);
  CHECK(g.value(y3).at(0, 0, 0) == doctest::Approx(1.0));
  CHECK(g.value(y3).at(0, 0, 1) == doctest::Approx(3.0));
}

TEST_CASE("conv1d_transpose forward scatters overlapping windows") {
  nn::GraphD g;
  const int x = g.constant(nn::TensorD({1, 1, 2}, {1, 2}));
  const int w = g.constant(nn::TensorD({1, 1, 3}, {1, 1, 1}));
  const int b0 = g.constant(nn::TensorD({1}, {0.0}));
  const int y = g.conv1d_transpose(x, w, b0, 2, 0);
  REQUIRE(g.value(y).size(2) == 5);
  const double expect[5] = {1, 1, 3, 2, 2};
  for (Index l = 0; l < 5; ++l) CHECK(g.value(y).at(0, 0, l) == doctest::Approx(expect[l]));
}

TEST_CASE("group_norm standardizes within each group") {
  nn::GraphD g;
  const int x = g.constant(nn::TensorD({1, 2, 2}, {1, 2, 3, 4}));
  const int gamma = g.constant(nn::TensorD({2}, {1.0, 1.0}));
  const int beta = g.constant(nn::TensorD({2}, {0.0, 0.0}));

  const int y1 = g.group_norm(x, gamma, beta, 1);
  double mean = 0.0, var = 0.0;
  for (Index i = 0; i < 4; ++i) mean += g.value(y1)[i];
  mean /= 4;
  for (Index i = 0; i < 4; ++i) var += (g.value(y1)[i] - mean) * (g.value(y1)[i] - mean);
  var /= 4;
  CHECK(std::abs(mean) < 1e-12);
  CHECK(var == doctest::Approx(1.0).epsilon(1e-4));

  const int y2 = g.group_norm(x, gamma, beta, 2);
  // group {1,2}: zero-mean, unit-ish variance with the stabilizing epsilon
  CHECK(g.value(y2).at(0, 0, 0) == doctest::Approx(-0.99998).epsilon(1e-4));
  CHECK(g.value(y2).at(0, 0, 1) == doctest::Approx(0.99998).epsilon(1e-4));
}

TEST_CASE("softmax rows sum to one; cross entropy matches -log p") {
  nn::GraphD g;
  const int x = g.constant(make2(2, 3, {0.5, 1.5, -0.25, 3.0, 3.0, 3.0}));
  const int p = g.softmax_rows(x);
  for (Index i = 0; i < 2; ++i) {
    double s = 0.0;
    for (Index k = 0; k < 3; ++k) s += g.value(p).at(i, k);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(g.value(p).at(1, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  nn::TensorD onehot = make2(2, 3, {0, 1, 0, 1, 0, 0});
  const int ce = g.softmax_xent_rows(x, onehot);
  CHECK(g.value(ce)[0] == doctest::Approx(-std::log(g.value(p).at(0, 1))).epsilon(1e-10));
  CHECK(g.value(ce)[1] == doctest::Approx(-std::log(1.0 / 3.0)).epsilon(1e-10));
}

TEST_CASE("stopgrad blocks the gradient path") {
  nn::GraphD g;
  const int x = g.leaf(nn::TensorD({4}, {1, 2, 3, 4}));
  const int y = g.add(x, g.stopgrad(x));  // d/dx should be 1, not 2
  const int loss = g.sum_vec(y);
  g.backward(loss);
  for (Index i = 0; i < 4; ++i) CHECK(g.grad(x)[i] == doctest::Approx(1.0));
}

TEST_CASE("gradcheck: dense stack with shared weights") {
  util::Rng rng(101);
  nn::ParamStore<double> ps;
  nn::Dense<double> l1(ps, "l1", 3, 4, rng);
  nn::Dense<double> l2(ps, "l2", 4, 2, rng);
  auto& x1 = ps.add("x1", {2, 3}, rng, nn::Init::kNormal, 0, 1.0);
  auto& x2 = ps.add("x2", {2, 3}, rng, nn::Init::kNormal, 0, 1.0);
  const nn::TensorD t1 = nn::TensorD::randn({2, 2}, rng);
  const nn::TensorD t2 = nn::TensorD::randn({2, 2}, rng);

  auto f = [&](bool grad) {
    nn::GraphD g;
    const int y1 = l2.apply(g, g.silu(l1.apply(g, g.param(x1))));
    const int y2 = l2.apply(g, g.silu(l1.apply(g, g.param(x2))));
    const int loss = g.wsum({{g.mse(y1, t1), 1.0}, {g.mse(y2, t2), 0.5}});
    if (grad) g.backward(loss);
    return g.value(loss)[0];
  };
  CHECK(nn::grad_check(f, ps.all()) < 1e-6);
}

TEST_CASE("gradcheck: conv1d + group_norm + strided conv") {
  util::Rng rng(202);
  nn::ParamStore<double> ps;
  nn::Conv1d<double> c1(ps, "c1", 3, 4, 3, 1, 1, rng);
  nn::GroupNorm<double> gn(ps, "gn", 4, 2, rng);
  nn::Conv1d<double> c2(ps, "c2", 4, 2, 3, 2, 1, rng);
  auto& x = ps.add("x", {2, 3, 8}, rng, nn::Init::kNormal, 0, 1.0);
  const nn::TensorD target = nn::TensorD::randn({2, 2, 4}, rng);

  auto f = [&](bool grad) {
    nn::GraphD g;
    const int y = c2.apply(g, g.silu(gn.apply(g, c1.apply(g, g.param(x)))));
    const int loss = g.mse(y, target);
    if (grad) g.backward(loss);
    return g.value(loss)[0];
  };
  CHECK(nn::grad_check(f, ps.all()) < 1e-6);
}

TEST_CASE("gradcheck: transposed conv upsampling") {
  util::Rng rng(303);
  nn::ParamStore<double> ps;
  nn::ConvT1d<double> up(ps, "up", 3, 2, 4, 2, 1, rng);
  auto& x = ps.add("x", {2, 3, 4}, rng, nn::Init::kNormal, 0, 1.0);
  const nn::TensorD target = nn::TensorD::randn({2, 2, 8}, rng);

  auto f = [&](bool grad) {
    nn::GraphD g;
    const int y = g.silu(up.apply(g, g.param(x)));
    const int loss = g.mse(y, target);
    if (grad) g.backward(loss);
    return g.value(loss)[0];
  };
  CHECK(nn::grad_check(f, ps.all()) < 1e-6);
}

TEST_CASE("gradcheck: embedding, scatter_mean, gather, concat") {
  util::Rng rng(404);
  nn::ParamStore<double> ps;
  nn::Embedding<double> emb(ps, "emb", 5, 4, rng);
  auto& x = ps.add("x", {3, 2}, rng, nn::Init::kNormal, 0, 1.0);
  const nn::TensorD target = nn::TensorD::randn({3, 6}, rng);

  auto f = [&](bool grad) {
    nn::GraphD g;
    const int e = emb.apply(g, {1, 3, 3, 0});               // [4, 4]
    const int m = g.scatter_mean(e, {0, 1, 1, -1}, 3);      // group 2 stays empty
    const int gz = g.gather_rows(m, {0, 1, 2});             // [3, 4]
    const int cat = g.concat_cols(gz, g.param(x));          // [3, 6]
    const int loss = g.mse(cat, target);
    if (grad) g.backward(loss);
    return g.value(loss)[0];
  };
  CHECK(nn::grad_check(f, ps.all()) < 1e-6);
}

TEST_CASE("gradcheck: temporal reshaping, padding, conditioning bias") {
  util::Rng rng(505);
  nn::ParamStore<double> ps;
  auto& rows = ps.add("rows", {6, 3}, rng, nn::Init::kNormal, 0, 1.0);  // B=2, H=3
  auto& cb = ps.add("cb", {2, 3}, rng, nn::Init::kNormal, 0, 1.0);
  const nn::TensorD target = nn::TensorD::randn({2, 3}, rng);

  auto f = [&](bool grad) {
    nn::GraphD g;
    int h = g.rows_to_chl(g.param(rows), 2, 3);  // [2,3,3]
    h = g.pad_time_edge(h, 5);
    h = g.add_chan_embed(h, g.param(cb));
    h = g.crop_time(h, 4);
    h = g.silu(g.mean_time(h));  // [2,3]
    const int loss = g.mse(h, target);
    if (grad) g.backward(loss);
    return g.value(loss)[0];
  };
  CHECK(nn::grad_check(f, ps.all()) < 1e-6);
}

TEST_CASE("clamp_time0 splices the first frame and routes gradients by slot") {
  util::Rng rng(808);
  nn::ParamStore<double> ps;
  auto& noisy = ps.add("noisy", {2, 2, 3}, rng, nn::Init::kNormal, 0, 1.0);
  auto& clean = ps.add("clean", {2, 2, 3}, rng, nn::Init::kNormal, 0, 1.0);
  const nn::TensorD target = nn::TensorD::randn({2, 2, 3}, rng);

  {
    nn::GraphD g;
    const int y = g.clamp_time0(g.param(noisy), g.param(clean));
    for (Index b = 0; b < 2; ++b)
      for (Index c = 0; c < 2; ++c) {
        CHECK(g.value(y).at(b, c, 0) == clean.value.at(b, c, 0));
        CHECK(g.value(y).at(b, c, 1) == noisy.value.at(b, c, 1));
      }
  }

  auto f = [&](bool grad) {
    nn::GraphD g;
    const int loss = g.mse(g.clamp_time0(g.param(noisy), g.param(clean)), target);
    if (grad) g.backward(loss);
    return g.value(loss)[0];
  };
  CHECK(nn::grad_check(f, ps.all()) < 1e-6);
}

TEST_CASE("gradcheck: softmax cross entropy, expected-bin decode path") {
  util::Rng rng(606);
  nn::ParamStore<double> ps;
  auto& logits = ps.add("logits", {3, 5}, rng, nn::Init::kNormal, 0, 1.0);
  nn::TensorD soft = make2(3, 5,
                           {0.2, 0.3, 0.5, 0.0, 0.0,
                            0.0, 0.0, 0.0, 1.0, 0.0,
                            0.1, 0.1, 0.1, 0.1, 0.6});
  const nn::TensorD centers({5}, {-2.0, -1.0, 0.0, 1.0, 2.0});

  auto f = [&](bool grad) {
    nn::GraphD g;
    const int lx = g.param(logits);
    const int ce = g.mean_vec(g.softmax_xent_rows(lx, soft));
    const int dec = g.mean_vec(g.symexp_vec(g.rowdot_const(g.softmax_rows(lx), centers)));
    const int loss = g.wsum({{ce, 1.0}, {dec, 0.25}});
    if (grad) g.backward(loss);
    return g.value(loss)[0];
  };
  CHECK(nn::grad_check(f, ps.all()) < 1e-6);
}

TEST_CASE("gradcheck: per-sample linear combination (forward noising)") {
  util::Rng rng(707);
  nn::ParamStore<double> ps;
  auto& x0 = ps.add("x0", {3, 2, 4}, rng, nn::Init::kNormal, 0, 1.0);
  const nn::TensorD noise = nn::TensorD::randn({3, 2, 4}, rng);
  const nn::TensorD target = nn::TensorD::randn({3, 2, 4}, rng);
  const std::vector<double> a = {0.9, 0.5, 0.1};
  const std::vector<double> c = {0.435889894354067, 0.866025403784439, 0.99498743710662};

  auto f = [&](bool grad) {
    nn::GraphD g;
    const int xt = g.lincomb_per_sample(g.param(x0), noise, a, c);
    const int loss = g.mse(xt, target);
    if (grad) g.backward(loss);
    return g.value(loss)[0];
  };
  CHECK(nn::grad_check(f, ps.all()) < 1e-6);
}

TEST_CASE("adam first steps move by ~lr under constant gradient") {
  nn::Parameter<float> w("w", nn::TensorF({1}, {1.0f}));
  nn::Adam<float> opt({.lr = 0.1});
  opt.add_group({&w});
  for (int step = 1; step <= 3; ++step) {
    w.zero_grad();
    w.grad[0] = 0.5f;
    CHECK(opt.step());
    // With a constant gradient the bias-corrected update is lr * sign(g).
    CHECK(w.value[0] == doctest::Approx(1.0 - 0.1 * step).epsilon(1e-5));
  }
  CHECK(opt.applied_steps() == 3);
}

TEST_CASE("adam skips non-finite gradients without touching parameters") {
  nn::Parameter<float> w("w", nn::TensorF({2}, {1.0f, 2.0f}));
  nn::Adam<float> opt;
  opt.add_group({&w});
  w.grad[0] = std::numeric_limits<float>::quiet_NaN();
  CHECK_FALSE(opt.step());
  CHECK(w.value[0] == 1.0f);
  CHECK(opt.skipped_steps() == 1);
  CHECK(opt.applied_steps() == 0);
}

TEST_CASE("checkpoint save/load round trips exactly, validates shape and names") {
  util::Rng rng(808);
  const std::string path = "test_nn_ckpt.bin";

  nn::ParamStore<float> src;
  src.add("a.W", {3, 4}, rng, nn::Init::kNormal, 0, 1.0);
  src.add("a.b", {4}, rng, nn::Init::kNormal, 0, 1.0);
  src.add("emb.table", {5, 2}, rng, nn::Init::kNormal, 0, 1.0);
  util::KvDoc meta;
  meta.set("latent_dim", 8);
  meta.set("task", "cbf");
  nn::save_checkpoint(src, path, meta);

  util::KvDoc peeked = nn::peek_checkpoint_meta(path);
  CHECK(peeked.get_int("latent_dim") == 8);

  nn::ParamStore<float> dst;
  dst.add("a.W", {3, 4}, rng, nn::Init::kZero);
  dst.add("a.b", {4}, rng, nn::Init::kZero);
  dst.add("emb.table", {5, 2}, rng, nn::Init::kZero);
  util::KvDoc meta2 = nn::load_checkpoint(dst, path);
  CHECK(meta2.get_string("task") == "cbf");
  for (const char* name : {"a.W", "a.b", "emb.table"}) {
    auto& a = src.at(name).value;
    auto& b = dst.at(name).value;
    REQUIRE(a.same_shape(b));
    for (Index i = 0; i < a.numel(); ++i) CHECK(a[i] == b[i]);
  }

  nn::ParamStore<float> wrong_shape;
  wrong_shape.add("a.W", {4, 3}, rng, nn::Init::kZero);
  wrong_shape.add("a.b", {4}, rng, nn::Init::kZero);
  wrong_shape.add("emb.table", {5, 2}, rng, nn::Init::kZero);
  CHECK_THROWS_WITH_AS(nn::load_checkpoint(wrong_shape, path),
                       doctest::Contains("a.W"), std::runtime_error);

  nn::ParamStore<float> wrong_name;
  wrong_name.add("a.W", {3, 4}, rng, nn::Init::kZero);
  wrong_name.add("a.b", {4}, rng, nn::Init::kZero);
  wrong_name.add("other", {5, 2}, rng, nn::Init::kZero);
  CHECK_THROWS_AS(nn::load_checkpoint(wrong_name, path), std::runtime_error);

  CHECK_THROWS_AS(nn::load_checkpoint(dst, "does_not_exist.bin"), std::runtime_error);
  std::filesystem::remove(path);
}

TEST_CASE("sinusoidal timestep code has unit amplitude pairs") {
  auto e = nn::sinusoidal_embedding<double>({0, 3}, 4);
  REQUIRE(e.shape() == nn::Shape{2, 4});
  CHECK(e.at(0, 0) == doctest::Approx(1.0));  // cos(0)
  CHECK(e.at(0, 2) == doctest::Approx(0.0));  // sin(0)
  CHECK(e.at(1, 0) == doctest::Approx(std::cos(3.0)));
  CHECK(e.at(1, 2) == doctest::Approx(std::sin(3.0)));
  // cos^2 + sin^2 = 1 for each frequency
  for (Index j = 0; j < 2; ++j)
    CHECK(e.at(1, j) * e.at(1, j) + e.at(1, j + 2) * e.at(1, j + 2) == doctest::Approx(1.0));
}

TEST_CASE("shape errors carry both operand shapes") {
  nn::GraphD g;
  const int a = g.constant(nn::TensorD({2, 3}));
  const int b = g.constant(nn::TensorD({2, 3}));
  CHECK_THROWS_WITH_AS(g.matmul(a, b), doctest::Contains("matmul"), std::runtime_error);
}

}  // TEST_SUITE

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cognisnn/rng.hpp"
#include "cognisnn/spiking.hpp"
#include "fd_check.hpp"

using namespace cognisnn;

namespace {

Tensor random_binary(std::vector<int> shape, Rng& rng, double p = 0.5) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (auto& v : t.values()) v = rng.bernoulli(p) ? 1.0 : 0.0;
  return t;
}

bool all_binary(const Tensor& t) {
  for (double v : t.values())
    if (v != 0.0 && v != 1.0) return false;
  return true;
}

}  // namespace

TEST_CASE("lif stays silent on zero input") {
  LIFParams p;
  LIFState s;
  for (int t = 0; t < 10; ++t) {
    auto spike = lif_step(s, p, Tensor::zeros({1, 1, 2, 2}));
    for (double v : spike.values()) CHECK(v == 0.0);
    for (double v : s.u.values()) CHECK(v == 0.0);
  }
}

TEST_CASE("lif integrates, fires, and soft-resets") {
  LIFParams p;  // tau 0.5, u_th 1.0
  LIFState s;
  auto drive = Tensor::full({1}, 0.8);
  auto s1 = lif_step(s, p, drive);
  CHECK(s.u.values()[0] == doctest::Approx(0.8));
  CHECK(s1.values()[0] == 0.0);
  auto s2 = lif_step(s, p, drive);
  CHECK(s.u.values()[0] == doctest::Approx(1.2));
  CHECK(s2.values()[0] == 1.0);
  auto s3 = lif_step(s, p, drive);
  // 0.5 * 1.2 + 0.8 - 1.0 = 0.4: the threshold was subtracted, not cleared
  CHECK(s.u.values()[0] == doctest::Approx(0.4));
  CHECK(s3.values()[0] == 0.0);
}

TEST_CASE("lif fires at exact threshold") {
  LIFParams p;
  LIFState s;
  auto spike = lif_step(s, p, Tensor::full({1}, 1.0));
  CHECK(spike.values()[0] == 1.0);
}

TEST_CASE("lif validates params and shapes") {
  LIFParams p;
  p.tau = 1.5;
  LIFState s;
  CHECK_THROWS_AS(lif_step(s, p, Tensor::zeros({1})), InvalidSpecError);
  p.tau = 0.5;
  p.u_th = 0.0;
  CHECK_THROWS_AS(lif_step(s, p, Tensor::zeros({1})), InvalidSpecError);
  p.u_th = 1.0;
  lif_step(s, p, Tensor::zeros({2}));
  CHECK_THROWS_AS(lif_step(s, p, Tensor::zeros({3})), ShapeMismatchError);
}

TEST_CASE("lif gradients flow through time") {
  LIFParams p;
  auto drive = Tensor::full({1}, 0.8, true);
  LIFState s;
  Tape tape;
  Tensor total;
  {
    Tape::Scope scope(tape);
    Tensor acc = Tensor::zeros({1});
    for (int t = 0; t < 3; ++t) acc = add(acc, lif_step(s, p, drive));
    total = sum(acc);
  }
  backward(total, tape);
  CHECK(std::fabs(drive.grad()[0]) > 0.01);  // surrogate path is alive
}

TEST_CASE("triplet composition and binary closure") {
  Rng rng(3);
  LIFParams lif;
  auto t = ConvBNSNTriplet::create(2, 4, 3, lif, rng);
  auto x = Tensor::zeros({2, 2, 6, 6});
  for (auto& v : x.values()) v = rng.normal();
  auto y = triplet_forward(t, x, true);
  CHECK(y.shape() == std::vector<int>{2, 4, 6, 6});
  CHECK(all_binary(y));
}

TEST_CASE("triplet with zeroed bn emits nothing from rest") {
  Rng rng(5);
  LIFParams lif;
  auto t = ConvBNSNTriplet::create(1, 3, 3, lif, rng);
  std::fill(t.bn.gamma.values().begin(), t.bn.gamma.values().end(), 0.0);
  auto x = random_binary({1, 1, 4, 4}, rng);
  for (int step = 0; step < 4; ++step) {
    auto y = triplet_forward(t, x, true);
    for (double v : y.values()) CHECK(v == 0.0);
  }
}

TEST_CASE("resnode identity mapping with zeroed second bn") {
  Rng rng(7);
  LIFParams lif;
  int cases = 0;
  for (auto [h, c] : {std::pair{4, 2}, std::pair{6, 3}, std::pair{8, 1}}) {
    auto node = ResNode::create(c, c, lif, rng);
    std::fill(node.triplet2.bn.gamma.values().begin(),
              node.triplet2.bn.gamma.values().end(), 0.0);
    std::fill(node.triplet2.bn.beta.values().begin(),
              node.triplet2.bn.beta.values().end(), 0.0);
    auto probe = ResNode::create(c, c, lif, rng);
    probe.triplet1.conv_weight.values() = node.triplet1.conv_weight.values();
    probe.triplet1.bn.gamma.values() = node.triplet1.bn.gamma.values();
    probe.triplet1.bn.beta.values() = node.triplet1.bn.beta.values();
    for (int trial = 0; trial < 334; ++trial) {
      auto x = random_binary({1, c, h, h}, rng);
      auto full = resnode_forward(node, x, true);
      auto identity = triplet_forward(probe.triplet1, x, true);
      CHECK(full.values() == identity.values());
      ++cases;
    }
    node.reset_state();
    probe.reset_state();
  }
  CHECK(cases >= 1000);
}

TEST_CASE("resnode absorbs all-ones identity branch") {
  Rng rng(11);
  LIFParams lif;
  auto node = ResNode::create(1, 2, lif, rng);
  // force triplet1 to fire everywhere: huge positive beta
  std::fill(node.triplet1.bn.beta.values().begin(),
            node.triplet1.bn.beta.values().end(), 100.0);
  auto x = random_binary({1, 1, 4, 4}, rng);
  auto y = resnode_forward(node, x, true);
  for (double v : y.values()) CHECK(v == 1.0);
}

TEST_CASE("resnode output is strictly binary on real input") {
  Rng rng(13);
  LIFParams lif;
  auto node = ResNode::create(2, 3, lif, rng);
  for (int trial = 0; trial < 20; ++trial) {
    auto x = Tensor::zeros({2, 2, 4, 4});
    for (auto& v : x.values()) v = rng.normal() * 3.0;
    CHECK(all_binary(resnode_forward(node, x, true)));
  }
}

TEST_CASE("or equals max on binary values") {
  Rng rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    auto a = random_binary({8}, rng);
    auto b = random_binary({8}, rng);
    auto c = or_combine(a, b);
    for (int i = 0; i < 8; ++i)
      CHECK(c.values()[i] == std::max(a.values()[i], b.values()[i]));
  }
}

TEST_CASE("reset restores identical spike trains") {
  Rng rng(19);
  LIFParams lif;
  auto node = ResNode::create(1, 2, lif, rng);
  std::vector<Tensor> frames;
  for (int t = 0; t < 4; ++t) frames.push_back(random_binary({1, 1, 4, 4}, rng));
  std::vector<std::vector<double>> first, second;
  for (int run = 0; run < 2; ++run) {
    node.reset_state();
    for (const auto& f : frames)
      (run == 0 ? first : second)
          .push_back(resnode_forward(node, f, true).values());
  }
  CHECK(first == second);
}

TEST_CASE("standard pool guard") {
  PoolingPolicy policy;  // eta 1, kappa 2
  auto big = Tensor::full({1, 1, 32, 32}, 1.0);
  CHECK(standard_pool(big, policy).dim(2) == 16);
  auto tiny = Tensor::full({1, 1, 1, 1}, 1.0);
  CHECK(standard_pool(tiny, policy).dim(2) == 1);
  PoolingPolicy strict;
  strict.eta = 4;
  auto mid = Tensor::full({1, 1, 4, 4}, 1.0);
  CHECK(standard_pool(mid, strict).dim(2) == 4);  // 4/2 < eta, unchanged
  CHECK(standard_pool(mid, policy).dim(2) == 2);
}

TEST_CASE("adaptive pool aligns to the minimum dimension") {
  auto a = Tensor::full({1, 2, 32, 32}, 1.0);
  auto b = Tensor::full({1, 2, 16, 16}, 1.0);
  auto c = Tensor::full({1, 2, 16, 16}, 1.0);
  auto out = adaptive_pool({a, b, c});
  for (const auto& t : out) {
    CHECK(t.dim(2) == 16);
    CHECK(t.dim(3) == 16);
  }
  CHECK(out[1].id() == b.id());  // kernel 1 passes through

  CHECK(adaptive_pool_kernel(64, 16) == 4);
  CHECK(adaptive_pool_kernel(16, 16) == 1);
  CHECK_THROWS_AS(adaptive_pool_kernel(48, 32), IncompatibleDimensionsError);
  CHECK_THROWS_AS(adaptive_pool_kernel(16, 32), IncompatibleDimensionsError);
}

TEST_CASE("adaptive pool validates batch and channel dims") {
  auto a = Tensor::full({1, 2, 8, 8}, 1.0);
  auto b = Tensor::full({1, 3, 8, 8}, 1.0);
  CHECK_THROWS_AS(adaptive_pool({a, b}), IncompatibleDimensionsError);
  auto c = Tensor::full({1, 2, 8, 4}, 1.0);
  CHECK_THROWS_AS(adaptive_pool({a, c}), IncompatibleDimensionsError);
}

TEST_CASE("relaxed lif gradients match finite differences") {
  LIFParams p;
  p.surrogate.relaxed_forward = true;
  Rng rng(29);
  auto drive = Tensor::zeros({1, 6}, true);
  for (auto& v : drive.values()) v = 0.5 + 0.4 * rng.uniform();
  auto loss_fn = [&]() {
    LIFState s;
    Tensor acc = Tensor::zeros({1, 6});
    for (int t = 0; t < 3; ++t) acc = add(acc, lif_step(s, p, drive));
    return sum(acc);
  };
  auto r = fdcheck::run(loss_fn, {drive});
  CHECK(r.failures == 0);
}

TEST_CASE("relaxed resnode gradients match finite differences") {
  LIFParams p;
  p.surrogate.relaxed_forward = true;
  Rng rng(31);
  auto node = ResNode::create(1, 2, p, rng);
  auto x = Tensor::zeros({1, 1, 3, 3}, true);
  for (auto& v : x.values()) v = rng.normal();
  auto loss_fn = [&]() {
    node.reset_state();
    return mean(resnode_forward(node, x, false));
  };
  auto r = fdcheck::run(loss_fn, {x, node.triplet1.conv_weight});
  CHECK(r.failures == 0);
}

TEST_CASE("adaptive pool preserves mean activation") {
  Rng rng(23);
  auto a = random_binary({2, 1, 8, 8}, rng, 0.3);
  auto b = random_binary({2, 1, 4, 4}, rng, 0.3);
  auto out = adaptive_pool({a, b});
  CHECK(mean(out[0]).item() == doctest::Approx(mean(a).item()).epsilon(1e-12));
  CHECK(mean(out[1]).item() == doctest::Approx(mean(b).item()).epsilon(1e-12));
}

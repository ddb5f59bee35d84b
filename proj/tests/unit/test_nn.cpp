#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "adiv/nn.hpp"
#include "doctest.h"
#include "helpers.hpp"
#include "nn_oracle.hpp"

using namespace adiv;
using namespace adiv::nn;

namespace {

SplitSample draw(const Sampler& p, const Sampler& q, std::size_t n, std::uint64_t seed) {
  BudgetLedger ledger;
  Rng rng(seed);
  return draw_split(p, q, n, rng, ledger);
}

Mlp random_net(std::size_t d, std::size_t h, Rng& rng) {
  Mlp net(d, h, rng);
  for (double& p : net.params()) p += 0.1 * rng.normal();
  return net;
}

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  return xs[xs.size() / 2];
}

}  // namespace

TEST_SUITE("nn") {
  TEST_CASE("full dropout with zero output bias scores one half") {
    Rng rng(1);
    Mlp net(3, 8, rng);
    REQUIRE(net.b2() == 0.0);
    const std::vector<double> x{0.3, -1.0, 2.0};
    CHECK(net.forward(x, 1.0, rng) == 0.5);
  }

  TEST_CASE("zero dropout is the plain forward") {
    Rng rng(2);
    const Mlp net = random_net(3, 8, rng);
    const std::vector<double> x{0.3, -1.0, 2.0};
    CHECK(net.forward(x, 0.0, rng) == net.forward(x));
  }

  TEST_CASE("half dropout matches an explicit matrix evaluation") {
    Rng init(3);
    const std::size_t d = 4, h = 6;
    const Mlp net = random_net(d, h, init);
    const std::vector<double> x{0.5, -0.2, 1.5, -1.0};
    Rng a(77), b(77);
    const double got = net.forward(x, 0.5, a);
    const std::vector<double> mask = dropout_mask(h, 0.5, b);

    const auto p = net.params();
    Eigen::MatrixXd w1(d, h);
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t k = 0; k < h; ++k) w1(j, k) = p[j * h + k];
    }
    Eigen::VectorXd xv = Eigen::Map<const Eigen::VectorXd>(x.data(), d);
    Eigen::VectorXd b1 = Eigen::Map<const Eigen::VectorXd>(p.data() + d * h, h);
    Eigen::VectorXd w2 = Eigen::Map<const Eigen::VectorXd>(p.data() + d * h + h, h);
    Eigen::VectorXd m = Eigen::Map<const Eigen::VectorXd>(mask.data(), h);
    const Eigen::VectorXd act = (w1.transpose() * xv + b1).cwiseMax(0.0).cwiseProduct(m);
    const double expect = 1.0 / (1.0 + std::exp(-(w2.dot(act) + p.back())));
    CHECK(got == doctest::Approx(expect).epsilon(1e-14));
  }

  TEST_CASE("dropout masks") {
    Rng rng(4);
    for (double v : dropout_mask(10, 0.0, rng)) CHECK(v == 1.0);
    for (double v : dropout_mask(10, 1.0, rng)) CHECK(v == 0.0);
    for (double v : dropout_mask(1000, 0.25, rng)) CHECK((v == 0.0 || v == doctest::Approx(1.0 / 0.75)));
    CHECK_THROWS(dropout_mask(3, 1.5, rng));
  }

  TEST_CASE("gradients match central differences") {
    Rng rng(5);
    const Mlp net = random_net(2, 4, rng);
    const Dataset bp = test::random_rows(5, 2, rng);
    const Dataset bq = test::random_rows(6, 2, rng);
    SUBCASE("cross-entropy only") {
      CHECK(test::fd_check(net, bp, bq, {Variant::none, 0.0}, 0.0, R1Target::output, 1).max_rel <= 1e-4);
    }
    SUBCASE("with R1 on the output") {
      CHECK(test::fd_check(net, bp, bq, {Variant::none, 0.0}, 10.0, R1Target::output, 1).max_rel <= 1e-4);
    }
    SUBCASE("with R1 on the logit") {
      CHECK(test::fd_check(net, bp, bq, {Variant::none, 0.0}, 10.0, R1Target::logit, 1).max_rel <= 1e-4);
    }
    SUBCASE("dropout masks held fixed") {
      CHECK(test::fd_check(net, bp, bq, {Variant::dropout, 0.3}, 1.0, R1Target::output, 9).max_rel <= 1e-4);
    }
    SUBCASE("l2 penalty") {
      CHECK(test::fd_check(net, bp, bq, {Variant::l2, 2.0}, 1.0, R1Target::output, 9).max_rel <= 1e-4);
    }
  }

  TEST_CASE("beta zero leaves only the cross-entropy gradient") {
    Rng rng(6);
    const Mlp net = random_net(3, 5, rng);
    const Dataset bp = test::random_rows(4, 3, rng);
    const Dataset bq = test::random_rows(4, 3, rng);
    Rng r(1);
    const Gradient g = backward(net, bp, bq, {Variant::l2, 0.5}, 0.0, r);
    CHECK(g.g == g.g0);
  }

  TEST_CASE("R1 of a one-unit net matches the closed form") {
    // f(x) = sigmoid(w x) with one active ReLU unit, unit output weight and
    // zero biases. R1 = (s(1-s) w)^2 for s = sigmoid(w x).
    const double w = 0.8, x = 1.3;
    const Mlp net(1, 1, std::vector<double>{w, 0.0, 1.0, 0.0});
    const Dataset bp(3, 1, {x, x, x});
    Rng rng(0);
    const Gradient g = backward(net, bp, bp, {}, 1.0, rng);
    const double s = sigmoid(w * x);
    const double sp = s * (1 - s);
    CHECK(r1_penalty(net, bp) == doctest::Approx(sp * sp * w * w).epsilon(1e-12));
    const double dr_dw = 2 * sp * w * (sp + w * x * sp * (1 - 2 * s));
    CHECK(std::abs(g.g1[0] - dr_dw) <= 1e-6);
    CHECK(r1_penalty(net, bp, R1Target::logit) == doctest::Approx(w * w).epsilon(1e-12));
  }

  TEST_CASE("R1 penalty equals the squared input gradient by differences") {
    Rng rng(7);
    const Mlp net = random_net(3, 6, rng);
    const Dataset bp = test::random_rows(4, 3, rng);
    double total = 0.0;
    for (std::size_t i = 0; i < bp.rows(); ++i) {
      for (std::size_t j = 0; j < 3; ++j) {
        std::vector<double> a(bp.row(i).begin(), bp.row(i).end()), b = a;
        a[j] += 1e-6;
        b[j] -= 1e-6;
        const double d = (net.forward(a) - net.forward(b)) / 2e-6;
        total += d * d;
      }
    }
    CHECK(r1_penalty(net, bp) == doctest::Approx(total / 4).epsilon(1e-6));
  }

  TEST_CASE("strength schedule") {
    NnConfig cfg;
    CHECK(regularization_strength(Variant::dropout, kLn2, cfg) == 0.0);
    CHECK(regularization_strength(Variant::dropout, 0.0, cfg) == 1.0);
    CHECK(regularization_strength(Variant::dropout, 0.25 * kLn2, cfg) == doctest::Approx(0.75));
    CHECK(regularization_strength(Variant::l2, kLn2, cfg) == 0.0);
    CHECK(regularization_strength(Variant::l2, 0.5 * kLn2, cfg) == doctest::Approx(std::log(2.0)));
    CHECK(regularization_strength(Variant::l2, 0.0, cfg) == cfg.zeta_max);
    CHECK(regularization_strength(Variant::l2, 1e-9, cfg) == cfg.zeta_max);
    CHECK(regularization_strength(Variant::none, 0.1, cfg) == 0.0);
    cfg.fixed_zeta = 0.4;
    CHECK(regularization_strength(Variant::dropout, 0.1, cfg) == 0.4);
  }

  TEST_CASE("EMA and strength follow the recorded losses exactly") {
    NnConfig cfg;
    cfg.record_trace = true;
    cfg.max_steps = 300;
    const auto split = draw(test::gaussian({0, 0}), test::gaussian({1.5, 0}), 256, 8);
    for (Variant v : {Variant::dropout, Variant::l2}) {
      Rng rng(9);
      const NnEstimate est = ad_nn(split, v, cfg, rng);
      REQUIRE(!est.trace.empty());
      double closed = 0.0;
      const double rho = cfg.ema_coeff;
      for (std::size_t t = 0; t < est.trace.size(); ++t) {
        // L(t) = rho^t ln 2 + (1 - rho) sum_k rho^k loss_{t-k}
        closed = 0.0;
        for (std::size_t k = 0; k <= t; ++k) {
          closed += (1 - rho) * std::pow(rho, static_cast<double>(k)) * est.trace[t - k].batch_loss;
        }
        closed += std::pow(rho, static_cast<double>(t + 1)) * kLn2;
        CHECK(std::abs(est.trace[t].l_acc - closed) <= 1e-12);
        const double prev = t == 0 ? kLn2 : est.trace[t - 1].l_acc;
        CHECK(est.trace[t].zeta == regularization_strength(v, prev, cfg));
      }
    }
  }

  TEST_CASE("identical samples: estimate near zero, capacity stays high") {
    NnConfig cfg;
    cfg.record_trace = true;
    const auto split = draw(test::gaussian({0, 0}), test::gaussian({0, 0}), 1024, 10);
    Rng rng(11);
    const NnEstimate est = ad_nn(split, Variant::dropout, cfg, rng);
    CHECK(std::abs(est.estimate.value) <= 0.05);
    std::vector<double> z;
    for (const auto& r : est.trace) z.push_back(r.zeta);
    CHECK(median(z) <= 0.1);
    CHECK(est.estimate.alpha_used >= 0.9);
  }

  TEST_CASE("disjoint supports: large estimate, dropout grows as the loss falls") {
    NnConfig cfg;
    cfg.record_trace = true;
    const auto split = draw(test::gaussian({-3, 0}, 0.5), test::gaussian({3, 0}, 0.5), 512, 12);
    Rng rng(13);
    const NnEstimate est = ad_nn(split, Variant::dropout, cfg, rng);
    CHECK(est.estimate.value >= 0.6);
    REQUIRE(est.trace.size() > 20);
    CHECK(est.trace.back().zeta > est.trace.front().zeta);
    CHECK(est.trace.back().l_acc < est.trace.front().l_acc);
  }

  TEST_CASE("training is bitwise deterministic") {
    NnConfig cfg;
    cfg.r1_coeff = 10.0;
    const auto split = draw(test::gaussian({0, 0}), test::gaussian({1, 1}), 256, 14);
    for (Variant v : {Variant::dropout, Variant::l2, Variant::none}) {
      Rng a(15), b(15);
      const NnEstimate ea = ad_nn(split, v, cfg, a);
      const NnEstimate eb = ad_nn(split, v, cfg, b);
      CHECK(ea.estimate.value == eb.estimate.value);
      CHECK(ea.net == eb.net);
    }
  }

  TEST_CASE("strong l2 shrinks the weights") {
    const auto split = draw(test::gaussian({0, 0}), test::gaussian({1, 0.5}), 512, 16);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      NnConfig strong, weak;
      strong.fixed_zeta = 10.0;
      weak.fixed_zeta = 0.01;
      Rng a(seed), b(seed);
      const double n_strong = ad_nn(split, Variant::l2, strong, a).net.weight_norm_sq();
      const double n_weak = ad_nn(split, Variant::l2, weak, b).net.weight_norm_sq();
      CHECK(n_strong < n_weak);
    }
  }

  TEST_CASE("regularized family maps alpha to strength") {
    const auto fam = regularized_family(Variant::dropout, {});
    CHECK(fam.kind == FamilyKind::regularized);
    CHECK_THROWS(regularized_family(Variant::none, {}));
  }

  TEST_CASE("warm-started training keeps its state") {
    NnConfig cfg;
    const auto split = draw(test::gaussian({0, 0}), test::gaussian({2, 0}), 128, 17);
    Rng init(1), r1(2), r2(3);
    Discriminator d(2, Variant::dropout, cfg, init);
    CHECK(d.l_acc() == kLn2);
    CHECK(d.alpha() == 1.0);
    d.train(split.p_train, split.q_train, r1, 50);
    const double after = d.l_acc();
    CHECK(after < kLn2);
    d.train(split.p_train, split.q_train, r2, 50);
    CHECK(d.l_acc() < after);
  }

  TEST_CASE("config validation and names") {
    NnConfig cfg;
    cfg.ema_coeff = 1.0;
    CHECK_THROWS(cfg.validate());
    CHECK(parse_variant(to_string(Variant::l2)) == Variant::l2);
    CHECK(parse_r1_target(to_string(R1Target::logit)) == R1Target::logit);
    CHECK_THROWS(parse_variant("batchnorm"));
  }

  TEST_CASE("trace csv") {
    std::ostringstream os;
    const std::vector<TraceRow> rows{{1, 0.5, 0.6, 0.1}};
    write_trace_csv(os, rows);
    CHECK(os.str().rfind("step,batch_loss,l_acc,zeta\n1,", 0) == 0);
  }
}

#include "doctest_torch.hpp"
#include "oracles.hpp"
#include "videogan/errors.hpp"
#include "videogan/losses.hpp"

using namespace videogan;
using namespace videogan::testing;

namespace {

constexpr double kExact = 1e-9;

torch::Tensor full(double v, std::vector<int64_t> shape = {1, 1, 4, 4}) {
  return torch::full(shape, v, torch::kDouble);
}

double value(const torch::Tensor& t) { return t.item<double>(); }

LossReport report_with(double value_for_all) {
  LossReport r;
  for (const auto& name : objective_terms()) r.terms[name] = value_for_all;
  return r;
}

}  // namespace

TEST_SUITE("losses") {
  TEST_CASE("adversarial generator side") {
    CHECK(value(adversarial_g(full(1))) == doctest::Approx(0).epsilon(kExact));
    CHECK(std::abs(value(adversarial_g(full(0))) - 1.0) <= kExact);
    const auto scores = torch::tensor({0.0, 0.5, 1.0, 2.0}, torch::kDouble).view({1, 1, 2, 2});
    CHECK(std::abs(value(adversarial_g(scores)) - 0.5625) <= kExact);
  }

  TEST_CASE("adversarial discriminator side") {
    CHECK(std::abs(value(adversarial_d(full(1), full(0)))) <= kExact);
    CHECK(std::abs(value(adversarial_d(full(0), full(1))) - 2.0) <= kExact);
    CHECK(std::abs(value(adversarial_d(full(0.5), full(0.5))) - 0.5) <= kExact);
  }

  TEST_CASE("adversarial cross-term identity at fake = real = k") {
    // (k-1)^2 + k^2 from the discriminator plus (k-1)^2 from the generator.
    for (double k : {0.0, 0.5, 1.0}) {
      const double got = value(adversarial_d(full(k), full(k)) + adversarial_g(full(k)));
      CHECK(std::abs(got - (2 * (k - 1) * (k - 1) + k * k)) <= kExact);
    }
  }

  TEST_CASE("empty score maps are rejected") {
    CHECK_THROWS_AS(adversarial_g(torch::empty({0})), ShapeError);
    CHECK_THROWS_AS(adversarial_d(torch::empty({0}), full(0)), ShapeError);
    CHECK_THROWS_AS(intra_video_c(torch::empty({0}), full(0, {1})), ShapeError);
  }

  TEST_CASE("cycle loss averages the two frames") {
    const auto s = torch::rand({1, 3, 4, 4}, torch::kDouble), r = torch::rand({1, 3, 4, 4}, torch::kDouble);
    CHECK(value(cycle_loss(s, r, s, r)) == 0.0);
    CHECK(std::abs(value(cycle_loss(s, r, s + 0.1, r + 0.1)) - 0.1) <= kExact);
    CHECK(std::abs(value(cycle_loss(s, r, s + 0.2, r)) - 0.1) <= kExact);
    CHECK_THROWS_AS(cycle_loss(s, r, s.narrow(3, 0, 2), r), ShapeError);
  }

  TEST_CASE("histogram loss") {
    const auto target = torch::tensor({-1.0, 0.0, 0.0, 0.0, 1.0}, torch::kDouble).repeat({3}).view({1, 15});
    CHECK(value(hist_loss(target, target)) == 0.0);
    CHECK(std::abs(value(hist_loss(target + 0.2, target)) - 0.2) <= kExact);
    CHECK(std::abs(value(hist_loss(torch::zeros_like(target), target)) - 0.4) <= kExact);
    CHECK_THROWS_AS(hist_loss(torch::zeros({1, 14}, torch::kDouble), target), ShapeError);
  }

  TEST_CASE("intra-video terms") {
    CHECK(value(intra_video_g(full(1, {1}))) == 0.0);
    CHECK(value(intra_video_c(full(1, {1}), full(0, {1}))) == 0.0);
    CHECK(std::abs(value(intra_video_c(full(0.5, {1}), full(0.5, {1}))) - 0.5) <= kExact);
    CHECK(std::abs(value(intra_video_g(full(0, {1}))) - 1.0) <= kExact);
  }

  TEST_CASE("identity loss") {
    const auto s = torch::rand({1, 3, 4, 4}, torch::kDouble), r = torch::rand({1, 3, 4, 4}, torch::kDouble);
    CHECK(value(identity_loss(s, r, s, r)) == 0.0);
    CHECK(std::abs(value(identity_loss(s + 0.05, r + 0.05, s, r)) - 0.05) <= kExact);
    CHECK(std::abs(value(identity_loss(s, r + 0.1, s, r)) - 0.05) <= kExact);
    CHECK_THROWS_AS(identity_loss(s, r, s, r.narrow(2, 0, 3)), ShapeError);
  }

  TEST_CASE("losses are nonnegative on random inputs") {
    for (int seed = 0; seed < 20; ++seed) {
      torch::manual_seed(seed);
      const auto a = torch::randn({2, 1, 4, 4}, torch::kDouble), b = torch::randn({2, 1, 4, 4}, torch::kDouble);
      CHECK(value(adversarial_g(a)) >= 0.0);
      CHECK(value(adversarial_d(a, b)) >= 0.0);
      CHECK(value(cycle_loss(a, b, b, a)) >= 0.0);
      CHECK(value(identity_loss(a, b, b, a)) >= 0.0);
      CHECK(value(hist_loss(a.view({2, 16}).narrow(1, 0, 15), b.view({2, 16}).narrow(1, 0, 15))) >= 0.0);
      CHECK(value(intra_video_c(a.view(-1), b.view(-1))) >= 0.0);
    }
  }

  TEST_CASE("total objective") {
    CHECK(objective_terms().size() == 8);
    CHECK(total_objective(report_with(0.0), LossWeights{}) == 0.0);
    CHECK(std::abs(total_objective(report_with(1.0), LossWeights::unit()) - 8.0) <= kExact);

    auto r = report_with(0.0);
    r.terms[loss_terms::kCyc] = 0.1;
    r.terms[loss_terms::kIdt] = 0.2;
    CHECK(std::abs(total_objective(r, LossWeights{}) - 2.0) <= kExact);

    r.terms.erase(loss_terms::kIvBA);
    CHECK_THROWS_WITH_AS(total_objective(r, LossWeights{}), doctest::Contains("iv_BA"), ConfigError);
  }

  TEST_CASE("total objective is linear in each term") {
    const LossWeights w{1.5, 10.0, 5.0, 2.0, 0.5};
    auto base = report_with(0.3);
    const double t0 = total_objective(base, w);
    for (const auto& name : objective_terms()) {
      auto bumped = base;
      bumped.terms[name] += 0.7;
      CHECK(std::abs(total_objective(bumped, w) - t0 - 0.7 * term_weight(name, w)) <= 1e-12);
    }
  }

  TEST_CASE("weights validation") {
    CHECK_NOTHROW(LossWeights{}.validate());
    CHECK_THROWS_AS((LossWeights{-1, 1, 1, 1, 1}.validate()), ConfigError);
    CHECK_THROWS_AS((LossWeights{1, std::nan(""), 1, 1, 1}.validate()), ConfigError);
  }

  TEST_CASE("gradients match finite differences") {
    torch::manual_seed(3);
    // Offsets keep every |x - y| at least 0.05 away from the kink at zero.
    const auto base = torch::rand({1, 3, 2, 2}, torch::kDouble);
    const auto offset = (torch::rand({1, 3, 2, 2}, torch::kDouble) * 0.5 + 0.05) *
                        torch::where(torch::rand({1, 3, 2, 2}) > 0.5, 1.0, -1.0).to(torch::kDouble);
    const auto other = base + offset;
    const auto scores = torch::randn({2, 1, 4, 4}, torch::kDouble);
    const auto hist_target = torch::rand({2, 15}, torch::kDouble) * 2 - 1;
    const auto hist_pred = hist_target + 0.1 * torch::where(torch::rand({2, 15}) > 0.5, 1.0, -1.0).to(torch::kDouble);

    auto check = [](auto fn, const torch::Tensor& at) {
      CHECK(max_relative_error(analytic_gradient(fn, at), numeric_gradient(fn, at)) <= 1e-4);
    };
    check([](const torch::Tensor& x) { return adversarial_g(x); }, scores);
    check([&](const torch::Tensor& x) { return adversarial_d(x, scores.flip(0)); }, scores);
    check([&](const torch::Tensor& x) { return adversarial_d(scores.flip(0), x); }, scores);
    check([&](const torch::Tensor& x) { return cycle_loss(base, base, x, base + 0.2); }, other);
    check([&](const torch::Tensor& x) { return identity_loss(base - 0.3, x, base, base); }, other);
    check([&](const torch::Tensor& x) { return hist_loss(x, hist_target); }, hist_pred);
    check([](const torch::Tensor& x) { return intra_video_g(x); }, scores.view(-1).narrow(0, 0, 4));
    check([&](const torch::Tensor& x) { return intra_video_c(x, scores.view(-1).narrow(0, 4, 4)); },
          scores.view(-1).narrow(0, 0, 4));
  }
}

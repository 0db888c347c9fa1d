#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "dynbandit/inference.hpp"
#include "dynbandit/rng.hpp"
#include "test_util.hpp"

using namespace dynbandit;

namespace {

double bernoulli_loglik(double activation, int y) {
  return y == 1 ? log_logistic(activation) : log_logistic(-activation);
}

Vector log_posterior_gradient(const PriorSnapshot& prior, const Vector& x, int y,
                              const Vector& beta) {
  const LogisticLink g;
  const Vector centered = beta - prior.mean;
  return -Eigen::LLT<Matrix>(prior.cov).solve(centered) +
         (static_cast<double>(y) - g(x.dot(beta))) * x;
}

}  // namespace

TEST_CASE("propagate_prior") {
  Rng rng = make_rng(5);
  const Matrix sigma = testutil::random_pd(rng, 4);
  const GaussianBelief belief(testutil::random_vector(rng, 4), sigma);

  SECTION("zero noise leaves the posterior untouched") {
    const PriorSnapshot prior = propagate_prior(belief, Matrix::Zero(4, 4));
    CHECK(prior.mean == belief.mean);
    CHECK(prior.cov.isApprox(belief.cov, 1e-15));
  }

  SECTION("identity example") {
    const GaussianBelief b(Vector::Zero(2), Matrix::Identity(2, 2));
    const PriorSnapshot prior = propagate_prior(b, 0.5 * Matrix::Identity(2, 2));
    CHECK(prior.cov.isApprox(1.5 * Matrix::Identity(2, 2), 1e-15));
  }

  SECTION("Q = q Sigma scales eigenvalues by exactly 1+q") {
    const double q = 0.37;
    const PriorSnapshot prior = propagate_prior(belief, q * sigma);
    Eigen::SelfAdjointEigenSolver<Matrix> base(belief.cov), wide(prior.cov);
    for (int i = 0; i < 4; ++i) {
      CHECK(wide.eigenvalues()[i] ==
            Catch::Approx((1.0 + q) * base.eigenvalues()[i]).epsilon(1e-12));
    }
  }

  SECTION("rejects bad noise") {
    Matrix indef = Matrix::Identity(4, 4);
    indef(0, 0) = -1.0;
    CHECK_THROWS_AS(propagate_prior(belief, indef), std::invalid_argument);
    CHECK_THROWS_AS(propagate_prior(belief, Matrix::Zero(3, 3)), std::invalid_argument);
  }
}

TEST_CASE("laplace_update hand-computed 1-d example") {
  // unit prior, x=1, y=1: theta_hat=0.5, u=0.5, Sigma = 1 - 0.25/1.25 = 0.8
  PriorSnapshot prior{Vector::Zero(1), Matrix::Identity(1, 1)};
  Vector x(1);
  x << 1.0;
  const GaussianBelief post = laplace_update(prior, x, 1);
  CHECK(std::abs(post.mean[0] - 0.5) <= 1e-12);
  CHECK(std::abs(post.cov(0, 0) - 0.8) <= 1e-12);
}

TEST_CASE("laplace_update with zero feature changes nothing") {
  Rng rng = make_rng(41);
  const PriorSnapshot prior{testutil::random_vector(rng, 5), testutil::random_pd(rng, 5)};
  const Vector x = Vector::Zero(5);
  for (int y : {0, 1}) {
    const GaussianBelief post = laplace_update(prior, x, y);
    CHECK(post.mean == prior.mean);
    CHECK(post.cov == prior.cov);
  }
}

TEST_CASE("laplace_update rejects bad input") {
  PriorSnapshot prior{Vector::Zero(2), Matrix::Identity(2, 2)};
  Vector x(2);
  x << 1.0, -1.0;
  CHECK_THROWS_AS(laplace_update(prior, x, 2), std::invalid_argument);
  CHECK_THROWS_AS(laplace_update(prior, x, -1), std::invalid_argument);
  PriorSnapshot bad{Vector::Zero(2), -Matrix::Identity(2, 2)};
  CHECK_THROWS_AS(laplace_update(bad, x, 1), std::invalid_argument);
}

TEST_CASE("Sherman-Morrison covariance equals the explicit precision inverse") {
  Rng rng = make_rng(2024);
  const LogisticLink g;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = 1 + static_cast<int>(uniform01(rng) * 10);
    const PriorSnapshot prior{testutil::random_vector(rng, d, 1.5),
                              testutil::random_pd(rng, d)};
    const Vector x = testutil::random_vector(rng, d);
    const int y = uniform01(rng) < 0.5 ? 0 : 1;
    const GaussianBelief post = laplace_update(prior, x, y);

    const double theta = clamp_theta(g(x.dot(prior.mean)));
    const Matrix precision =
        prior.cov.inverse() + theta * (1.0 - theta) * (x * x.transpose());
    const Matrix oracle = precision.inverse();
    worst = std::max(worst, testutil::rel_frobenius(post.cov, oracle));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("posterior covariance never exceeds the prior (Loewner)") {
  Rng rng = make_rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 1 + static_cast<int>(uniform01(rng) * 8);
    const PriorSnapshot prior{testutil::random_vector(rng, d), testutil::random_pd(rng, d)};
    const Vector x = testutil::random_vector(rng, d);
    const int y = uniform01(rng) < 0.5 ? 0 : 1;
    const GaussianBelief post = laplace_update(prior, x, y);
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(prior.cov - post.cov),
                                             Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12 * prior.cov.norm());
  }
}

TEST_CASE("prior precision equals lambda_t times previous posterior precision") {
  // Hessian shrinkage: Q_t = q Sigma => ((1+q) Sigma)^-1 = lambda (Sigma)^-1
  Rng rng = make_rng(31);
  for (double q : {0.01, 0.5, 3.0}) {
    const Matrix sigma = testutil::random_pd(rng, 6);
    const Matrix lhs = ((1.0 + q) * sigma).inverse();
    const Matrix rhs = (1.0 / (1.0 + q)) * sigma.inverse();
    CHECK(testutil::rel_frobenius(lhs, rhs) <= 1e-10);
  }
}

TEST_CASE("step with a static schedule is plain online Laplace logistic regression") {
  Rng rng = make_rng(8);
  const int d = 4;
  ArmModel model{GaussianBelief(Vector::Zero(d), Matrix::Identity(d, d)), LogisticLink{},
                 DriftSchedule::statical(), 0};

  // independent recursion written out longhand
  Vector u = Vector::Zero(d);
  Matrix sigma = Matrix::Identity(d, d);
  const LogisticLink g;

  for (int t = 0; t < 50; ++t) {
    const Vector x = testutil::random_vector(rng, d);
    const int y = uniform01(rng) < 0.5 ? 0 : 1;
    model = step(model, x, y);

    const double theta = g(x.dot(u));
    const Vector sx = sigma * x;
    u += (static_cast<double>(y) - theta) * sx;
    const double w = theta * (1.0 - theta);
    sigma -= (w / (1.0 + w * x.dot(sx))) * (sx * sx.transpose());
    sigma = symmetrized(sigma);

    CHECK((model.belief.mean - u).norm() <= 1e-12 * std::max(1.0, u.norm()));
    CHECK(testutil::rel_frobenius(model.belief.cov, sigma) <= 1e-12);
  }
  CHECK(model.step_index == 50);
}

TEST_CASE("step propagation and bookkeeping") {
  const int d = 3;
  const ArmModel model{GaussianBelief(Vector::Ones(d), 0.5 * Matrix::Identity(d, d)),
                       LogisticLink{}, DriftSchedule::constant(1.0), 0};

  SECTION("q=1 doubles covariance before conditioning; x=0 shows it") {
    const ArmModel next = step(model, Vector::Zero(d), 1);
    CHECK(next.belief.cov.isApprox(2.0 * model.belief.cov, 1e-14));
    CHECK(next.belief.mean == model.belief.mean);
    CHECK(next.step_index == 1);
    // purity: the input model is untouched
    CHECK(model.step_index == 0);
    CHECK(model.belief.cov(0, 0) == 0.5);
  }

  SECTION("repeated zero-feature steps accumulate prod(1+q_t)") {
    ArmModel m{GaussianBelief(Vector::Ones(d), Matrix::Identity(d, d)), LogisticLink{},
               DriftSchedule::power(0.3, 0.7), 0};
    double factor = 1.0;
    for (std::int64_t t = 1; t <= 20; ++t) {
      m = step(m, Vector::Zero(d), 0);
      factor *= 1.0 + DriftSchedule::power(0.3, 0.7).q_at(t);
    }
    CHECK(m.belief.mean == Vector::Ones(d));
    CHECK(m.belief.cov.isApprox(factor * Matrix::Identity(d, d), 1e-12));
  }
}

TEST_CASE("log_posterior_unnormalized") {
  Rng rng = make_rng(97);
  const int d = 5;
  const PriorSnapshot prior{testutil::random_vector(rng, d), testutil::random_pd(rng, d)};
  const Vector x = testutil::random_vector(rng, d);

  SECTION("prior quadratic vanishes at the prior mean") {
    for (int y : {0, 1}) {
      const double value = log_posterior_unnormalized(prior, x, y, prior.mean);
      CHECK(value == Catch::Approx(bernoulli_loglik(x.dot(prior.mean), y)).margin(1e-12));
    }
  }

  SECTION("y=1 likelihood term approaches zero from below as theta -> 1") {
    PriorSnapshot wide{Vector::Zero(1), Matrix::Identity(1, 1) * 1e6};
    Vector x1(1);
    x1 << 1.0;
    Vector beta(1);
    beta << 30.0;
    const double value = log_posterior_unnormalized(wide, x1, 1, beta);
    const double loglik = value + 0.5 * beta[0] * beta[0] / 1e6;
    CHECK(loglik < 0.0);
    CHECK(loglik > -1e-12);
  }

  SECTION("gradient matches central finite differences") {
    const double h = 1e-6;
    for (int trial = 0; trial < 100; ++trial) {
      const Vector beta = testutil::random_vector(rng, d);
      const int y = uniform01(rng) < 0.5 ? 0 : 1;
      const Vector grad = log_posterior_gradient(prior, x, y, beta);
      Vector fd(d);
      for (int i = 0; i < d; ++i) {
        Vector hi = beta, lo = beta;
        hi[i] += h;
        lo[i] -= h;
        fd[i] = (log_posterior_unnormalized(prior, x, y, hi) -
                 log_posterior_unnormalized(prior, x, y, lo)) /
                (2.0 * h);
      }
      CHECK((grad - fd).norm() <= 1e-4 * std::max(1.0, grad.norm()));
    }
  }

  SECTION("gradient at the updated mean obeys the single-step bound") {
    // grad L(u_t) = (theta_hat - g(x.u_t)) x, so its norm is at most
    // 0.25 |y - theta_hat| s^2 ||x||
    const LogisticLink g;
    for (int trial = 0; trial < 50; ++trial) {
      const PriorSnapshot p{testutil::random_vector(rng, d), testutil::random_pd(rng, d)};
      const Vector xx = testutil::random_vector(rng, d);
      const int y = uniform01(rng) < 0.5 ? 0 : 1;
      const GaussianBelief post = laplace_update(p, xx, y);
      const double theta = clamp_theta(g(xx.dot(p.mean)));
      const double s2 = activation_variance(xx, p.cov);
      const double bound =
          0.25 * std::abs(static_cast<double>(y) - theta) * s2 * xx.norm() + 1e-12;
      CHECK(log_posterior_gradient(p, xx, y, post.mean).norm() <= bound);
    }
  }
}

TEST_CASE("optional Newton iterations shrink the fixed-point residual") {
  // a large update: the prior mean sits far into the flat tail
  PriorSnapshot prior{Vector::Zero(1), Matrix::Identity(1, 1) * 2.0};
  prior.mean[0] = -2.0;
  Vector x(1);
  x << 1.0;
  const LogisticLink g;

  auto residual = [&](int iters) {
    const GaussianBelief post = laplace_update(prior, x, 1, g, iters);
    const Vector rhs = prior.mean + prior.cov * ((1.0 - g(x.dot(post.mean))) * x);
    return (post.mean - rhs).norm();
  };
  CHECK(residual(8) < residual(1));
  CHECK_THROWS_AS(laplace_update(prior, x, 1, g, 0), std::invalid_argument);
}

TEST_CASE("static-mode consistency: mean approaches the true parameter") {
  const int d = 5;
  const LogisticLink g;
  double sum_d100 = 0.0, sum_d5000 = 0.0;
  for (int seed = 0; seed < 12; ++seed) {
    Rng rng = make_rng(split_seed(314159, static_cast<std::uint64_t>(seed)));
    Vector beta_star = testutil::random_vector(rng, d);
    beta_star *= 1.5 / beta_star.norm();
    ArmModel model{GaussianBelief(Vector::Zero(d), Matrix::Identity(d, d)), g,
                   DriftSchedule::statical(), 0};
    double d100 = 0.0;
    for (int t = 1; t <= 5000; ++t) {
      const Vector x = testutil::random_vector(rng, d);
      const int y = uniform01(rng) < g(x.dot(beta_star)) ? 1 : 0;
      model = step(model, x, y);
      if (t == 100) d100 = (model.belief.mean - beta_star).norm();
    }
    sum_d100 += d100;
    sum_d5000 += (model.belief.mean - beta_star).norm();
  }
  CHECK(sum_d5000 / 12.0 < sum_d100 / 12.0);
}

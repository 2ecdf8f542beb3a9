#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "ot_oracle.hpp"
#include "semeq/ot.hpp"
#include "semeq/rng.hpp"

using namespace semeq;
using namespace semeq::ot;
using ot_oracle::brute_force_ot_cost;

namespace {

CMat random_cmat(int rows, int cols, RngStream& rng, double scale = 1.0) {
  CMat out(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      out(r, c) = scale * Complex(rng.next_gaussian(), rng.next_gaussian());
  return out;
}

RVec random_simplex(int size, RngStream& rng) {
  RVec w(size);
  for (int i = 0; i < size; ++i) w[i] = 0.05 + rng.next_unit();
  return w / w.sum();
}

}  // namespace

TEST_CASE("cost_matrix basics") {
  SampleSet x = SampleSet::uniform((CMat(1, 1) << Complex(1, 2)).finished());
  CHECK(cost_matrix(x, x)(0, 0) == 0.0);

  SampleSet a = SampleSet::uniform((CMat(1, 1) << Complex(1, 0)).finished());
  SampleSet b = SampleSet::uniform((CMat(1, 1) << Complex(0, 1)).finished());
  CHECK(cost_matrix(a, b)(0, 0) == doctest::Approx(2.0));
}

TEST_CASE("cost_matrix matches a naive double loop") {
  RngStream rng(11);
  SampleSet x = SampleSet::uniform(random_cmat(5, 3, rng));
  SampleSet y = SampleSet::uniform(random_cmat(7, 3, rng));
  const RMat d = cost_matrix(x, y);
  for (int k = 0; k < 5; ++k)
    for (int l = 0; l < 7; ++l) {
      double expect = 0.0;
      for (int c = 0; c < 3; ++c) {
        const Complex diff = x.points(k, c) - y.points(l, c);
        expect += diff.real() * diff.real() + diff.imag() * diff.imag();
      }
      CHECK(d(k, l) == doctest::Approx(expect).epsilon(1e-14));
    }
  CHECK(cost_matrix(x, y).minCoeff() >= 0.0);
}

TEST_CASE("cost_matrix rejects dimension mismatch") {
  RngStream rng(3);
  SampleSet x = SampleSet::uniform(random_cmat(2, 2, rng));
  SampleSet y = SampleSet::uniform(random_cmat(2, 3, rng));
  CHECK_THROWS_AS(cost_matrix(x, y), std::invalid_argument);
}

TEST_CASE("solve_ot_exact on the 2x2 anti-diagonal instance") {
  RMat d(2, 2);
  d << 0, 1, 1, 0;
  const RVec half = RVec::Constant(2, 0.5);
  const TransportPlan plan = solve_ot_exact(d, half, half);
  CHECK(plan.gamma(0, 0) == doctest::Approx(0.5));
  CHECK(plan.gamma(1, 1) == doctest::Approx(0.5));
  CHECK(plan.gamma(0, 1) == doctest::Approx(0.0));
  CHECK(plan.cost(d) == doctest::Approx(0.0));
}

TEST_CASE("solve_ot_exact with all-zero costs returns a feasible zero-cost plan") {
  const RMat d = RMat::Zero(3, 2);
  RVec mu(3), nu(2);
  mu << 0.2, 0.5, 0.3;
  nu << 0.6, 0.4;
  const TransportPlan plan = solve_ot_exact(d, mu, nu);
  CHECK(plan.cost(d) == 0.0);
  CHECK(plan.marginal_error() <= 1e-9);
}

TEST_CASE("solve_ot_exact rejects mass mismatch") {
  const RMat d = RMat::Zero(2, 2);
  RVec mu(2), nu(2);
  mu << 0.5, 0.5;
  nu << 0.5, 0.6;
  CHECK_THROWS_AS(solve_ot_exact(d, mu, nu), std::invalid_argument);
}

TEST_CASE("solve_ot_exact matches vertex enumeration on random instances") {
  RngStream rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const int m = 2 + rng.next_int(3);
    const int n = 2 + rng.next_int(3);
    RMat d(m, n);
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < n; ++c) d(r, c) = rng.next_unit() * 4.0 - 1.0;
    const RVec mu = random_simplex(m, rng);
    const RVec nu = random_simplex(n, rng);

    const TransportPlan plan = solve_ot_exact(d, mu, nu);
    CHECK(plan.marginal_error() <= 1e-9);
    CHECK((plan.gamma.array() >= 0.0).all());
    const double oracle = brute_force_ot_cost(d, mu, nu);
    CHECK(std::abs(plan.cost(d) - oracle) <= 1e-10);
  }
}

TEST_CASE("warm re-solves stay optimal when costs change") {
  RngStream rng(77);
  const int m = 6, n = 9;
  const RVec mu = random_simplex(m, rng);
  const RVec nu = random_simplex(n, rng);
  TransportationSimplex lp(mu, nu);
  for (int round = 0; round < 5; ++round) {
    RMat d(m, n);
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < n; ++c) d(r, c) = rng.next_gaussian();
    const TransportPlan warm = lp.solve(d);
    const TransportPlan cold = solve_ot_exact(d, mu, nu);
    CHECK(warm.cost(d) == doctest::Approx(cold.cost(d)).epsilon(1e-12));
    CHECK(warm.marginal_error() <= 1e-9);
  }
}

TEST_CASE("solve_ot_entropic handles the singleton and small instances") {
  const RMat d0 = RMat::Zero(1, 1);
  const RVec one = RVec::Ones(1);
  CHECK(solve_ot_entropic(d0, one, one, 0.1).gamma(0, 0) == doctest::Approx(1.0));

  RMat d(2, 2);
  d << 0, 1, 1, 0;
  const RVec half = RVec::Constant(2, 0.5);
  const TransportPlan plan = solve_ot_entropic(d, half, half, 1e-3);
  CHECK(plan.cost(d) <= 0.01);  // exact optimum is 0
  CHECK(plan.marginal_error() <= 1e-6);
}

TEST_CASE("solve_ot_entropic marginal rounding contract on random instances") {
  RngStream rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const int m = 3 + rng.next_int(5);
    const int n = 3 + rng.next_int(5);
    RMat d(m, n);
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < n; ++c) d(r, c) = rng.next_unit();
    const RVec mu = random_simplex(m, rng);
    const RVec nu = random_simplex(n, rng);
    const TransportPlan plan = solve_ot_entropic(d, mu, nu, 0.05);
    CHECK(plan.marginal_error() <= 1e-6);
    CHECK((plan.gamma.array() >= 0.0).all());
  }
}

TEST_CASE("solve_ot_entropic fails loudly when it cannot converge") {
  // asymmetric instance with a tiny epsilon needs many iterations
  RngStream rng(91);
  RMat d(5, 4);
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 4; ++c) d(r, c) = 4.0 * rng.next_unit();
  const RVec mu = random_simplex(5, rng);
  const RVec nu = random_simplex(4, rng);
  SinkhornOptions opt;
  opt.max_iters = 3;
  opt.tol = 1e-12;
  CHECK_THROWS_AS(solve_ot_entropic(d, mu, nu, 1e-5, opt), std::runtime_error);
}

TEST_CASE("ball_contract endpoints and midpoint") {
  CMat pts(2, 1);
  pts << Complex(1, 0), Complex(-1, 0);
  const SampleSet y = SampleSet::uniform(pts);

  const SampleSet full = ball_contract(y, 1.0);
  CHECK((full.points - y.points).cwiseAbs().maxCoeff() == doctest::Approx(0.0));

  const SampleSet collapsed = ball_contract(y, 0.0);
  CHECK(std::abs(collapsed.points(0, 0)) == doctest::Approx(0.0));
  CHECK(std::abs(collapsed.points(1, 0)) == doctest::Approx(0.0));

  const SampleSet half = ball_contract(y, 0.5);
  CHECK(half.points(0, 0).real() == doctest::Approx(0.5));
  CHECK(half.points(1, 0).real() == doctest::Approx(-0.5));

  CHECK_THROWS_AS(ball_contract(y, 1.5), std::invalid_argument);
}

TEST_CASE("ball_contract preserves the weighted mean and stays in the hull") {
  RngStream rng(9);
  CMat pts = random_cmat(8, 2, rng);
  SampleSet y;
  y.points = pts;
  y.weights = random_simplex(8, rng);

  CVec mean = CVec::Zero(2);
  for (int l = 0; l < 8; ++l) mean += y.weights[l] * y.points.row(l).transpose();

  for (double r : {0.0, 0.3, 0.7, 1.0}) {
    const SampleSet z = ball_contract(y, r);
    CVec zmean = CVec::Zero(2);
    for (int l = 0; l < 8; ++l) zmean += z.weights[l] * z.points.row(l).transpose();
    CHECK((zmean - mean).norm() <= 1e-12);

    // convex-combination certificate: B_r(y_k) = r y_k + (1-r) sum_l w_l y_l
    for (int k = 0; k < 8; ++k) {
      RVec coeff = (1.0 - r) * y.weights;
      coeff[k] += r;
      CHECK(coeff.minCoeff() >= 0.0);
      CHECK(coeff.sum() == doctest::Approx(1.0));
      CVec recon = CVec::Zero(2);
      for (int l = 0; l < 8; ++l) recon += coeff[l] * y.points.row(l).transpose();
      CHECK((recon - z.points.row(k).transpose()).norm() <= 1e-12);
    }
  }
}

TEST_CASE("barycentric_map basics") {
  CMat ypts(1, 1);
  ypts << Complex(2, -1);
  SampleSet y = SampleSet::uniform(ypts);
  TransportPlan plan;
  plan.gamma = RMat::Ones(1, 1);
  plan.row_marginal = RVec::Ones(1);
  plan.col_marginal = RVec::Ones(1);
  const CMat mapped = barycentric_map(plan, y);
  CHECK(std::abs(mapped(0, 0) - Complex(2, -1)) <= 1e-15);
}

TEST_CASE("independence coupling maps every row to the target mean") {
  RngStream rng(13);
  const int nx = 4, ny = 6;
  SampleSet y = SampleSet::uniform(random_cmat(ny, 2, rng));
  TransportPlan plan;
  plan.gamma = RMat::Constant(nx, ny, 1.0 / (nx * ny));
  plan.row_marginal = RVec::Constant(nx, 1.0 / nx);
  plan.col_marginal = RVec::Constant(ny, 1.0 / ny);
  const CMat mapped = barycentric_map(plan, y);
  const CVec mean = y.points.colwise().mean().transpose();
  for (int k = 0; k < nx; ++k)
    CHECK((mapped.row(k).transpose() - mean).norm() <= 1e-12);
}

TEST_CASE("barycentric two-formula cross-check on uniform weights") {
  RngStream rng(21);
  const int nx = 5, ny = 7;
  SampleSet x = SampleSet::uniform(random_cmat(nx, 2, rng));
  SampleSet y = SampleSet::uniform(random_cmat(ny, 2, rng));
  const RMat d = cost_matrix(x, y);
  const TransportPlan plan = solve_ot_exact(d, x.weights, y.weights);

  const CMat via_division = barycentric_map(plan, y);
  CMat via_scaling(nx, 2);
  via_scaling.real() = nx * (plan.gamma * y.points.real());
  via_scaling.imag() = nx * (plan.gamma * y.points.imag());
  CHECK((via_division - via_scaling).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("barycentric_map rejects zero row mass") {
  CMat ypts(2, 1);
  ypts << Complex(1, 0), Complex(0, 1);
  SampleSet y = SampleSet::uniform(ypts);
  TransportPlan plan;
  plan.gamma = RMat::Zero(2, 2);
  plan.gamma(0, 0) = 1.0;  // row 1 carries no mass
  plan.row_marginal = RVec::Constant(2, 0.5);
  plan.col_marginal = RVec::Constant(2, 0.5);
  CHECK_THROWS_AS(barycentric_map(plan, y), std::invalid_argument);
}

TEST_CASE("solve_p1 on matched distributions returns the identity") {
  RngStream rng(31);
  const CMat pts = random_cmat(40, 2, rng);
  const SampleSet x = SampleSet::uniform(pts);
  const SampleSet y = SampleSet::uniform(pts);

  P1Config cfg = default_p1_config(2, 40, cost_matrix(x, y).maxCoeff());
  cfg.alpha = 100.0;  // pin gamma to the plain OT plan
  const P1Result res = solve_p1(x, y, cfg);
  CHECK((res.map.A - CMat::Identity(2, 2)).norm() < 1e-3);
  CHECK(res.map.b.norm() < 1e-3);
}

TEST_CASE("solve_p1 recovers a pure translation") {
  RngStream rng(32);
  const CMat pts = random_cmat(60, 2, rng, 0.5);
  CVec v(2);
  v << Complex(0.3, 0.2), Complex(-0.1, 0.4);
  CMat shifted = pts;
  shifted.rowwise() += v.transpose();

  const SampleSet x = SampleSet::uniform(pts);
  const SampleSet y = SampleSet::uniform(shifted);
  const P1Config cfg = default_p1_config(2, 60, cost_matrix(x, y).maxCoeff());
  const P1Result res = solve_p1(x, y, cfg);

  CHECK((res.map.A - CMat::Identity(2, 2)).norm() <= 1e-2);
  CHECK((res.map.b - v).norm() <= 1e-2);
  CHECK(res.plan.marginal_error() <= 1e-9);
}

TEST_CASE("solve_p1 objective traces are monotone non-increasing") {
  RngStream rng(33);
  for (int trial = 0; trial < 4; ++trial) {
    const SampleSet x = SampleSet::uniform(random_cmat(25, 2, rng));
    const SampleSet y = SampleSet::uniform(random_cmat(35, 2, rng) * 1.5);
    P1Config cfg = default_p1_config(2, 25, cost_matrix(x, y).maxCoeff());
    cfg.radius = trial % 2 == 0 ? 1.0 : 0.4;
    const P1Result res = solve_p1(x, y, cfg);
    REQUIRE(res.trace.objective.size() >= 2);
    for (size_t i = 1; i < res.trace.objective.size(); ++i)
      CHECK(res.trace.objective[i] <= res.trace.objective[i - 1] + 1e-10);
  }
}

TEST_CASE("T-step stationarity: analytic gradient vanishes at the solution") {
  RngStream rng(34);
  const SampleSet x = SampleSet::uniform(random_cmat(30, 2, rng));
  const SampleSet y = SampleSet::uniform(random_cmat(45, 2, rng));
  const P1Config cfg = default_p1_config(2, 30, cost_matrix(x, y).maxCoeff());
  const P1Result res = solve_p1(x, y, cfg);

  // rebuild the barycentric target of the final plan
  const SampleSet yc = ball_contract(y, cfg.radius);
  CMat v(30, 2);
  v.real() = 30.0 * (res.plan.gamma * yc.points.real());
  v.imag() = 30.0 * (res.plan.gamma * yc.points.imag());

  CMat grad_a;
  CVec grad_b;
  t_objective_gradient(x.points, v, res.map, cfg.beta, &grad_a, &grad_b);
  CHECK(std::sqrt(grad_a.squaredNorm() + grad_b.squaredNorm()) <= 1e-8);
}

TEST_CASE("T-objective gradient matches central finite differences") {
  RngStream rng(35);
  const CMat x = random_cmat(12, 2, rng);
  const CMat v = random_cmat(12, 2, rng);
  const double beta = 0.37;
  LinearMap t;
  t.A = random_cmat(2, 2, rng);
  t.b = random_cmat(2, 1, rng).col(0);

  CMat grad_a;
  CVec grad_b;
  t_objective_gradient(x, v, t, beta, &grad_a, &grad_b);

  const double h = 1e-5;
  auto fd_check = [&](double analytic, double num) {
    const double denom = std::max({std::abs(analytic), std::abs(num), 1e-8});
    CHECK(std::abs(analytic - num) / denom < 1e-4);
  };
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      for (int part = 0; part < 2; ++part) {
        LinearMap tp = t, tm = t;
        const Complex delta = part == 0 ? Complex(h, 0) : Complex(0, h);
        tp.A(r, c) += delta;
        tm.A(r, c) -= delta;
        const double num =
            (t_objective(x, v, tp, beta) - t_objective(x, v, tm, beta)) / (2 * h);
        fd_check(part == 0 ? grad_a(r, c).real() : grad_a(r, c).imag(), num);
      }
    }
  for (int d = 0; d < 2; ++d)
    for (int part = 0; part < 2; ++part) {
      LinearMap tp = t, tm = t;
      const Complex delta = part == 0 ? Complex(h, 0) : Complex(0, h);
      tp.b[d] += delta;
      tm.b[d] -= delta;
      const double num =
          (t_objective(x, v, tp, beta) - t_objective(x, v, tm, beta)) / (2 * h);
      fd_check(part == 0 ? grad_b[d].real() : grad_b[d].imag(), num);
    }
}

TEST_CASE("solve_p1 with beta = 0 reports an underdetermined T-step") {
  RngStream rng(36);
  const SampleSet x = SampleSet::uniform(random_cmat(2, 2, rng));  // |X| < n+1
  const SampleSet y = SampleSet::uniform(random_cmat(5, 2, rng));
  P1Config cfg = default_p1_config(2, 2, cost_matrix(x, y).maxCoeff());
  cfg.beta = 0.0;
  CHECK_THROWS_AS(solve_p1(x, y, cfg), std::invalid_argument);
}

TEST_CASE("P1Config validation") {
  P1Config cfg;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);  // alpha unset
  cfg.alpha = 1.0;
  cfg.radius = 1.2;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.radius = 0.5;
  CHECK_NOTHROW(cfg.validate());
}

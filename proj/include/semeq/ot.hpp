#pragma once

#include <memory>
#include <string>
#include <vector>

#include "semeq/types.hpp"

namespace semeq::ot {

// Weighted point cloud in C^n (empirical distribution sum_k w_k delta_{x_k}).
struct SampleSet {
  CMat points;   // N x n
  RVec weights;  // probability vector, uniform 1/N by default

  int size() const { return static_cast<int>(points.rows()); }
  int dim() const { return static_cast<int>(points.cols()); }
  void validate() const;

  static SampleSet uniform(CMat pts);
};

// D[k][l] = |x_k - y_l|_2^2 over the 2n real coordinates.
RMat cost_matrix(const SampleSet& X, const SampleSet& Y);

struct TransportPlan {
  RMat gamma;
  RVec row_marginal;
  RVec col_marginal;

  double cost(const RMat& D) const { return (gamma.array() * D.array()).sum(); }
  // max of the two L1 marginal residuals
  double marginal_error() const;
};

// Exact Kantorovich LP on the discrete transport polytope, solved with the
// transportation simplex (MODI). A solver instance is bound to fixed
// marginals and supports warm re-solves with new cost matrices from the
// previous optimal basis — the Frank-Wolfe subproblems in solve_p1 differ
// only in cost, so re-optimization typically needs a handful of pivots.
class TransportationSimplex {
 public:
  TransportationSimplex(RVec mu, RVec nu);
  ~TransportationSimplex();
  TransportationSimplex(TransportationSimplex&&) noexcept;
  TransportationSimplex& operator=(TransportationSimplex&&) noexcept;

  TransportPlan solve(const RMat& cost);

  int num_pivots() const;  // cumulative, for diagnostics

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

TransportPlan solve_ot_exact(const RMat& D, const RVec& mu, const RVec& nu);

struct SinkhornOptions {
  int max_iters = 20000;
  double tol = 1e-10;  // L1 marginal residual before rounding
};

// Log-domain Sinkhorn followed by marginal rounding (row/col scaling capped
// at 1, then rank-one residual correction), so returned plans satisfy the
// marginals to float accuracy. Throws on non-convergence.
TransportPlan solve_ot_entropic(const RMat& D, const RVec& mu, const RVec& nu,
                                double epsilon, const SinkhornOptions& opt = {});

// B_r(Y) = c + r (Y - c) with c the weighted mean of Y; weights unchanged.
SampleSet ball_contract(const SampleSet& Y, double r);

// Row k = (sum_l gamma_kl y_l) / (sum_l gamma_kl). Equals N_X * gamma * Y for
// uniform source weights. Throws on zero row mass.
CMat barycentric_map(const TransportPlan& plan, const SampleSet& Y);

struct P1Config {
  double alpha = 0.0;  // transport-term weight, > 0
  double beta = 0.0;   // ||A - I||_F^2 weight; 0 allowed but may make the
                       // T-step underdetermined (explicit error)
  double radius = 1.0;
  int max_outer_iters = 50;
  int max_fw_iters = 20;
  double tol = 1e-6;     // relative objective decrease stop
  double fw_tol = 1e-8;  // relative Frank-Wolfe duality-gap stop

  void validate() const;
};

// Reference hyper-parameters: alpha = 0.1 n N_X / max(D), beta = 1e-8 N_X / n.
P1Config default_p1_config(int n, int n_x, double max_cost);

struct P1Trace {
  std::vector<double> objective;
  std::vector<double> fit_term;
  std::vector<double> transport_term;
  std::vector<double> regularizer;

  void write_csv(const std::string& path) const;
};

struct P1Result {
  LinearMap map;
  TransportPlan plan;
  P1Trace trace;
  int outer_iters = 0;
  bool converged = false;   // relative-decrease stop reached
  bool fw_warning = false;  // some gamma-step hit max_fw_iters above gap tol
};

// Alternating minimization for
//   min_{gamma, T}  |T(X) - N_X gamma B_r(Y)|_F^2 + alpha <gamma, D> + beta |A - I|_F^2
// gamma-step: Frank-Wolfe with exact transportation-simplex subproblems and
// closed-form quadratic line search; T-step: closed-form complex ridge
// regression. The objective trace is non-increasing across outer iterations.
P1Result solve_p1(const SampleSet& X, const SampleSet& Y, const P1Config& cfg);

// Analytic gradient of the T objective |X A^T + 1 b^T - V|^2 + beta |A - I|^2
// w.r.t. (Re A, Im A) packed as a complex matrix, and likewise for b.
// Used by the stationarity checks.
void t_objective_gradient(const CMat& X, const CMat& V, const LinearMap& T,
                          double beta, CMat* grad_A, CVec* grad_b);
double t_objective(const CMat& X, const CMat& V, const LinearMap& T, double beta);

}  // namespace semeq::ot

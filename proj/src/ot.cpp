#include "semeq/ot.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "semeq/rng.hpp"

namespace semeq::ot {

namespace {

void check_marginal(const RVec& w, const char* name) {
  if (w.size() < 1) throw std::invalid_argument(std::string(name) + ": empty marginal");
  if (!all_finite(w)) throw std::invalid_argument(std::string(name) + ": non-finite weight");
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (w[i] < 0.0) throw std::invalid_argument(std::string(name) + ": negative weight");
  if (std::abs(w.sum() - 1.0) > 1e-9)
    throw std::invalid_argument(std::string(name) + ": weights must sum to 1 (mass mismatch > 1e-9)");
}

}  // namespace

void SampleSet::validate() const {
  if (points.rows() < 1) throw std::invalid_argument("SampleSet: needs N >= 1 points");
  if (!all_finite(points)) throw std::invalid_argument("SampleSet: non-finite point");
  if (weights.size() != points.rows())
    throw std::invalid_argument("SampleSet: weight/point count mismatch");
  check_marginal(weights, "SampleSet");
}

SampleSet SampleSet::uniform(CMat pts) {
  SampleSet s;
  s.weights = RVec::Constant(pts.rows(), 1.0 / static_cast<double>(pts.rows()));
  s.points = std::move(pts);
  return s;
}

RMat cost_matrix(const SampleSet& X, const SampleSet& Y) {
  if (X.dim() != Y.dim())
    throw std::invalid_argument("cost_matrix: sample sets of different dimension");
  RMat D(X.size(), Y.size());
  for (int k = 0; k < X.size(); ++k)
    for (int l = 0; l < Y.size(); ++l)
      D(k, l) = (X.points.row(k) - Y.points.row(l)).squaredNorm();
  return D;
}

double TransportPlan::marginal_error() const {
  const RVec r = gamma.rowwise().sum() - row_marginal;
  const RVec c = gamma.colwise().sum().transpose() - col_marginal;
  return std::max(r.cwiseAbs().sum(), c.cwiseAbs().sum());
}

// ---------------------------------------------------------------------------
// Transportation simplex
// ---------------------------------------------------------------------------

// Bipartite network simplex over an artificial root: nodes are the m rows,
// n columns and a root; every non-root node stores the basic arc to its
// parent. Real arcs are cells (row -> col); artificial arcs (row -> root,
// root -> col) carry big-M costs and start as the spanning star, which is
// strongly feasible. The leaving arc follows Cunningham's rule (last
// blocking arc traversing the cycle from the apex along the entering arc's
// orientation), so the tree stays strongly feasible and degenerate pivot
// chains cannot stall. Pricing is a rolling best-in-window scan over the
// cells; potentials and depths are updated only on the re-hung subtree.
struct TransportationSimplex::Impl {
  int m = 0, n = 0, nodes = 0, root = 0;
  RVec mu, nu;

  // per-node basic-arc data (the edge to parent[v]); root entries unused
  std::vector<int> parent;
  std::vector<int> arc_row, arc_col;  // cell identity; -1 marks artificial
  std::vector<double> flow;
  std::vector<uint8_t> up;  // 1: arc direction v -> parent; 0: parent -> v
  std::vector<int> depth;
  std::vector<double> pot;  // tree potentials, sum-dual: p[a] + p[b] = cost(a,b)

  // children as doubly-linked sibling lists
  std::vector<int> head, next_sib, prev_sib;

  // scratch
  std::vector<int> dfs_stack;
  std::vector<int> cycle_r, cycle_c;

  long pivots = 0;
  long scan_pos = 0;  // rolling pricing cursor over column-major cell ids

  Impl(RVec mu_in, RVec nu_in) : mu(std::move(mu_in)), nu(std::move(nu_in)) {
    m = static_cast<int>(mu.size());
    n = static_cast<int>(nu.size());
    nodes = m + n + 1;
    root = m + n;
    parent.assign(nodes, -1);
    arc_row.assign(nodes, -1);
    arc_col.assign(nodes, -1);
    flow.assign(nodes, 0.0);
    up.assign(nodes, 0);
    depth.assign(nodes, 0);
    pot.assign(nodes, 0.0);
    head.assign(nodes, -1);
    next_sib.assign(nodes, -1);
    prev_sib.assign(nodes, -1);
    dfs_stack.reserve(nodes);

    // artificial star: rows ship their mass to the root, root feeds columns
    for (int v = 0; v < m + n; ++v) {
      parent[v] = root;
      if (v < m) {
        arc_row[v] = v;
        arc_col[v] = -1;
        flow[v] = mu[v];
        up[v] = 1;
      } else {
        arc_row[v] = -1;
        arc_col[v] = v - m;
        flow[v] = nu[v - m];
        up[v] = 0;
      }
      link_child(root, v);
      depth[v] = 1;
    }
  }

  void link_child(int p, int v) {
    next_sib[v] = head[p];
    prev_sib[v] = -1;
    if (head[p] >= 0) prev_sib[head[p]] = v;
    head[p] = v;
  }

  void unlink_child(int p, int v) {
    if (prev_sib[v] >= 0) next_sib[prev_sib[v]] = next_sib[v];
    else head[p] = next_sib[v];
    if (next_sib[v] >= 0) prev_sib[next_sib[v]] = prev_sib[v];
  }

  double arc_cost(int v, const RMat& C, double big_m) const {
    return (arc_row[v] < 0 || arc_col[v] < 0) ? big_m : C(arc_row[v], arc_col[v]);
  }

  // depth + potentials below `start` (inclusive); start's parent must be set
  void refresh_subtree(int start, const RMat& C, double big_m) {
    const int p = parent[start];
    depth[start] = depth[p] + 1;
    pot[start] = arc_cost(start, C, big_m) - pot[p];
    dfs_stack.clear();
    dfs_stack.push_back(start);
    while (!dfs_stack.empty()) {
      const int v = dfs_stack.back();
      dfs_stack.pop_back();
      for (int w = head[v]; w >= 0; w = next_sib[w]) {
        depth[w] = depth[v] + 1;
        pot[w] = arc_cost(w, C, big_m) - pot[v];
        dfs_stack.push_back(w);
      }
    }
  }

  void refresh_all(const RMat& C, double big_m) {
    depth[root] = 0;
    pot[root] = 0.0;
    for (int w = head[root]; w >= 0; w = next_sib[w]) refresh_subtree(w, C, big_m);
  }

  // Rolling best-in-window pricing; a full wrap with nothing negative
  // certifies optimality.
  bool find_entering(const RMat& C, double tol, int* er, int* ec) {
    const long cells = static_cast<long>(m) * n;
    const long window = std::max<long>(512, static_cast<long>(std::sqrt(
                                                static_cast<double>(cells))));
    long scanned = 0;
    double best = -tol;
    int br = -1, bc = -1;
    long pos = scan_pos;
    while (scanned < cells) {
      const long chunk = std::min({window, cells - scanned, cells - pos});
      const double* base = C.data() + pos;
      for (long k = 0; k < chunk; ++k) {
        const long cell = pos + k;
        const int r = static_cast<int>(cell % m);
        const int c = static_cast<int>(cell / m);
        const double red = base[k] - pot[r] - pot[m + c];
        if (red < best) {
          best = red;
          br = r;
          bc = c;
        }
      }
      scanned += chunk;
      pos += chunk;
      if (pos >= cells) pos = 0;
      if (br >= 0) {
        scan_pos = pos;
        *er = br;
        *ec = bc;
        return true;
      }
    }
    return false;
  }

  void pivot(int er, int ec, const RMat& C, double big_m) {
    const int rnode = er;
    const int cnode = m + ec;

    // collect both cycle legs up to the apex
    cycle_r.clear();
    cycle_c.clear();
    int a = rnode, b = cnode;
    while (depth[a] > depth[b]) {
      cycle_r.push_back(a);
      a = parent[a];
    }
    while (depth[b] > depth[a]) {
      cycle_c.push_back(b);
      b = parent[b];
    }
    while (a != b) {
      cycle_r.push_back(a);
      cycle_c.push_back(b);
      a = parent[a];
      b = parent[b];
    }

    // Ratio test walking the cycle from the apex along the entering arc's
    // direction (apex -> rnode -> cnode -> apex); last blocking arc wins.
    // r-leg arcs are traversed parent -> child and lose flow when up == 1;
    // c-leg arcs are traversed child -> parent and lose flow when up == 0.
    double theta = std::numeric_limits<double>::infinity();
    int leaving = -1;
    bool leaving_on_r = false;
    for (int idx = static_cast<int>(cycle_r.size()) - 1; idx >= 0; --idx) {
      const int v = cycle_r[idx];
      if (up[v] == 1 && flow[v] <= theta) {
        theta = flow[v];
        leaving = v;
        leaving_on_r = true;
      }
    }
    for (const int v : cycle_c) {
      if (up[v] == 0 && flow[v] <= theta) {
        theta = flow[v];
        leaving = v;
        leaving_on_r = false;
      }
    }
    if (leaving < 0)
      throw std::runtime_error("TransportationSimplex: unbounded pivot cycle");

    // apply the flow change around the cycle
    for (const int v : cycle_r) flow[v] += up[v] ? -theta : theta;
    for (const int v : cycle_c) flow[v] += up[v] ? theta : -theta;

    // re-hang the subtree cut off by the leaving arc: reverse parent
    // pointers from the entering endpoint up to the leaving node, then let
    // the entering arc attach the subtree
    const int enter_child = leaving_on_r ? rnode : cnode;
    const int enter_parent = leaving_on_r ? cnode : rnode;

    int prev = enter_parent;
    int cur = enter_child;
    int carry_row = er, carry_col = ec;
    double carry_flow = theta;
    uint8_t carry_up = leaving_on_r ? 1 : 0;  // entering arc points row -> col
    while (true) {
      const int next = parent[cur];
      const int save_row = arc_row[cur];
      const int save_col = arc_col[cur];
      const double save_flow = flow[cur];
      const uint8_t save_up = up[cur];

      unlink_child(next, cur);
      parent[cur] = prev;
      link_child(prev, cur);
      arc_row[cur] = carry_row;
      arc_col[cur] = carry_col;
      flow[cur] = carry_flow;
      up[cur] = carry_up;

      if (cur == leaving) break;
      carry_row = save_row;
      carry_col = save_col;
      carry_flow = save_flow;
      // reversing the edge flips which endpoint it leaves from
      carry_up = static_cast<uint8_t>(save_up ? 0 : 1);
      prev = cur;
      cur = next;
    }
    refresh_subtree(enter_child, C, big_m);
    ++pivots;
  }

  // Exact tree flows from the true marginals: the arc between v and its
  // parent carries the net supply of subtree(v), signed by its direction.
  // Resets the float drift incremental pivots accumulate.
  void recompute_flows() {
    std::vector<int> order;
    order.reserve(nodes);
    order.push_back(root);
    for (size_t i = 0; i < order.size(); ++i)
      for (int w = head[order[i]]; w >= 0; w = next_sib[w]) order.push_back(w);

    std::vector<double> sub(nodes, 0.0);
    for (int i = 0; i < m; ++i) sub[i] = mu[i];
    for (int j = 0; j < n; ++j) sub[m + j] = -nu[j];
    for (size_t idx = order.size(); idx-- > 1;) {
      const int v = order[idx];
      const double s = sub[v];
      flow[v] = std::max(up[v] ? s : -s, 0.0);
      sub[parent[v]] += s;
    }
  }

  RMat extract_flows() const {
    RMat gamma = RMat::Zero(m, n);
    for (int v = 0; v < nodes; ++v) {
      if (v == root) continue;
      if (arc_row[v] >= 0 && arc_col[v] >= 0)
        gamma(arc_row[v], arc_col[v]) = std::max(flow[v], 0.0);
    }
    return gamma;
  }
};

TransportationSimplex::TransportationSimplex(RVec mu, RVec nu) {
  check_marginal(mu, "solve_ot: mu");
  check_marginal(nu, "solve_ot: nu");
  // Make the masses match exactly so tree flows close without residue.
  mu /= mu.sum();
  nu /= nu.sum();
  impl_ = std::make_unique<Impl>(std::move(mu), std::move(nu));
}

TransportationSimplex::~TransportationSimplex() = default;
TransportationSimplex::TransportationSimplex(TransportationSimplex&&) noexcept = default;
TransportationSimplex& TransportationSimplex::operator=(TransportationSimplex&&) noexcept =
    default;

TransportPlan TransportationSimplex::solve(const RMat& cost) {
  Impl& s = *impl_;
  if (cost.rows() != s.m || cost.cols() != s.n)
    throw std::invalid_argument("TransportationSimplex: cost shape mismatch");
  if (!all_finite(cost))
    throw std::invalid_argument("TransportationSimplex: non-finite cost");

  const double cost_scale = 1.0 + cost.cwiseAbs().maxCoeff();
  const double big_m = static_cast<double>(s.m + s.n + 1) * cost_scale;
  const double tol = 1e-11 * cost_scale;
  const long hard_cap = 2000L * (s.m + s.n) + 2000000L;

  s.refresh_all(cost, big_m);
  long iters = 0;
  while (true) {
    int er = 0, ec = 0;
    if (!s.find_entering(cost, tol, &er, &ec)) break;
    s.pivot(er, ec, cost, big_m);
    if (++iters > hard_cap)
      throw std::runtime_error("TransportationSimplex: pivot limit exceeded");
  }
  s.recompute_flows();

  TransportPlan plan;
  plan.gamma = s.extract_flows();
  plan.row_marginal = s.mu;
  plan.col_marginal = s.nu;
  return plan;
}

int TransportationSimplex::num_pivots() const { return static_cast<int>(impl_->pivots); }

TransportPlan solve_ot_exact(const RMat& D, const RVec& mu, const RVec& nu) {
  if (D.rows() != mu.size() || D.cols() != nu.size())
    throw std::invalid_argument("solve_ot_exact: marginal/cost shape mismatch");
  TransportationSimplex lp(mu, nu);
  return lp.solve(D);
}

// ---------------------------------------------------------------------------
// Entropic solver
// ---------------------------------------------------------------------------

TransportPlan solve_ot_entropic(const RMat& D, const RVec& mu, const RVec& nu,
                                double epsilon, const SinkhornOptions& opt) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("solve_ot_entropic: epsilon must be > 0");
  check_marginal(mu, "solve_ot_entropic: mu");
  check_marginal(nu, "solve_ot_entropic: nu");
  if (D.rows() != mu.size() || D.cols() != nu.size())
    throw std::invalid_argument("solve_ot_entropic: marginal/cost shape mismatch");

  const int m = static_cast<int>(mu.size());
  const int n = static_cast<int>(nu.size());
  RVec log_mu(m), log_nu(n);
  for (int k = 0; k < m; ++k) log_mu[k] = mu[k] > 0 ? std::log(mu[k]) : -1e300;
  for (int l = 0; l < n; ++l) log_nu[l] = nu[l] > 0 ? std::log(nu[l]) : -1e300;

  RVec f = RVec::Zero(m), g = RVec::Zero(n);
  RMat gamma(m, n);
  auto rebuild_gamma = [&]() {
    for (int k = 0; k < m; ++k)
      for (int l = 0; l < n; ++l)
        gamma(k, l) = std::exp((f[k] + g[l] - D(k, l)) / epsilon);
  };

  auto lse_row = [&](int k) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int l = 0; l < n; ++l) mx = std::max(mx, (g[l] - D(k, l)) / epsilon);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (int l = 0; l < n; ++l) s += std::exp((g[l] - D(k, l)) / epsilon - mx);
    return mx + std::log(s);
  };
  auto lse_col = [&](int l) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < m; ++k) mx = std::max(mx, (f[k] - D(k, l)) / epsilon);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (int k = 0; k < m; ++k) s += std::exp((f[k] - D(k, l)) / epsilon - mx);
    return mx + std::log(s);
  };

  bool converged = false;
  for (int it = 0; it < opt.max_iters; ++it) {
    for (int k = 0; k < m; ++k) f[k] = epsilon * (log_mu[k] - lse_row(k));
    for (int l = 0; l < n; ++l) g[l] = epsilon * (log_nu[l] - lse_col(l));
    if ((it & 7) == 7 || it + 1 == opt.max_iters) {
      rebuild_gamma();
      const double res = (gamma.rowwise().sum() - mu).cwiseAbs().sum() +
                         (gamma.colwise().sum().transpose() - nu).cwiseAbs().sum();
      if (res < opt.tol) {
        converged = true;
        break;
      }
    }
  }
  if (!converged) {
    rebuild_gamma();
    const double res = (gamma.rowwise().sum() - mu).cwiseAbs().sum() +
                       (gamma.colwise().sum().transpose() - nu).cwiseAbs().sum();
    if (res >= 1e-6)
      throw std::runtime_error(
          "solve_ot_entropic: Sinkhorn did not converge after " +
          std::to_string(opt.max_iters) + " iterations (residual " +
          fmt_double(res) + ")");
  }

  // Round onto the transport polytope: cap row/col scalings at 1, then fix
  // the leftover mass with a rank-one correction. Marginals become exact up
  // to float error.
  RVec row = gamma.rowwise().sum();
  for (int k = 0; k < m; ++k) {
    const double scale = row[k] > 0 ? std::min(1.0, mu[k] / row[k]) : 0.0;
    gamma.row(k) *= scale;
  }
  RVec col = gamma.colwise().sum().transpose();
  for (int l = 0; l < n; ++l) {
    const double scale = col[l] > 0 ? std::min(1.0, nu[l] / col[l]) : 0.0;
    gamma.col(l) *= scale;
  }
  const RVec err_r = mu - gamma.rowwise().sum();
  const RVec err_c = nu - gamma.colwise().sum().transpose();
  const double total = err_r.sum();
  if (total > 0) gamma += (err_r * err_c.transpose()) / total;

  TransportPlan plan;
  plan.gamma = std::move(gamma);
  plan.row_marginal = mu;
  plan.col_marginal = nu;
  return plan;
}

// ---------------------------------------------------------------------------
// Ball contraction and barycentric mapping
// ---------------------------------------------------------------------------

SampleSet ball_contract(const SampleSet& Y, double r) {
  Y.validate();
  if (!(r >= 0.0 && r <= 1.0))
    throw std::invalid_argument("ball_contract: radius must be in [0, 1]");
  CVec center = CVec::Zero(Y.dim());
  for (int l = 0; l < Y.size(); ++l)
    center += Y.weights[l] * Y.points.row(l).transpose();
  SampleSet out;
  out.weights = Y.weights;
  out.points.resize(Y.size(), Y.dim());
  for (int l = 0; l < Y.size(); ++l)
    out.points.row(l) =
        center.transpose() + r * (Y.points.row(l) - center.transpose());
  return out;
}

CMat barycentric_map(const TransportPlan& plan, const SampleSet& Y) {
  if (plan.gamma.cols() != Y.size())
    throw std::invalid_argument("barycentric_map: plan/sample size mismatch");
  const RVec row_mass = plan.gamma.rowwise().sum();
  for (Eigen::Index k = 0; k < row_mass.size(); ++k)
    if (row_mass[k] <= 0.0)
      throw std::invalid_argument("barycentric_map: zero row mass in coupling");
  const RMat yre = Y.points.real();
  const RMat yim = Y.points.imag();
  const RMat tre = plan.gamma * yre;
  const RMat tim = plan.gamma * yim;
  CMat out(plan.gamma.rows(), Y.dim());
  out.real() = tre.array().colwise() / row_mass.array();
  out.imag() = tim.array().colwise() / row_mass.array();
  return out;
}

// ---------------------------------------------------------------------------
// P1 solver
// ---------------------------------------------------------------------------

void P1Config::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("P1Config: alpha must be > 0");
  if (!(beta >= 0.0)) throw std::invalid_argument("P1Config: beta must be >= 0");
  if (!(radius >= 0.0 && radius <= 1.0))
    throw std::invalid_argument("P1Config: radius must be in [0, 1]");
  if (max_outer_iters < 1 || max_fw_iters < 1)
    throw std::invalid_argument("P1Config: iteration limits must be >= 1");
  if (!(tol > 0.0)) throw std::invalid_argument("P1Config: tol must be > 0");
}

P1Config default_p1_config(int n, int n_x, double max_cost) {
  P1Config cfg;
  cfg.alpha = max_cost > 0 ? 0.1 * n * n_x / max_cost : 1.0;
  cfg.beta = 1e-8 * n_x / n;
  return cfg;
}

void P1Trace::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("P1Trace: cannot open " + path);
  out << "iteration,objective,fit-term,transport-term,regularizer\n";
  for (size_t i = 0; i < objective.size(); ++i)
    out << i << ',' << fmt_double(objective[i]) << ',' << fmt_double(fit_term[i]) << ','
        << fmt_double(transport_term[i]) << ',' << fmt_double(regularizer[i]) << "\n";
}

double t_objective(const CMat& X, const CMat& V, const LinearMap& T, double beta) {
  const CMat E = T.apply_rows(X) - V;
  const CMat dA = T.A - CMat::Identity(T.A.rows(), T.A.cols());
  return E.squaredNorm() + beta * dA.squaredNorm();
}

void t_objective_gradient(const CMat& X, const CMat& V, const LinearMap& T,
                          double beta, CMat* grad_A, CVec* grad_b) {
  const CMat E = T.apply_rows(X) - V;
  const CMat dA = T.A - CMat::Identity(T.A.rows(), T.A.cols());
  if (grad_A) *grad_A = 2.0 * ((X.adjoint() * E).transpose() + beta * dA);
  if (grad_b) *grad_b = 2.0 * E.colwise().sum().transpose();
}

namespace {

// Ridge T-step: minimize |Xt Theta - V|^2 + beta |P Theta - I|^2 with
// Xt = [X 1], Theta = [A^T; b^T]. Positive definite whenever beta > 0.
LinearMap solve_t_step(const CMat& X, const CMat& V, double beta) {
  const int n = static_cast<int>(X.cols());
  const int nx = static_cast<int>(X.rows());
  CMat xt(nx, n + 1);
  xt.leftCols(n) = X;
  xt.col(n).setOnes();

  CMat h = xt.adjoint() * xt;
  for (int d = 0; d < n; ++d) h(d, d) += beta;
  CMat rhs = xt.adjoint() * V;
  rhs.topRows(n) += beta * CMat::Identity(n, n);

  if (beta == 0.0) {
    const Eigen::JacobiSVD<CMat> svd(h);
    const double cond_floor = svd.singularValues()(0) * 1e-12;
    if (nx < n + 1 || svd.singularValues().minCoeff() <= cond_floor)
      throw std::invalid_argument(
          "solve_p1: T-step underdetermined with beta = 0 (need |X| >= n+1 "
          "independent samples or beta > 0)");
  }

  const Eigen::LDLT<CMat> ldlt(h);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("solve_p1: T-step normal equations failed");
  const CMat theta = ldlt.solve(rhs);

  LinearMap map;
  map.A = theta.topRows(n).transpose();
  map.b = theta.row(n).transpose();
  return map;
}

struct ObjectiveParts {
  double fit = 0.0, transport = 0.0, reg = 0.0;
  double total() const { return fit + transport + reg; }
};

}  // namespace

P1Result solve_p1(const SampleSet& X, const SampleSet& Y, const P1Config& cfg) {
  cfg.validate();
  X.validate();
  Y.validate();
  if (X.dim() != Y.dim()) throw std::invalid_argument("solve_p1: dimension mismatch");

  const int n = X.dim();
  const int nx = X.size();
  const double nxd = static_cast<double>(nx);

  const SampleSet Yc = ball_contract(Y, cfg.radius);
  const RMat zre = Yc.points.real();
  const RMat zim = Yc.points.imag();
  const RMat D = cost_matrix(X, Y);  // uncontracted metric in the transport term

  TransportationSimplex lp(X.weights, Y.weights);
  RMat gamma = lp.solve(D).gamma;

  LinearMap T = LinearMap::identity(n);

  auto barycenter_target = [&](const RMat& g) {
    CMat v(nx, n);
    v.real() = nxd * (g * zre);
    v.imag() = nxd * (g * zim);
    return v;
  };

  auto objective_parts = [&](const RMat& g, const LinearMap& t) {
    ObjectiveParts parts;
    const CMat fit = t.apply_rows(X.points) - barycenter_target(g);
    parts.fit = fit.squaredNorm();
    parts.transport = cfg.alpha * (g.array() * D.array()).sum();
    const CMat da = t.A - CMat::Identity(n, n);
    parts.reg = cfg.beta * da.squaredNorm();
    return parts;
  };

  P1Result result;
  ObjectiveParts parts = objective_parts(gamma, T);
  result.trace.objective.push_back(parts.total());
  result.trace.fit_term.push_back(parts.fit);
  result.trace.transport_term.push_back(parts.transport);
  result.trace.regularizer.push_back(parts.reg);

  double prev_obj = parts.total();
  for (int outer = 0; outer < cfg.max_outer_iters; ++outer) {
    // gamma-step: Frank-Wolfe on the quadratic objective, warm-started from
    // the current plan; subproblems are exact Kantorovich LPs.
    const CMat M = T.apply_rows(X.points);
    const RMat mre = M.real();
    const RMat mim = M.imag();
    bool fw_hit_cap = true;
    for (int it = 0; it < cfg.max_fw_iters; ++it) {
      const RMat rre = mre - nxd * (gamma * zre);
      const RMat rim = mim - nxd * (gamma * zim);
      // grad = -2 N_X Re(R Z^H) + alpha D
      RMat grad = -2.0 * nxd * (rre * zre.transpose() + rim * zim.transpose());
      grad += cfg.alpha * D;

      const RMat s = lp.solve(grad).gamma;
      const RMat delta = s - gamma;
      const double gap = -(delta.array() * grad.array()).sum();
      const double scale = 1.0 + std::abs(prev_obj);
      if (gap <= cfg.fw_tol * scale) {
        fw_hit_cap = false;
        break;
      }
      const RMat wre = nxd * (delta * zre);
      const RMat wim = nxd * (delta * zim);
      const double curv = wre.squaredNorm() + wim.squaredNorm();
      const double step = curv > 0 ? std::clamp(gap / (2.0 * curv), 0.0, 1.0) : 1.0;
      if (step <= 0.0) {
        fw_hit_cap = false;
        break;
      }
      gamma += step * delta;
      // exact line search decrease: gap*t - curv*t^2; once steps gain less
      // than the outer tolerance can see, further inner work is noise
      const double decrease = gap * step - curv * step * step;
      if (decrease <= 0.1 * cfg.tol * scale) {
        fw_hit_cap = false;
        break;
      }
    }
    if (fw_hit_cap) result.fw_warning = true;

    // T-step: closed-form ridge regression onto the barycentric target.
    T = solve_t_step(X.points, barycenter_target(gamma), cfg.beta);

    parts = objective_parts(gamma, T);
    result.trace.objective.push_back(parts.total());
    result.trace.fit_term.push_back(parts.fit);
    result.trace.transport_term.push_back(parts.transport);
    result.trace.regularizer.push_back(parts.reg);
    result.outer_iters = outer + 1;

    const double decrease = prev_obj - parts.total();
    if (decrease <= cfg.tol * std::max(1.0, std::abs(prev_obj))) {
      result.converged = true;
      prev_obj = parts.total();
      break;
    }
    prev_obj = parts.total();
  }

  result.map = std::move(T);
  result.plan.gamma = std::move(gamma);
  result.plan.row_marginal = X.weights;
  result.plan.col_marginal = Y.weights;
  return result;
}

}  // namespace semeq::ot

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "semeq/equalizer.hpp"
#include "semeq/rng.hpp"

using namespace semeq;
using namespace semeq::equalizer;
using semlang::AtomModel;

namespace {

RVec rvec2(double a, double b) {
  RVec v(2);
  v << a, b;
  return v;
}

RMat random_rho(int np, RngStream& rng) {
  return RMat::NullaryExpr(np, np, [&]() { return rng.next_unit(); });
}

RVec random_posterior(int np, RngStream& rng) {
  RVec u(np);
  for (int i = 0; i < np; ++i) u[i] = rng.next_unit() + 1e-3;
  return u / u.sum();
}

semlang::Language deterministic_pair() {
  semlang::Language lang;
  lang.n = 1;
  CVec c0(1), c1(1);
  c0 << Complex(1, 0);
  c1 << Complex(-1, 0);
  lang.atoms.push_back(AtomModel{0, c0, 0.0});
  lang.atoms.push_back(AtomModel{1, c1, 0.0});
  lang.label_names = {"0", "1"};
  lang.validate();
  return lang;
}

codebook::Codebook identity_codebook(int np, int n) {
  codebook::Codebook cb;
  cb.n = n;
  cb.kmap = semlang::LabelMap::modulo(np, np);
  for (int i = 0; i < np; ++i) cb.maps.push_back(LinearMap::identity(n));
  return cb;
}

}  // namespace

TEST_CASE("risk hand values") {
  RMat rho(2, 2);
  rho << 0.9, 0.2, 0.1, 0.8;

  RVec onehot = rvec2(1.0, 0.0);
  CHECK(risk(rho, onehot, 0) == doctest::Approx(0.1));

  const RMat perfect = RMat::Ones(2, 2);
  CHECK(risk(perfect, rvec2(0.4, 0.6), 1) == doctest::Approx(0.0));

  CHECK(risk(rho, rvec2(0.3, 0.7), 1) == doctest::Approx(0.38));
}

TEST_CASE("select_transformation hand values and dominant diagonal") {
  RMat rho(2, 2);
  rho << 0.9, 0.2, 0.1, 0.8;
  // scores = rho^T u = (0.34, 0.62) -> second transformation
  CHECK(select_transformation(rho, rvec2(0.3, 0.7)) == 1);

  RMat dominant = RMat::Constant(4, 4, 0.05);
  dominant.diagonal().setConstant(0.9);
  for (int i = 0; i < 4; ++i) {
    RVec u = RVec::Zero(4);
    u[i] = 1.0;
    CHECK(select_transformation(dominant, u) == i);
  }
}

TEST_CASE("selection ties break to the lowest index") {
  const RMat rho = RMat::Constant(3, 3, 0.5);
  CHECK(select_transformation(rho, RVec::Constant(3, 1.0 / 3)) == 0);
}

TEST_CASE("selection equals exhaustive risk minimization on random pairs") {
  RngStream rng(404);
  for (int trial = 0; trial < 300; ++trial) {
    const int np = 2 + rng.next_int(7);
    const RMat rho = random_rho(np, rng);
    const RVec u = random_posterior(np, rng);
    const int chosen = select_transformation(rho, u);

    int best = 0;
    double best_risk = risk(rho, u, 0);
    for (int k = 1; k < np; ++k) {
      const double r = risk(rho, u, k);
      if (r < best_risk) {
        best_risk = r;
        best = k;
      }
    }
    CHECK(chosen == best);
    for (int k = 0; k < np; ++k) {
      const double r = risk(rho, u, k);
      CHECK(r >= -1e-12);
      CHECK(r <= 1.0 + 1e-12);
      CHECK(risk(rho, u, chosen) <= r + 1e-12);
    }
  }
}

TEST_CASE("selection is invariant under positive scaling of rho") {
  RngStream rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int np = 3 + rng.next_int(5);
    const RMat rho = random_rho(np, rng);
    const RVec u = random_posterior(np, rng);
    const int base = select_transformation(rho, u);
    for (double scale : {0.05, 0.5, 3.0, 1000.0})
      CHECK(select_transformation(scale * rho, u) == base);
  }
}

TEST_CASE("selection is deterministic") {
  RngStream rng(8);
  const RMat rho = random_rho(5, rng);
  const RVec u = random_posterior(5, rng);
  CHECK(select_transformation(rho, u) == select_transformation(rho, u));
}

TEST_CASE("risk and selection reject shape mismatches") {
  const RMat rho = RMat::Ones(3, 3);
  CHECK_THROWS_AS(risk(rho, rvec2(0.5, 0.5), 0), std::invalid_argument);
  CHECK_THROWS_AS(select_transformation(rho, rvec2(0.5, 0.5)), std::invalid_argument);
  CHECK_THROWS_AS(risk(rho, RVec::Constant(3, 1.0 / 3), 5), std::invalid_argument);
}

TEST_CASE("identity policy passes symbols through untouched") {
  const semlang::Language lang = deterministic_pair();
  const codebook::Codebook cb = identity_codebook(2, 1);
  const SelectionPolicy policy = SelectionPolicy::identity(rvec2(1.0, 1.0));

  Message m;
  m.class_label = 0;
  CVec x(1);
  x << Complex(0.7, -0.3);
  const auto [y, index] = pre_equalize(cb, policy, lang, m, x);
  CHECK(index == -1);
  CHECK((y - x).norm() == 0.0);
}

TEST_CASE("bayes pre-equalization selects the message's atom under a clean diagonal") {
  const semlang::Language lang = deterministic_pair();
  codebook::Codebook cb = identity_codebook(2, 1);
  cb.maps[1].b[0] = Complex(2, 0);  // distinguishable maps
  RMat rho(2, 2);
  rho << 0.95, 0.1, 0.05, 0.9;
  const SelectionPolicy policy = SelectionPolicy::bayes(rho);

  for (int lab : {0, 1}) {
    Message m;
    m.class_label = lab;
    const CVec x = lang.atoms[static_cast<size_t>(lab)].centroid;
    const auto [y, index] = pre_equalize(cb, policy, lang, m, x);
    CHECK(index == lab);
    CHECK((y - cb.maps[static_cast<size_t>(lab)].apply(x)).norm() == 0.0);
  }
}

TEST_CASE("end-to-end noiseless transfer frequency matches the rho estimate") {
  semlang::LanguageSpec src_spec;
  src_spec.atom_count = 4;
  src_spec.spread = 0.15;
  src_spec.phase_deg = 45.0;
  const semlang::Language src = semlang::make_synthetic_language(src_spec, 61);
  semlang::LanguageSpec tgt_spec;
  tgt_spec.atom_count = 2;
  tgt_spec.spread = 0.2;
  const semlang::Language tgt = semlang::make_synthetic_language(tgt_spec, 62);
  const semlang::LabelMap kmap = semlang::LabelMap::modulo(4, 2);

  codebook::BuildOptions opt;
  opt.samples_per_source_atom = 60;
  opt.samples_per_target_atom = 300;
  opt.threads = 2;
  const codebook::Codebook cb = codebook::build_codebook(src, tgt, kmap, opt, 41);
  const int eval_n = 5000;
  const codebook::InfoTransferMatrix rho =
      codebook::estimate_rho_matrix(cb, src, tgt, eval_n, 43, 2);
  const SelectionPolicy policy = SelectionPolicy::bayes(rho.rho);

  for (int atom = 0; atom < 4; ++atom) {
    const int trials = 5000;
    const CMat xs = semlang::sample_atom(src, atom, trials, 97);
    long hits = 0;
    for (int t = 0; t < trials; ++t) {
      Message m;
      m.class_label = atom;
      m.id = t;
      const auto [y, index] = pre_equalize(cb, policy, src, m, xs.row(t).transpose());
      (void)index;
      if (semlang::interpret(tgt, y) == kmap(atom)) ++hits;
    }
    const double freq = static_cast<double>(hits) / trials;
    const double sigma = std::sqrt(0.25 / trials) + std::sqrt(0.25 / eval_n);
    CHECK(freq >= rho.rho(atom, atom) - 3.0 * sigma);
  }
}

TEST_CASE("post-equalization agrees with pre-equalization on a noiseless channel") {
  const semlang::Language src = deterministic_pair();
  semlang::Language tgt = src;
  tgt.atoms[0].centroid[0] = Complex(0, 1);
  tgt.atoms[1].centroid[0] = Complex(0, -1);

  codebook::Codebook cb = identity_codebook(2, 1);
  // maps rotate each atom onto its target
  cb.maps[0].A(0, 0) = Complex(0, 1);
  cb.maps[1].A(0, 0) = Complex(0, 1);
  RMat rho(2, 2);
  rho << 1.0, 0.0, 0.0, 1.0;
  const SelectionPolicy policy = SelectionPolicy::bayes(rho);

  for (int lab : {0, 1}) {
    Message m;
    m.class_label = lab;
    const CVec x = src.atoms[static_cast<size_t>(lab)].centroid;
    const auto [pre, k_pre] = pre_equalize(cb, policy, src, m, x);
    (void)k_pre;
    const CVec post = post_equalize(cb, rho, x, src);
    CHECK(semlang::interpret(tgt, pre) == semlang::interpret(tgt, post));
  }
}

TEST_CASE("identity-only codebook leaves received symbols unchanged") {
  const semlang::Language src = deterministic_pair();
  const codebook::Codebook cb = identity_codebook(2, 1);
  const RMat rho = RMat::Identity(2, 2);
  CVec x(1);
  x << Complex(0.2, 0.4);
  CHECK((post_equalize(cb, rho, x, src) - x).norm() == 0.0);
}

TEST_CASE("post-equalization is total under heavy noise") {
  semlang::LanguageSpec spec;
  spec.atom_count = 3;
  spec.spread = 0.1;
  const semlang::Language src = semlang::make_synthetic_language(spec, 5);
  codebook::Codebook cb;
  cb.n = 2;
  cb.kmap = semlang::LabelMap::modulo(3, 3);
  for (int i = 0; i < 3; ++i) cb.maps.push_back(LinearMap::identity(2));
  const RMat rho = RMat::Identity(3, 3);

  RngStream rng(55);
  for (int trial = 0; trial < 100; ++trial) {
    CVec x(2);
    x << Complex(rng.next_gaussian() * 50, rng.next_gaussian() * 50),
        Complex(rng.next_gaussian() * 50, rng.next_gaussian() * 50);
    CHECK_NOTHROW(post_equalize(cb, rho, x, src));
  }
}

TEST_CASE("pre_equalize optional renormalization projects to unit average power") {
  const semlang::Language lang = deterministic_pair();
  codebook::Codebook cb = identity_codebook(2, 1);
  cb.maps[0].A(0, 0) = Complex(3, 0);
  RMat rho(2, 2);
  rho << 1.0, 0.0, 0.0, 1.0;
  const SelectionPolicy policy = SelectionPolicy::bayes(rho);
  Message m;
  m.class_label = 0;
  CVec x(1);
  x << Complex(1, 0);
  const auto [y, index] = pre_equalize(cb, policy, lang, m, x, /*renormalize=*/true);
  (void)index;
  CHECK(y.squaredNorm() == doctest::Approx(1.0).epsilon(1e-12));
}

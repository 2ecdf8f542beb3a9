#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "semeq/baselines.hpp"
#include "semeq/rng.hpp"

using namespace semeq;
using namespace semeq::baselines;
using semlang::LabelMap;
using semlang::LanguageSpec;
using semlang::MessageSource;

namespace {

double classcom_accuracy(ClassComVariant variant, const MessageSource& source,
                         const LabelMap& kmap, const ClassComConfig& cfg,
                         double sigma2, int messages, uint64_t seed) {
  long correct = 0;
  for (int t = 0; t < messages; ++t) {
    const Message m = source.draw(t, mix_seed(seed, {1}));
    RngStream noise(mix_seed(seed, {2, static_cast<uint64_t>(t)}));
    RngStream confusion(mix_seed(seed, {3, static_cast<uint64_t>(t)}));
    const int pred = run_classcom(variant, m, source, kmap, cfg, sigma2, noise, confusion);
    if (pred == kmap(m.class_label)) ++correct;
  }
  return static_cast<double>(correct) / messages;
}

}  // namespace

TEST_CASE("noiseless variant B with a perfect classifier is always right") {
  const MessageSource source = MessageSource::circle(10, 8, 1.0, 0.02);
  const LabelMap kmap = LabelMap::modulo(10, 2);
  ClassComConfig cfg;
  cfg.digit_accuracy = 1.0;
  cfg.target_accuracy = 1.0;
  CHECK(classcom_accuracy(ClassComVariant::B, source, kmap, cfg, 0.0, 2000, 9) == 1.0);
}

TEST_CASE("uniform-confusion fixture reproduces the method-A parity identity") {
  // digit classifier correct w.p. a_k, uniform over the other 9 digits;
  // of those, 4 share the true parity: accuracy = a_k + (4/9)(1 - a_k)
  const MessageSource source = MessageSource::circle(10, 8, 1.0, 0.02);
  const LabelMap kmap = LabelMap::modulo(10, 2);
  ClassComConfig cfg;
  cfg.digit_accuracy = 0.7;
  cfg.target_accuracy = 1.0;

  const int messages = 30000;
  const double measured =
      classcom_accuracy(ClassComVariant::A, source, kmap, cfg, 0.0, messages, 21);
  const double predicted = 0.7 + (4.0 / 9.0) * 0.3;
  CHECK(std::abs(measured - predicted) <= 0.02);
}

TEST_CASE("variant B beats variant A when the source classifier is imperfect") {
  const MessageSource source = MessageSource::circle(10, 8, 1.0, 0.02);
  const LabelMap kmap = LabelMap::modulo(10, 2);
  ClassComConfig cfg;  // defaults: digit 0.784, target 0.944
  const int messages = 20000;
  const double acc_a =
      classcom_accuracy(ClassComVariant::A, source, kmap, cfg, 0.0, messages, 31);
  const double acc_b =
      classcom_accuracy(ClassComVariant::B, source, kmap, cfg, 0.0, messages, 31);
  CHECK(acc_b >= acc_a);
  CHECK(acc_a == doctest::Approx(0.784 + (4.0 / 9.0) * 0.216).epsilon(0.03));
  CHECK(acc_b == doctest::Approx(0.944).epsilon(0.03));
}

TEST_CASE("semcom_noeq over a transparent channel scores perfectly") {
  LanguageSpec spec;
  spec.atom_count = 4;
  spec.spread = 0.05;
  const semlang::Language lang = semlang::make_synthetic_language(spec, 3);
  RngStream noise(1);
  long correct = 0;
  for (int t = 0; t < 500; ++t) {
    Message m;
    m.class_label = t % 4;
    m.id = t;
    if (run_semcom_noeq(m, lang, lang, 5, 0.0, noise) == m.class_label) ++correct;
  }
  CHECK(correct == 500);
}

TEST_CASE("semcom_noeq equals generate + awgn + interpret composed by hand") {
  LanguageSpec spec;
  spec.atom_count = 3;
  spec.spread = 0.2;
  const semlang::Language lang = semlang::make_synthetic_language(spec, 4);
  for (int t = 0; t < 50; ++t) {
    Message m;
    m.class_label = t % 3;
    m.id = t;
    RngStream noise_a(mix_seed(99, {static_cast<uint64_t>(t)}));
    RngStream noise_b(mix_seed(99, {static_cast<uint64_t>(t)}));
    const int via_op = run_semcom_noeq(m, lang, lang, 5, 0.5, noise_a);
    const CVec x = semlang::generate(lang, m, 5);
    const int by_hand =
        semlang::interpret(lang, channel::awgn_with_stream(x, 0.5, noise_b));
    CHECK(via_op == by_hand);
  }
}

TEST_CASE("linear-eq analytic gradient matches central finite differences") {
  LanguageSpec tgt_spec;
  tgt_spec.atom_count = 3;
  tgt_spec.spread = 0.3;
  const semlang::Language tgt = semlang::make_synthetic_language(tgt_spec, 7);

  RngStream rng(12);
  const int batch = 10, n = 2;
  CMat x(batch, n);
  std::vector<int> labels(batch);
  for (int k = 0; k < batch; ++k) {
    for (int d = 0; d < n; ++d)
      x(k, d) = Complex(rng.next_gaussian(), rng.next_gaussian());
    labels[static_cast<size_t>(k)] = rng.next_int(3);
  }
  LinearMap t;
  t.A.resize(n, n);
  t.b.resize(n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c)
      t.A(r, c) = Complex(rng.next_gaussian() * 0.5, rng.next_gaussian() * 0.5);
    t.b[r] = Complex(rng.next_gaussian() * 0.5, rng.next_gaussian() * 0.5);
  }

  CMat grad_a;
  CVec grad_b;
  linear_eq_loss(t, x, labels, tgt, &grad_a, &grad_b);

  const double h = 1e-5;
  auto rel_check = [](double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    CHECK(std::abs(analytic - numeric) / denom < 1e-4);
  };
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      for (int part = 0; part < 2; ++part) {
        LinearMap tp = t, tm = t;
        const Complex delta = part == 0 ? Complex(h, 0) : Complex(0, h);
        tp.A(r, c) += delta;
        tm.A(r, c) -= delta;
        const double numeric = (linear_eq_loss(tp, x, labels, tgt) -
                                linear_eq_loss(tm, x, labels, tgt)) /
                               (2 * h);
        rel_check(part == 0 ? grad_a(r, c).real() : grad_a(r, c).imag(), numeric);
      }
  for (int d = 0; d < n; ++d)
    for (int part = 0; part < 2; ++part) {
      LinearMap tp = t, tm = t;
      const Complex delta = part == 0 ? Complex(h, 0) : Complex(0, h);
      tp.b[d] += delta;
      tm.b[d] -= delta;
      const double numeric = (linear_eq_loss(tp, x, labels, tgt) -
                              linear_eq_loss(tm, x, labels, tgt)) /
                             (2 * h);
      rel_check(part == 0 ? grad_b[d].real() : grad_b[d].imag(), numeric);
    }
}

namespace {

struct TrainFixture {
  semlang::Language src, tgt;
  LabelMap kmap;
  CMat samples;
  std::vector<int> labels;
};

TrainFixture aligned_fixture(int atoms, double spread, uint64_t seed) {
  TrainFixture f;
  LanguageSpec spec;
  spec.atom_count = atoms;
  spec.spread = spread;
  f.src = semlang::make_synthetic_language(spec, seed);
  f.tgt = f.src;
  f.kmap = LabelMap::modulo(atoms, atoms);
  const int per_atom = 80;
  f.samples.resize(atoms * per_atom, 2);
  f.labels.resize(static_cast<size_t>(atoms * per_atom));
  for (int i = 0; i < atoms; ++i) {
    f.samples.middleRows(i * per_atom, per_atom) =
        semlang::sample_atom(f.src, i, per_atom, seed + 1);
    for (int k = 0; k < per_atom; ++k)
      f.labels[static_cast<size_t>(i * per_atom + k)] = i;
  }
  return f;
}

double eval_map_accuracy(const LinearMap& map, const TrainFixture& f, uint64_t seed) {
  long correct = 0;
  const int trials = 2000;
  for (int t = 0; t < trials; ++t) {
    const int atom = t % f.src.num_atoms();
    Message m;
    m.class_label = atom;
    m.id = t;
    const CVec x = semlang::generate(f.src, m, seed);
    if (semlang::interpret(f.tgt, map.apply(x)) == f.kmap(atom)) ++correct;
  }
  return static_cast<double>(correct) / trials;
}

}  // namespace

TEST_CASE("training on aligned languages stays identity-equivalent in accuracy") {
  const TrainFixture f = aligned_fixture(4, 0.15, 51);
  LinearEqConfig cfg;
  cfg.epochs = 30;
  cfg.learning_rate = 0.05;
  const LinearEqResult res = train_linear_eq(f.tgt, f.kmap, f.samples, f.labels, cfg);

  const double trained = eval_map_accuracy(res.map, f, 71);
  const double identity = eval_map_accuracy(LinearMap::identity(2), f, 71);
  CHECK(trained >= identity - 0.01);
}

TEST_CASE("training loss decreases in smoothed form") {
  const TrainFixture f = aligned_fixture(5, 0.25, 52);
  LinearEqConfig cfg;
  cfg.epochs = 40;
  cfg.learning_rate = 0.04;
  const LinearEqResult res = train_linear_eq(f.tgt, f.kmap, f.samples, f.labels, cfg);

  const auto& trace = res.loss_trace;
  REQUIRE(trace.size() >= 20);
  const int w = 10;
  double head = 0.0, tail = 0.0;
  for (int i = 0; i < w; ++i) {
    head += trace[static_cast<size_t>(i)];
    tail += trace[trace.size() - 1 - static_cast<size_t>(i)];
  }
  CHECK(tail / w < head / w);
}

TEST_CASE("training rejects missing atoms and detects divergence") {
  const TrainFixture f = aligned_fixture(3, 0.2, 53);
  LinearEqConfig cfg;

  std::vector<int> broken = f.labels;
  for (int& lab : broken)
    if (lab == 2) lab = 1;  // atom 2 unseen
  CHECK_THROWS_AS(train_linear_eq(f.tgt, f.kmap, f.samples, broken, cfg),
                  std::invalid_argument);

  // On a non-separable parity task a huge step overshoots into a regime where
  // the misclassified fraction carries unbounded loss.
  TrainFixture parity = aligned_fixture(6, 0.1, 57);
  parity.kmap = LabelMap::modulo(6, 2);
  LanguageSpec tgt_spec;
  tgt_spec.atom_count = 2;
  tgt_spec.spread = 0.2;
  parity.tgt = semlang::make_synthetic_language(tgt_spec, 58);
  cfg.learning_rate = 1e6;
  CHECK_THROWS_AS(train_linear_eq(parity.tgt, parity.kmap, parity.samples,
                                  parity.labels, cfg),
                  std::runtime_error);
}

TEST_CASE("two-layer ablation variant trains and reduces its loss") {
  const TrainFixture f = aligned_fixture(4, 0.2, 54);
  LinearEqConfig cfg;
  cfg.hidden_width = 8;
  cfg.epochs = 30;
  cfg.learning_rate = 0.03;
  const TwoLayerResult res = train_two_layer_eq(f.tgt, f.kmap, f.samples, f.labels, cfg);
  REQUIRE(res.loss_trace.size() >= 2);
  CHECK(res.loss_trace.back() < res.loss_trace.front());

  // apply() and apply_rows() agree
  const CVec x = f.samples.row(0).transpose();
  const CMat rows = res.net.apply_rows(f.samples.topRows(1));
  CHECK((res.net.apply(x) - rows.row(0).transpose()).norm() <= 1e-12);
}

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "semeq/types.hpp"

namespace semeq::semlang {

// One cell of a language's partition of the semantic space: an isotropic
// Gaussian cluster (spread = std per real coordinate).
struct AtomModel {
  int label = 0;
  CVec centroid;
  double spread = 0.0;
};

// Generator + interpreter + induced partition. Atoms are stored in label
// order with label == index; decision regions are nearest-centroid cells, so
// they cover C^n and every finite symbol maps to exactly one atom.
struct Language {
  int n = 0;
  std::vector<AtomModel> atoms;
  double generator_noise_scale = 0.0;  // extra generator jitter beyond atom spread
  std::vector<std::string> label_names;

  int num_atoms() const { return static_cast<int>(atoms.size()); }
  void validate() const;  // throws std::invalid_argument on violations
};

// Atom correspondence kappa: source atom index -> target atom index
// (one-to-one or many-to-one, total over source atoms).
struct LabelMap {
  std::vector<int> table;
  int target_count = 0;

  int operator()(int i) const;
  int source_count() const { return static_cast<int>(table.size()); }
  void validate(int source_atoms, int target_atoms) const;

  // i -> i % target_atoms (the digit -> parity structure)
  static LabelMap modulo(int source_atoms, int target_atoms);
};

enum class CentroidLayout { Circle, GroupedModulo, Explicit };

struct LanguageSpec {
  int n = 2;
  int atom_count = 0;
  CentroidLayout layout = CentroidLayout::Circle;
  double spread = 0.1;
  double generator_noise_scale = 0.0;

  // Circle: atoms on a circle of radius circle_radius in complex coordinate
  // circle_axis, at angles phase_deg + 360*i/atom_count.
  double circle_radius = 1.0;
  double phase_deg = 0.0;
  int circle_axis = 0;

  // GroupedModulo: atoms split into group_count groups by label % group_count;
  // group g is offset along complex coordinate group_axis, atoms within a
  // group sit on a small circle of radius within_group_radius in coordinate
  // circle_axis. Realizes the "equivalent transformations" regime.
  int group_count = 2;
  double group_separation = 2.0;
  int group_axis = 1;
  double within_group_radius = 0.2;

  // Explicit: centroids given directly.
  std::vector<CVec> centroids;

  // Optional random unitary applied to all centroids so the source->target
  // relation is globally non-linear (random rotation/shear of the layout).
  std::optional<uint64_t> unitary_seed;

  std::vector<std::string> label_names;
};

Language make_synthetic_language(const LanguageSpec& spec, uint64_t seed);

// lambda(m): centroid of the message's atom plus Gaussian perturbation.
// Deterministic given (m, seed).
SemanticSymbol generate(const Language& lang, const Message& m, uint64_t seed);

// Batch of `count` draws from one atom; draw i uses an order-independent
// substream of (seed, atom, i).
CMat sample_atom(const Language& lang, int atom, int count, uint64_t seed);

// I_lambda(x): nearest-centroid atom label, ties broken by lowest label.
int interpret(const Language& lang, const SemanticSymbol& x);

// mu(P_i | m): exact Gaussian-mixture posterior over atoms, evaluated at the
// generator's mean output for m. One-hot for deterministic (spread=0) atoms.
RVec atom_posterior(const Language& lang, const Message& m);

// Posterior at an arbitrary symbol (receiver-side estimation).
RVec atom_posterior_at(const Language& lang, const SemanticSymbol& x);

struct LabeledSamples {
  CMat symbols;                          // N x n
  std::vector<int> labels;               // atom index per row
  std::vector<std::string> label_names;  // index -> original label string

  int size() const { return static_cast<int>(symbols.rows()); }
  int dim() const { return static_cast<int>(symbols.cols()); }
};

// Embedding CSV: header `id,label,re_0,im_0,...,re_{n-1},im_{n-1}`.
// Labels may be arbitrary strings; atoms are indexed by sorted unique label.
// If expected_labels is given, any other label is an error.
LabeledSamples load_embeddings(const std::string& path, int expected_n,
                               const std::vector<std::string>* expected_labels = nullptr);
void save_embeddings(const std::string& path, const LabeledSamples& data);

// Empirical language: per-atom centroid = sample mean, spread = pooled std
// per real coordinate (floored at min_spread).
Language fit_language(const LabeledSamples& data, double min_spread = 1e-9);

// Message model for the harness and classical baselines: labels uniform over
// classes, features = class anchor + Gaussian noise.
struct MessageSource {
  RMat anchors;  // num_classes x feature_dim
  double feature_noise = 0.05;

  int num_classes() const { return static_cast<int>(anchors.rows()); }
  int feature_dim() const { return static_cast<int>(anchors.cols()); }

  Message draw(long id, uint64_t seed) const;
  int classify(const RVec& feature) const;  // nearest anchor

  // anchors on a circle of given radius in feature dims (0, 1), zeros elsewhere
  static MessageSource circle(int num_classes, int feature_dim, double radius,
                              double noise);
};

}  // namespace semeq::semlang

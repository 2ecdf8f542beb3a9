#pragma once

// Shared experiment fixtures for integration and acceptance tests.
//
// digit_parity_grouped: 10 source atoms in two parity groups offset along the
// second complex coordinate, 2 target atoms split along the first. Same-parity
// atoms are alignable by near-identical translations, so the codebook develops
// the equivalent/orthogonal transformation structure.
//
// digit_parity_interleaved: 10 source atoms on a circle with alternating
// parity, rotated so identity transmission lands most atoms on the wrong side
// (noiseless no-EQ accuracy 0.4). No single affine map can separate
// alternating clusters of a convex polygon by parity, which is what the
// per-atom codebook compensates.

#include "semeq/expharness.hpp"

namespace fixtures {

inline semeq::harness::ExperimentConfig digit_parity_grouped() {
  semeq::harness::ExperimentConfig cfg;

  cfg.source_spec.n = 2;
  cfg.source_spec.atom_count = 10;
  cfg.source_spec.layout = semeq::semlang::CentroidLayout::GroupedModulo;
  cfg.source_spec.spread = 0.4;
  cfg.source_spec.group_count = 2;
  cfg.source_spec.group_separation = 2.0;
  cfg.source_spec.group_axis = 1;
  cfg.source_spec.within_group_radius = 0.2;

  cfg.target_spec.n = 2;
  cfg.target_spec.atom_count = 2;
  cfg.target_spec.layout = semeq::semlang::CentroidLayout::Circle;
  cfg.target_spec.spread = 0.4;
  cfg.target_spec.circle_radius = 1.0;

  cfg.source_seed = 101;
  cfg.target_seed = 102;
  cfg.seed = 7;
  cfg.build.samples_per_source_atom = 200;
  cfg.build.samples_per_target_atom = 1000;
  cfg.rho_eval_samples = 10000;
  cfg.messages_per_point = 10000;
  cfg.snr_grid_db = {0.0};
  cfg.methods = {"codebook_eq"};
  return cfg;
}

inline semeq::harness::ExperimentConfig digit_parity_interleaved() {
  semeq::harness::ExperimentConfig cfg;

  cfg.source_spec.n = 2;
  cfg.source_spec.atom_count = 10;
  cfg.source_spec.layout = semeq::semlang::CentroidLayout::Circle;
  cfg.source_spec.spread = 0.1;
  cfg.source_spec.circle_radius = 1.0;
  cfg.source_spec.phase_deg = 180.0;

  cfg.target_spec.n = 2;
  cfg.target_spec.atom_count = 2;
  cfg.target_spec.layout = semeq::semlang::CentroidLayout::Circle;
  cfg.target_spec.spread = 0.3;
  cfg.target_spec.circle_radius = 1.0;

  cfg.source_seed = 201;
  cfg.target_seed = 202;
  cfg.seed = 11;
  cfg.build.samples_per_source_atom = 200;
  cfg.build.samples_per_target_atom = 1000;
  cfg.rho_eval_samples = 10000;
  cfg.messages_per_point = 10000;
  cfg.snr_grid_db = {0.0};
  cfg.methods = {"codebook_eq", "semcom_noeq"};
  return cfg;
}

}  // namespace fixtures

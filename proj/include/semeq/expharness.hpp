#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semeq/baselines.hpp"
#include "semeq/codebook.hpp"
#include "semeq/equalizer.hpp"
#include "semeq/semlang.hpp"
#include "semeq/types.hpp"

namespace semeq::harness {

// Methods: codebook_eq, codebook_eq_post, semcom_noeq, learned_linear_eq,
// classcom_a, classcom_b. "all" expands to this list.
const std::vector<std::string>& known_methods();

struct ExperimentConfig {
  semlang::LanguageSpec source_spec;
  semlang::LanguageSpec target_spec;
  uint64_t source_seed = 1;
  uint64_t target_seed = 2;
  semlang::LabelMap kmap;  // empty table -> modulo(N_P, N_Q)

  codebook::BuildOptions build;
  uint64_t seed = 7;  // codebook build + default eval seed
  int rho_eval_samples = 10000;

  std::vector<double> snr_grid_db;  // +infinity = noiseless point
  std::vector<double> radius_grid{1.0};
  std::vector<std::string> methods{"all"};
  int messages_per_point = 10000;
  std::vector<uint64_t> eval_seeds;  // empty -> {seed}

  int feature_dim = 8;
  double feature_anchor_radius = 1.0;
  double feature_noise = 0.05;
  baselines::ClassComConfig classcom;
  baselines::LinearEqConfig linear_eq;

  bool normalize_tx_power = true;
  int threads = 0;
  std::string out_dir;

  void validate() const;
  std::vector<std::string> expanded_methods() const;

  static ExperimentConfig from_json(const std::string& text);
  static ExperimentConfig from_json_file(const std::string& path);
  std::string to_json() const;
};

struct ResultRow {
  std::string method;
  double snr_db = 0.0;
  double radius = 1.0;
  double accuracy = 0.0;
  double avg_risk = 0.0;  // NaN where Eq. 11 is undefined (ClassCom)
  double entropy = 0.0;   // codebook entropy at this radius
  double symbols_per_message = 0.0;
  uint64_t seed = 0;
  std::string error;  // non-empty if this grid point aborted
};

std::string results_csv_header();
std::string result_row_csv(const ResultRow& row);
void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows);

// Empirical Eq.-12 objective: mean Eq.-11 risk over a posterior stream.
double average_risk(const equalizer::SelectionPolicy& policy,
                    const std::vector<RVec>& posteriors);

// Full grid: for each (radius) builds the codebook and rho, then for each
// (method, snr, eval seed) streams paired messages through
// generate -> [pre-EQ] -> normalize -> AWGN -> interpret and scores against
// kappa(true atom). Deterministic given the config; a failing grid point is
// recorded in its row's error column and the run continues.
std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg);

// Resolved-language JSON (atoms, centroids, spreads); used by the CLI.
std::string language_json(const semlang::Language& lang);

}  // namespace semeq::harness

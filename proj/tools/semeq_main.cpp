// semeq command-line front end.
//
// Subcommands:
//   gen-lang        resolve the configured languages, write their JSON and
//                   labeled sample CSVs
//   build-codebook  solve the transport problems and write the codebook JSON,
//                   rho CSV and entropy
//   eval            run a single (snr, radius) grid point
//   sweep           run the full experiment grid and write results CSV
//   inspect         print rho, entropy and per-atom diagnostics of a codebook

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "semeq/expharness.hpp"
#include "semeq/rng.hpp"

namespace fs = std::filesystem;
using namespace semeq;

namespace {

std::vector<double> parse_snr_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "inf" || item == "noiseless")
      out.push_back(std::numeric_limits<double>::infinity());
    else
      out.push_back(std::stod(item));
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

std::vector<std::string> parse_name_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

void write_rho_csv(const std::string& path, const RMat& rho) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "atom";
  for (int k = 0; k < rho.cols(); ++k) out << ",T_" << k;
  out << "\n";
  for (int i = 0; i < rho.rows(); ++i) {
    out << i;
    for (int k = 0; k < rho.cols(); ++k) out << ',' << fmt_double(rho(i, k));
    out << "\n";
  }
}

semlang::LabeledSamples draw_labeled(const semlang::Language& lang, int per_atom,
                                     uint64_t seed) {
  semlang::LabeledSamples data;
  data.symbols.resize(lang.num_atoms() * per_atom, lang.n);
  data.labels.resize(static_cast<size_t>(lang.num_atoms() * per_atom));
  data.label_names = lang.label_names;
  for (int i = 0; i < lang.num_atoms(); ++i) {
    data.symbols.middleRows(i * per_atom, per_atom) =
        semlang::sample_atom(lang, i, per_atom, seed);
    for (int k = 0; k < per_atom; ++k)
      data.labels[static_cast<size_t>(i * per_atom + k)] = i;
  }
  return data;
}

int cmd_gen_lang(const std::string& config_path, uint64_t seed_override, bool has_seed,
                 const std::string& out_dir) {
  harness::ExperimentConfig cfg = harness::ExperimentConfig::from_json_file(config_path);
  if (has_seed) cfg.seed = seed_override;
  fs::create_directories(out_dir);

  const semlang::Language src =
      semlang::make_synthetic_language(cfg.source_spec, cfg.source_seed);
  const semlang::Language tgt =
      semlang::make_synthetic_language(cfg.target_spec, cfg.target_seed);

  auto dump = [&](const std::string& name, const std::string& text) {
    std::ofstream out(fs::path(out_dir) / name);
    out << text;
  };
  dump("source_lang.json", harness::language_json(src));
  dump("target_lang.json", harness::language_json(tgt));

  semlang::save_embeddings((fs::path(out_dir) / "source_samples.csv").string(),
                           draw_labeled(src, cfg.build.samples_per_source_atom, cfg.seed));
  semlang::save_embeddings((fs::path(out_dir) / "target_samples.csv").string(),
                           draw_labeled(tgt, cfg.build.samples_per_target_atom,
                                        mix_seed(cfg.seed, {hash_tag("gen-lang.target")})));
  std::cout << "wrote languages and samples to " << out_dir << "\n";
  return 0;
}

int cmd_build_codebook(const std::string& config_path, uint64_t seed_override,
                       bool has_seed, const std::string& out_path, double radius,
                       bool has_radius, const std::string& trace_dir) {
  harness::ExperimentConfig cfg = harness::ExperimentConfig::from_json_file(config_path);
  if (has_seed) cfg.seed = seed_override;

  const semlang::Language src =
      semlang::make_synthetic_language(cfg.source_spec, cfg.source_seed);
  const semlang::Language tgt =
      semlang::make_synthetic_language(cfg.target_spec, cfg.target_seed);
  semlang::LabelMap kmap = cfg.kmap;
  if (kmap.table.empty())
    kmap = semlang::LabelMap::modulo(src.num_atoms(), tgt.num_atoms());

  codebook::BuildOptions opt = cfg.build;
  if (has_radius) opt.p1.radius = radius;
  opt.threads = cfg.threads;

  std::vector<ot::P1Trace> traces;
  const codebook::Codebook cb = codebook::build_codebook(
      src, tgt, kmap, opt, cfg.seed, trace_dir.empty() ? nullptr : &traces);
  const codebook::InfoTransferMatrix rho = codebook::estimate_rho_matrix(
      cb, src, tgt, cfg.rho_eval_samples, cfg.seed, cfg.threads);

  codebook::save_codebook(cb, out_path, &rho);
  const fs::path rho_path = fs::path(out_path).parent_path() / "rho.csv";
  write_rho_csv(rho_path.string(), rho.rho);

  if (!trace_dir.empty()) {
    fs::create_directories(trace_dir);
    for (size_t i = 0; i < traces.size(); ++i)
      traces[i].write_csv((fs::path(trace_dir) / ("trace_atom_" + std::to_string(i) +
                                                  ".csv")).string());
  }

  std::cout << "codebook: " << out_path << "\n"
            << "rho: " << rho_path.string() << "\n"
            << "entropy: " << fmt_double(codebook::codebook_entropy(rho)) << " nats\n";
  return 0;
}

int cmd_sweep(const std::string& config_path, uint64_t seed_override, bool has_seed,
              const std::string& out_path, const std::string& snr_list,
              const std::string& radius_list, const std::string& method_list) {
  harness::ExperimentConfig cfg = harness::ExperimentConfig::from_json_file(config_path);
  if (has_seed) cfg.seed = seed_override;
  if (!snr_list.empty()) cfg.snr_grid_db = parse_snr_list(snr_list);
  if (!radius_list.empty()) cfg.radius_grid = parse_double_list(radius_list);
  if (!method_list.empty()) cfg.methods = parse_name_list(method_list);
  cfg.out_dir.clear();  // the --out flag controls the file below

  const std::vector<harness::ResultRow> rows = harness::run_experiment(cfg);
  if (!out_path.empty()) {
    if (fs::path(out_path).has_parent_path())
      fs::create_directories(fs::path(out_path).parent_path());
    harness::write_results_csv(out_path, rows);
    std::cout << "wrote " << rows.size() << " rows to " << out_path << "\n";
  } else {
    std::cout << harness::results_csv_header() << "\n";
    for (const auto& row : rows) std::cout << harness::result_row_csv(row) << "\n";
  }
  for (const auto& row : rows)
    if (!row.error.empty())
      std::cerr << "warning: grid point (" << row.method << ", " << fmt_double(row.snr_db)
                << " dB, r=" << fmt_double(row.radius) << ") failed: " << row.error << "\n";
  return 0;
}

int cmd_inspect(const std::string& cb_path) {
  codebook::InfoTransferMatrix rho;
  const codebook::Codebook cb = codebook::load_codebook(cb_path, &rho);
  std::cout << "codebook: n=" << cb.n << " N_P=" << cb.size()
            << " radius=" << fmt_double(cb.meta.radius) << " seed=" << cb.meta.seed << "\n";
  std::cout << "kappa:";
  for (int i = 0; i < cb.size(); ++i) std::cout << ' ' << i << "->" << cb.kmap(i);
  std::cout << "\n";
  if (rho.rho.size() > 0) {
    std::cout << "rho (rows: source atom i, cols: transformation k):\n";
    for (int i = 0; i < rho.rho.rows(); ++i) {
      for (int k = 0; k < rho.rho.cols(); ++k)
        std::cout << (k ? " " : "  ") << std::fixed << std::setprecision(3)
                  << rho.rho(i, k);
      std::cout << "\n";
    }
    std::cout << "entropy: " << fmt_double(codebook::codebook_entropy(rho)) << " nats\n";
  } else {
    std::cout << "rho: not stored in this file\n";
  }
  std::cout << "per-atom maps:\n";
  for (int i = 0; i < cb.size(); ++i) {
    const LinearMap& m = cb.maps[static_cast<size_t>(i)];
    const CMat dev = m.A - CMat::Identity(cb.n, cb.n);
    std::cout << "  T_" << i << ": |A-I|_F=" << std::fixed << std::setprecision(4)
              << std::sqrt(dev.squaredNorm()) << " |b|=" << std::sqrt(m.b.squaredNorm())
              << " target=" << cb.kmap(i) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semantic channel equalization simulator"};
  app.require_subcommand(1);

  std::string config_path, out_path, trace_dir, snr_list, radius_list, method_list;
  std::string cb_path;
  uint64_t seed = 0;
  double radius = 1.0;

  auto* gen = app.add_subcommand("gen-lang", "write language specs and samples");
  gen->add_option("--config", config_path, "experiment config JSON")->required();
  auto* gen_seed = gen->add_option("--seed", seed, "override the build seed");
  gen->add_option("--out", out_path, "output directory")->required();

  auto* build = app.add_subcommand("build-codebook", "solve the codebook and write it");
  build->add_option("--config", config_path, "experiment config JSON")->required();
  auto* build_seed = build->add_option("--seed", seed, "override the build seed");
  build->add_option("--out", out_path, "codebook JSON path")->required();
  auto* build_radius = build->add_option("--radius", radius, "ball-contraction radius");
  build->add_option("--traces", trace_dir, "directory for per-atom objective traces");

  auto* eval = app.add_subcommand("eval", "run a single grid point");
  eval->add_option("--config", config_path, "experiment config JSON")->required();
  auto* eval_seed = eval->add_option("--seed", seed, "override the build seed");
  eval->add_option("--snr-db", snr_list, "SNR in dB (or 'inf')")->required();
  auto* eval_radius = eval->add_option("--radius", radius, "ball-contraction radius");
  eval->add_option("--methods", method_list, "comma-separated methods");
  eval->add_option("--out", out_path, "results CSV path");

  auto* sweep = app.add_subcommand("sweep", "run the full experiment grid");
  sweep->add_option("--config", config_path, "experiment config JSON")->required();
  auto* sweep_seed = sweep->add_option("--seed", seed, "override the build seed");
  sweep->add_option("--snr-db", snr_list, "comma-separated SNR grid override");
  sweep->add_option("--radius", radius_list, "comma-separated radius grid override");
  sweep->add_option("--methods", method_list, "comma-separated methods override");
  sweep->add_option("--out", out_path, "results CSV path");

  auto* inspect = app.add_subcommand("inspect", "print rho and diagnostics");
  inspect->add_option("codebook", cb_path, "codebook JSON path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed())
      return cmd_gen_lang(config_path, seed, gen_seed->count() > 0, out_path);
    if (build->parsed())
      return cmd_build_codebook(config_path, seed, build_seed->count() > 0, out_path,
                                radius, build_radius->count() > 0, trace_dir);
    if (eval->parsed()) {
      std::string radii = eval_radius->count() > 0 ? fmt_double(radius) : "";
      return cmd_sweep(config_path, seed, eval_seed->count() > 0, out_path, snr_list,
                       radii, method_list);
    }
    if (sweep->parsed())
      return cmd_sweep(config_path, seed, sweep_seed->count() > 0, out_path, snr_list,
                       radius_list, method_list);
    if (inspect->parsed()) return cmd_inspect(cb_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

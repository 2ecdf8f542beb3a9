#include "semeq/expharness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "semeq/channel.hpp"
#include "semeq/rng.hpp"

namespace semeq::harness {

namespace {

using nlohmann::json;

const uint64_t kTagMessages = hash_tag("harness.messages");
const uint64_t kTagGenerate = hash_tag("harness.generate");
const uint64_t kTagNoise = hash_tag("harness.noise");
const uint64_t kTagConfusion = hash_tag("harness.confusion");
const uint64_t kTagLearnedTrain = hash_tag("harness.learned_eq.train");

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

// ---- LanguageSpec JSON --------------------------------------------------

std::string layout_name(semlang::CentroidLayout layout) {
  switch (layout) {
    case semlang::CentroidLayout::Circle: return "circle";
    case semlang::CentroidLayout::GroupedModulo: return "grouped";
    case semlang::CentroidLayout::Explicit: return "explicit";
  }
  return "circle";
}

semlang::CentroidLayout layout_from_name(const std::string& name) {
  if (name == "circle") return semlang::CentroidLayout::Circle;
  if (name == "grouped") return semlang::CentroidLayout::GroupedModulo;
  if (name == "explicit") return semlang::CentroidLayout::Explicit;
  throw std::runtime_error("config: unknown layout '" + name + "'");
}

json spec_to_json(const semlang::LanguageSpec& spec) {
  json j;
  j["n"] = spec.n;
  j["atoms"] = spec.atom_count;
  j["layout"] = layout_name(spec.layout);
  j["spread"] = spec.spread;
  j["generator_noise_scale"] = spec.generator_noise_scale;
  j["circle_radius"] = spec.circle_radius;
  j["phase_deg"] = spec.phase_deg;
  j["circle_axis"] = spec.circle_axis;
  j["group_count"] = spec.group_count;
  j["group_separation"] = spec.group_separation;
  j["group_axis"] = spec.group_axis;
  j["within_group_radius"] = spec.within_group_radius;
  if (spec.unitary_seed) j["unitary_seed"] = *spec.unitary_seed;
  if (!spec.centroids.empty()) {
    json cents = json::array();
    for (const CVec& c : spec.centroids) {
      json pairs = json::array();
      for (Eigen::Index d = 0; d < c.size(); ++d)
        pairs.push_back(json::array({c[d].real(), c[d].imag()}));
      cents.push_back(std::move(pairs));
    }
    j["centroids"] = std::move(cents);
  }
  if (!spec.label_names.empty()) j["label_names"] = spec.label_names;
  return j;
}

semlang::LanguageSpec spec_from_json(const json& j) {
  semlang::LanguageSpec spec;
  spec.n = j.value("n", 2);
  spec.atom_count = j.value("atoms", 0);
  spec.layout = layout_from_name(j.value("layout", std::string("circle")));
  spec.spread = j.value("spread", 0.1);
  spec.generator_noise_scale = j.value("generator_noise_scale", 0.0);
  spec.circle_radius = j.value("circle_radius", 1.0);
  spec.phase_deg = j.value("phase_deg", 0.0);
  spec.circle_axis = j.value("circle_axis", 0);
  spec.group_count = j.value("group_count", 2);
  spec.group_separation = j.value("group_separation", 2.0);
  spec.group_axis = j.value("group_axis", 1);
  spec.within_group_radius = j.value("within_group_radius", 0.2);
  if (j.contains("unitary_seed") && !j["unitary_seed"].is_null())
    spec.unitary_seed = j["unitary_seed"].get<uint64_t>();
  if (j.contains("centroids")) {
    for (const json& jc : j["centroids"]) {
      CVec c(static_cast<Eigen::Index>(jc.size()));
      for (size_t d = 0; d < jc.size(); ++d)
        c[static_cast<Eigen::Index>(d)] =
            Complex(jc[d][0].get<double>(), jc[d][1].get<double>());
      spec.centroids.push_back(std::move(c));
    }
  }
  if (j.contains("label_names"))
    spec.label_names = j["label_names"].get<std::vector<std::string>>();
  return spec;
}

double snr_from_json(const json& v) {
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "inf" || s == "noiseless")
      return std::numeric_limits<double>::infinity();
    throw std::runtime_error("config: bad snr value '" + s + "'");
  }
  return v.get<double>();
}

}  // namespace

const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> methods = {
      "codebook_eq", "codebook_eq_post", "semcom_noeq",
      "learned_linear_eq", "classcom_a", "classcom_b"};
  return methods;
}

void ExperimentConfig::validate() const {
  if (messages_per_point < 1)
    throw std::invalid_argument("ExperimentConfig: message count must be >= 1");
  if (snr_grid_db.empty())
    throw std::invalid_argument("ExperimentConfig: SNR grid must be non-empty");
  if (radius_grid.empty())
    throw std::invalid_argument("ExperimentConfig: radius grid must be non-empty");
  for (double r : radius_grid)
    if (!(r >= 0.0 && r <= 1.0))
      throw std::invalid_argument("ExperimentConfig: radius outside [0, 1]");
  if (rho_eval_samples < 1)
    throw std::invalid_argument("ExperimentConfig: rho_eval_samples must be >= 1");
  for (const std::string& m : expanded_methods()) {
    const auto& known = known_methods();
    if (std::find(known.begin(), known.end(), m) == known.end())
      throw std::invalid_argument("ExperimentConfig: unknown method '" + m + "'");
  }
}

std::vector<std::string> ExperimentConfig::expanded_methods() const {
  std::vector<std::string> out;
  for (const std::string& m : methods) {
    if (m == "all") {
      for (const std::string& k : known_methods()) out.push_back(k);
    } else {
      out.push_back(m);
    }
  }
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("config: malformed JSON: ") + e.what());
  }

  ExperimentConfig cfg;
  if (j.contains("source_language")) cfg.source_spec = spec_from_json(j["source_language"]);
  if (j.contains("target_language")) cfg.target_spec = spec_from_json(j["target_language"]);
  cfg.source_seed = j.value("source_seed", uint64_t{1});
  cfg.target_seed = j.value("target_seed", uint64_t{2});
  if (j.contains("kmap")) {
    cfg.kmap.table = j["kmap"].at("table").get<std::vector<int>>();
    cfg.kmap.target_count = j["kmap"].at("target_count").get<int>();
  }
  if (j.contains("p1")) {
    const json& p = j["p1"];
    cfg.build.p1.alpha = p.value("alpha", 0.0);
    cfg.build.p1.beta = p.value("beta", 0.0);
    cfg.build.p1.radius = p.value("radius", 1.0);
    cfg.build.p1.max_outer_iters = p.value("max_outer_iters", 50);
    cfg.build.p1.max_fw_iters = p.value("max_fw_iters", 20);
    cfg.build.p1.tol = p.value("tol", 1e-6);
  }
  cfg.build.auto_alpha = j.value("auto_alpha", true);
  cfg.build.samples_per_source_atom = j.value("samples_per_source_atom", 200);
  cfg.build.samples_per_target_atom = j.value("samples_per_target_atom", 1000);
  cfg.seed = j.value("seed", uint64_t{7});
  cfg.rho_eval_samples = j.value("rho_eval_samples", 10000);
  if (j.contains("snr_grid_db"))
    for (const json& v : j["snr_grid_db"]) cfg.snr_grid_db.push_back(snr_from_json(v));
  if (j.contains("radius_grid"))
    cfg.radius_grid = j["radius_grid"].get<std::vector<double>>();
  if (j.contains("methods")) cfg.methods = j["methods"].get<std::vector<std::string>>();
  cfg.messages_per_point = j.value("messages_per_point", 10000);
  if (j.contains("eval_seeds"))
    cfg.eval_seeds = j["eval_seeds"].get<std::vector<uint64_t>>();
  cfg.feature_dim = j.value("feature_dim", 8);
  cfg.feature_anchor_radius = j.value("feature_anchor_radius", 1.0);
  cfg.feature_noise = j.value("feature_noise", 0.05);
  if (j.contains("classcom")) {
    const json& c = j["classcom"];
    cfg.classcom.modem.qam_order = c.value("qam_order", 256);
    cfg.classcom.modem.bits_per_value = c.value("bits_per_value", 8);
    cfg.classcom.modem.clip_lo = c.value("clip_lo", -1.5);
    cfg.classcom.modem.clip_hi = c.value("clip_hi", 1.5);
    cfg.classcom.digit_accuracy = c.value("digit_accuracy", 0.784);
    cfg.classcom.target_accuracy = c.value("target_accuracy", 0.944);
  }
  if (j.contains("linear_eq")) {
    const json& l = j["linear_eq"];
    cfg.linear_eq.learning_rate = l.value("learning_rate", 0.05);
    cfg.linear_eq.epochs = l.value("epochs", 60);
    cfg.linear_eq.batch_size = l.value("batch_size", 64);
    cfg.linear_eq.seed = l.value("seed", uint64_t{0});
    cfg.linear_eq.hidden_width = l.value("hidden_width", 0);
  }
  cfg.normalize_tx_power = j.value("normalize_tx_power", true);
  cfg.threads = j.value("threads", 0);
  cfg.out_dir = j.value("out_dir", std::string());
  return cfg;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string ExperimentConfig::to_json() const {
  json j;
  j["source_language"] = spec_to_json(source_spec);
  j["target_language"] = spec_to_json(target_spec);
  j["source_seed"] = source_seed;
  j["target_seed"] = target_seed;
  if (!kmap.table.empty())
    j["kmap"] = json{{"table", kmap.table}, {"target_count", kmap.target_count}};
  j["p1"] = json{{"alpha", build.p1.alpha},
                 {"beta", build.p1.beta},
                 {"radius", build.p1.radius},
                 {"max_outer_iters", build.p1.max_outer_iters},
                 {"max_fw_iters", build.p1.max_fw_iters},
                 {"tol", build.p1.tol}};
  j["auto_alpha"] = build.auto_alpha;
  j["samples_per_source_atom"] = build.samples_per_source_atom;
  j["samples_per_target_atom"] = build.samples_per_target_atom;
  j["seed"] = seed;
  j["rho_eval_samples"] = rho_eval_samples;
  json snr = json::array();
  for (double v : snr_grid_db) {
    if (std::isinf(v)) snr.push_back("inf");
    else snr.push_back(v);
  }
  j["snr_grid_db"] = std::move(snr);
  j["radius_grid"] = radius_grid;
  j["methods"] = methods;
  j["messages_per_point"] = messages_per_point;
  if (!eval_seeds.empty()) j["eval_seeds"] = eval_seeds;
  j["feature_dim"] = feature_dim;
  j["feature_anchor_radius"] = feature_anchor_radius;
  j["feature_noise"] = feature_noise;
  j["classcom"] = json{{"qam_order", classcom.modem.qam_order},
                       {"bits_per_value", classcom.modem.bits_per_value},
                       {"clip_lo", classcom.modem.clip_lo},
                       {"clip_hi", classcom.modem.clip_hi},
                       {"digit_accuracy", classcom.digit_accuracy},
                       {"target_accuracy", classcom.target_accuracy}};
  j["linear_eq"] = json{{"learning_rate", linear_eq.learning_rate},
                        {"epochs", linear_eq.epochs},
                        {"batch_size", linear_eq.batch_size},
                        {"seed", linear_eq.seed},
                        {"hidden_width", linear_eq.hidden_width}};
  j["normalize_tx_power"] = normalize_tx_power;
  j["threads"] = threads;
  j["out_dir"] = out_dir;
  return j.dump(2);
}

std::string results_csv_header() {
  return "method,snr_db,radius,accuracy,avg_risk,entropy,symbols_per_message,seed,error";
}

std::string result_row_csv(const ResultRow& row) {
  std::string out = row.method;
  out += ',';
  out += fmt_double(row.snr_db);
  out += ',';
  out += fmt_double(row.radius);
  out += ',';
  out += fmt_double(row.accuracy);
  out += ',';
  out += fmt_double(row.avg_risk);
  out += ',';
  out += fmt_double(row.entropy);
  out += ',';
  out += fmt_double(row.symbols_per_message);
  out += ',';
  out += std::to_string(row.seed);
  out += ',';
  out += csv_escape(row.error);
  return out;
}

void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_results_csv: cannot open " + path);
  out << results_csv_header() << "\n";
  for (const ResultRow& row : rows) out << result_row_csv(row) << "\n";
}

double average_risk(const equalizer::SelectionPolicy& policy,
                    const std::vector<RVec>& posteriors) {
  if (posteriors.empty()) throw std::invalid_argument("average_risk: empty stream");
  double total = 0.0;
  for (const RVec& u : posteriors) total += equalizer::risk(policy, u);
  return total / static_cast<double>(posteriors.size());
}

std::string language_json(const semlang::Language& lang) {
  json j;
  j["n"] = lang.n;
  j["generator_noise_scale"] = lang.generator_noise_scale;
  j["label_names"] = lang.label_names;
  json atoms = json::array();
  for (const semlang::AtomModel& a : lang.atoms) {
    json c = json::array();
    for (Eigen::Index d = 0; d < a.centroid.size(); ++d)
      c.push_back(json::array({a.centroid[d].real(), a.centroid[d].imag()}));
    atoms.push_back(json{{"label", a.label}, {"centroid", std::move(c)}, {"spread", a.spread}});
  }
  j["atoms"] = std::move(atoms);
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// run_experiment
// ---------------------------------------------------------------------------

namespace {

struct SeedBatch {
  std::vector<Message> messages;
  CMat symbols;  // generated source symbols, one row per message
};

struct RadiusArtifacts {
  codebook::Codebook cb;
  codebook::InfoTransferMatrix rho;
  double entropy = 0.0;
  std::string error;  // non-empty if the build failed
};

void parallel_rows(int jobs, int threads, const std::function<void(int)>& fn) {
  int t = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  t = std::max(1, std::min(t, jobs));
  if (t == 1) {
    for (int i = 0; i < jobs; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < t; ++w)
    pool.emplace_back([&]() {
      while (true) {
        const int i = next.fetch_add(1);
        if (i >= jobs) return;
        fn(i);
      }
    });
  for (auto& th : pool) th.join();
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();

  const semlang::Language src = semlang::make_synthetic_language(cfg.source_spec, cfg.source_seed);
  const semlang::Language tgt = semlang::make_synthetic_language(cfg.target_spec, cfg.target_seed);
  semlang::LabelMap kmap = cfg.kmap;
  if (kmap.table.empty()) kmap = semlang::LabelMap::modulo(src.num_atoms(), tgt.num_atoms());
  kmap.validate(src.num_atoms(), tgt.num_atoms());

  const std::vector<std::string> methods = cfg.expanded_methods();
  const std::vector<uint64_t> eval_seeds =
      cfg.eval_seeds.empty() ? std::vector<uint64_t>{cfg.seed} : cfg.eval_seeds;
  const int n = src.n;
  const int np = src.num_atoms();

  const semlang::MessageSource msg_source = semlang::MessageSource::circle(
      np, cfg.feature_dim, cfg.feature_anchor_radius, cfg.feature_noise);

  // Posteriors depend only on the class label.
  std::vector<RVec> posterior_by_label(static_cast<size_t>(np));
  for (int i = 0; i < np; ++i) {
    Message m;
    m.class_label = i;
    posterior_by_label[static_cast<size_t>(i)] = semlang::atom_posterior(src, m);
  }

  const bool needs_codebook =
      std::find(methods.begin(), methods.end(), "codebook_eq") != methods.end() ||
      std::find(methods.begin(), methods.end(), "codebook_eq_post") != methods.end();
  const bool needs_learned =
      std::find(methods.begin(), methods.end(), "learned_linear_eq") != methods.end();
  const bool needs_identity =
      std::find(methods.begin(), methods.end(), "semcom_noeq") != methods.end();

  // Radius-independent artifacts.
  RVec identity_transfer;
  if (needs_identity)
    identity_transfer = codebook::estimate_identity_transfer(
        src, tgt, kmap, cfg.rho_eval_samples, cfg.seed);

  LinearMap learned_map;
  RVec learned_transfer;
  std::string learned_error;
  if (needs_learned) {
    try {
      const int per_atom = cfg.build.samples_per_source_atom;
      CMat train(np * per_atom, n);
      std::vector<int> labels(static_cast<size_t>(np * per_atom));
      for (int i = 0; i < np; ++i) {
        const CMat xs = semlang::sample_atom(src, i, per_atom,
                                             mix_seed(cfg.seed, {kTagLearnedTrain}));
        train.middleRows(i * per_atom, per_atom) = xs;
        for (int k = 0; k < per_atom; ++k)
          labels[static_cast<size_t>(i * per_atom + k)] = i;
      }
      baselines::LinearEqConfig lcfg = cfg.linear_eq;
      lcfg.seed = mix_seed(cfg.seed, {kTagLearnedTrain, 1});
      learned_map = baselines::train_linear_eq(tgt, kmap, train, labels, lcfg).map;

      learned_transfer.resize(np);
      for (int i = 0; i < np; ++i) {
        const CMat eval = semlang::sample_atom(
            src, i, cfg.rho_eval_samples,
            mix_seed(cfg.seed, {hash_tag("codebook.rho_eval"), static_cast<uint64_t>(i)}));
        learned_transfer[i] = codebook::info_transfer(learned_map, eval, tgt, kmap(i));
      }
    } catch (const std::exception& e) {
      learned_error = e.what();
    }
  }

  // Per-seed message batches (identical for every method, SNR and radius).
  std::vector<SeedBatch> batches(eval_seeds.size());
  for (size_t s = 0; s < eval_seeds.size(); ++s) {
    SeedBatch& batch = batches[s];
    batch.messages.reserve(static_cast<size_t>(cfg.messages_per_point));
    batch.symbols.resize(cfg.messages_per_point, n);
    const uint64_t mseed = mix_seed(eval_seeds[s], {kTagMessages});
    const uint64_t gseed = mix_seed(eval_seeds[s], {kTagGenerate});
    for (int t = 0; t < cfg.messages_per_point; ++t) {
      Message m = msg_source.draw(t, mseed);
      batch.symbols.row(t) = semlang::generate(src, m, gseed).transpose();
      batch.messages.push_back(std::move(m));
    }
  }

  std::vector<ResultRow> rows;

  for (double radius : cfg.radius_grid) {
    RadiusArtifacts art;
    if (needs_codebook) {
      try {
        codebook::BuildOptions opt = cfg.build;
        opt.p1.radius = radius;
        opt.threads = cfg.threads;
        art.cb = codebook::build_codebook(src, tgt, kmap, opt, cfg.seed);
        art.rho = codebook::estimate_rho_matrix(art.cb, src, tgt, cfg.rho_eval_samples,
                                                cfg.seed, cfg.threads);
        art.entropy = codebook::codebook_entropy(art.rho);
      } catch (const std::exception& e) {
        art.error = e.what();
      }
    }

    struct RowJob {
      int method_idx, snr_idx, seed_idx;
    };
    std::vector<RowJob> jobs;
    for (size_t mi = 0; mi < methods.size(); ++mi)
      for (size_t si = 0; si < cfg.snr_grid_db.size(); ++si)
        for (size_t ei = 0; ei < eval_seeds.size(); ++ei)
          jobs.push_back(RowJob{static_cast<int>(mi), static_cast<int>(si),
                                static_cast<int>(ei)});
    std::vector<ResultRow> radius_rows(jobs.size());

    parallel_rows(static_cast<int>(jobs.size()), cfg.threads, [&](int job_idx) {
      const RowJob& job = jobs[static_cast<size_t>(job_idx)];
      const std::string& method = methods[static_cast<size_t>(job.method_idx)];
      const double snr_db = cfg.snr_grid_db[static_cast<size_t>(job.snr_idx)];
      const uint64_t eval_seed = eval_seeds[static_cast<size_t>(job.seed_idx)];
      const SeedBatch& batch = batches[static_cast<size_t>(job.seed_idx)];
      const double sigma2 = std::isinf(snr_db) ? 0.0 : std::pow(10.0, -snr_db / 10.0);

      ResultRow row;
      row.method = method;
      row.snr_db = snr_db;
      row.radius = radius;
      row.seed = eval_seed;
      row.entropy = art.entropy;
      row.accuracy = kNaN;
      row.avg_risk = kNaN;

      const bool is_classcom = method == "classcom_a" || method == "classcom_b";
      const bool uses_codebook = method == "codebook_eq" || method == "codebook_eq_post";
      row.symbols_per_message =
          is_classcom ? cfg.classcom.modem.symbols_per_message(cfg.feature_dim)
                      : static_cast<double>(n);

      try {
        if (uses_codebook && !art.error.empty())
          throw std::runtime_error("codebook build failed: " + art.error);
        if (method == "learned_linear_eq" && !learned_error.empty())
          throw std::runtime_error("training failed: " + learned_error);

        const int m_count = cfg.messages_per_point;
        long correct = 0;

        if (is_classcom) {
          const baselines::ClassComVariant variant = method == "classcom_a"
                                                         ? baselines::ClassComVariant::A
                                                         : baselines::ClassComVariant::B;
          const uint64_t method_tag = hash_tag(method);
          for (int t = 0; t < m_count; ++t) {
            RngStream noise(mix_seed(eval_seed, {kTagNoise, static_cast<uint64_t>(t)}));
            RngStream confusion(mix_seed(
                eval_seed, {kTagConfusion, method_tag, static_cast<uint64_t>(t)}));
            const Message& m = batch.messages[static_cast<size_t>(t)];
            const int pred = baselines::run_classcom(variant, m, msg_source, kmap,
                                                     cfg.classcom, sigma2, noise,
                                                     confusion);
            if (pred == kmap(m.class_label)) ++correct;
          }
          row.accuracy = static_cast<double>(correct) / m_count;
          row.avg_risk = kNaN;  // Eq. 11 is undefined without a codebook policy
        } else {
          // semantic pipeline: [transform] -> normalize -> AWGN -> [post] -> interpret
          CMat tx(m_count, n);
          if (method == "codebook_eq") {
            for (int t = 0; t < m_count; ++t) {
              const Message& m = batch.messages[static_cast<size_t>(t)];
              const RVec& u = posterior_by_label[static_cast<size_t>(m.class_label)];
              const int k = equalizer::select_transformation(art.rho.rho, u);
              tx.row(t) = art.cb.maps[static_cast<size_t>(k)]
                              .apply(batch.symbols.row(t).transpose())
                              .transpose();
            }
          } else if (method == "learned_linear_eq") {
            tx = learned_map.apply_rows(batch.symbols);
          } else {  // semcom_noeq, codebook_eq_post transmit the raw symbol
            tx = batch.symbols;
          }
          if (cfg.normalize_tx_power) tx = channel::normalize_power(tx);

          for (int t = 0; t < m_count; ++t) {
            RngStream noise(mix_seed(eval_seed, {kTagNoise, static_cast<uint64_t>(t)}));
            CVec received =
                channel::awgn_with_stream(tx.row(t).transpose(), sigma2, noise);
            if (method == "codebook_eq_post")
              received = equalizer::post_equalize(art.cb, art.rho.rho, received, src);
            const int pred = semlang::interpret(tgt, received);
            if (pred == kmap(batch.messages[static_cast<size_t>(t)].class_label))
              ++correct;
          }
          row.accuracy = static_cast<double>(correct) / m_count;

          // a-priori risk of the policy this method implements
          equalizer::SelectionPolicy policy;
          if (uses_codebook) {
            policy = equalizer::SelectionPolicy::bayes(art.rho.rho);
          } else if (method == "semcom_noeq") {
            policy = equalizer::SelectionPolicy::identity(identity_transfer);
          } else {  // learned_linear_eq: single fixed map with its own transfer profile
            policy = equalizer::SelectionPolicy::identity(learned_transfer);
          }
          double risk_total = 0.0;
          for (int t = 0; t < m_count; ++t)
            risk_total += equalizer::risk(
                policy,
                posterior_by_label[static_cast<size_t>(
                    batch.messages[static_cast<size_t>(t)].class_label)]);
          row.avg_risk = risk_total / m_count;
        }
      } catch (const std::exception& e) {
        row.error = e.what();
        row.accuracy = kNaN;
        row.avg_risk = kNaN;
      }
      radius_rows[static_cast<size_t>(job_idx)] = std::move(row);
    });

    for (ResultRow& row : radius_rows) rows.push_back(std::move(row));
  }

  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    write_results_csv((std::filesystem::path(cfg.out_dir) / "results.csv").string(), rows);
  }
  return rows;
}

}  // namespace semeq::harness

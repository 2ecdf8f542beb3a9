#include "semeq/codebook.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "semeq/rng.hpp"

namespace semeq::codebook {

namespace {

using nlohmann::json;

const uint64_t kTagBuildSource = hash_tag("codebook.build.source");
const uint64_t kTagBuildTarget = hash_tag("codebook.build.target");
const uint64_t kTagRhoEval = hash_tag("codebook.rho_eval");

int resolve_threads(int requested, int jobs) {
  int t = requested > 0 ? requested
                        : static_cast<int>(std::thread::hardware_concurrency());
  if (t < 1) t = 1;
  return std::min(t, jobs);
}

// Runs fn(i) for i in [0, jobs) across worker threads; exceptions are
// captured and rethrown (first by index) so a failing atom pair is reported
// deterministically.
void parallel_for(int jobs, int threads, const std::function<void(int)>& fn) {
  threads = resolve_threads(threads, jobs);
  if (threads <= 1) {
    for (int i = 0; i < jobs; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<size_t>(jobs));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(threads));
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&]() {
      while (true) {
        const int i = next.fetch_add(1);
        if (i >= jobs) return;
        try {
          fn(i);
        } catch (...) {
          errors[static_cast<size_t>(i)] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

json complex_pair(const Complex& z) { return json::array({z.real(), z.imag()}); }

Complex parse_complex_pair(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw std::runtime_error(std::string("load_codebook: malformed ") + what);
  return Complex(j[0].get<double>(), j[1].get<double>());
}

}  // namespace

void Codebook::validate() const {
  if (n < 1) throw std::invalid_argument("Codebook: dimension must be >= 1");
  if (maps.empty()) throw std::invalid_argument("Codebook: no maps");
  if (static_cast<int>(kmap.table.size()) != size())
    throw std::invalid_argument("Codebook: kmap must cover every source atom");
  for (const LinearMap& m : maps) {
    if (m.A.rows() != n || m.A.cols() != n || m.b.size() != n)
      throw std::invalid_argument("Codebook: map dimension mismatch");
    if (!m.is_finite()) throw std::invalid_argument("Codebook: non-finite map");
  }
}

void InfoTransferMatrix::validate() const {
  if (rho.rows() != rho.cols())
    throw std::invalid_argument("InfoTransferMatrix: must be square");
  if (!all_finite(rho)) throw std::invalid_argument("InfoTransferMatrix: non-finite entry");
  if ((rho.array() < -1e-12).any() || (rho.array() > 1.0 + 1e-12).any())
    throw std::invalid_argument("InfoTransferMatrix: entries must lie in [0, 1]");
}

double info_transfer(const LinearMap& T, const CMat& source_samples,
                     const Language& target_lang, int target_atom) {
  if (source_samples.rows() < 1)
    throw std::invalid_argument("info_transfer: empty sample set");
  if (target_atom < 0 || target_atom >= target_lang.num_atoms())
    throw std::invalid_argument("info_transfer: target atom out of range");
  const CMat mapped = T.apply_rows(source_samples);
  long hits = 0;
  for (int k = 0; k < mapped.rows(); ++k)
    if (semlang::interpret(target_lang, mapped.row(k).transpose()) == target_atom)
      ++hits;
  return static_cast<double>(hits) / static_cast<double>(mapped.rows());
}

double language_mismatch(const LinearMap& T, const Language& source_lang,
                         const Language& target_lang, const LabelMap& kmap,
                         const std::vector<CMat>& samples_per_atom) {
  kmap.validate(source_lang.num_atoms(), target_lang.num_atoms());
  if (static_cast<int>(samples_per_atom.size()) != source_lang.num_atoms())
    throw std::invalid_argument("language_mismatch: samples must cover every source atom");
  double total = 0.0;
  for (int i = 0; i < source_lang.num_atoms(); ++i) {
    const CMat& samples = samples_per_atom[static_cast<size_t>(i)];
    if (samples.rows() < 1)
      throw std::invalid_argument("language_mismatch: atom " + std::to_string(i) +
                                  " has zero samples");
    total += info_transfer(T, samples, target_lang, kmap(i));
  }
  return total;
}

Codebook build_codebook(const Language& source_lang, const Language& target_lang,
                        const LabelMap& kmap, const BuildOptions& opt, uint64_t seed,
                        std::vector<ot::P1Trace>* traces) {
  source_lang.validate();
  target_lang.validate();
  kmap.validate(source_lang.num_atoms(), target_lang.num_atoms());
  if (source_lang.n != target_lang.n)
    throw std::invalid_argument("build_codebook: language dimension mismatch");
  const int n = source_lang.n;
  const int np = source_lang.num_atoms();
  if (opt.samples_per_source_atom < n + 1 || opt.samples_per_target_atom < n + 1)
    throw std::invalid_argument("build_codebook: need at least n+1 samples per atom");

  // Target draws are keyed by target atom, so atoms sharing kappa(i) reuse
  // the same sample set.
  std::vector<CMat> target_samples(static_cast<size_t>(target_lang.num_atoms()));
  for (int j = 0; j < target_lang.num_atoms(); ++j)
    target_samples[static_cast<size_t>(j)] =
        semlang::sample_atom(target_lang, j, opt.samples_per_target_atom,
                             mix_seed(seed, {kTagBuildTarget, static_cast<uint64_t>(j)}));

  // beta's reference default does not depend on the pair; alpha's does
  // (max(D) varies), so alpha stays per-pair under auto_alpha.
  const double beta_eff =
      opt.p1.beta > 0.0
          ? opt.p1.beta
          : ot::default_p1_config(n, opt.samples_per_source_atom, 1.0).beta;

  Codebook cb;
  cb.n = n;
  cb.kmap = kmap;
  cb.maps.resize(static_cast<size_t>(np));
  cb.meta.radius = opt.p1.radius;
  cb.meta.alpha = opt.auto_alpha ? 0.0 : opt.p1.alpha;
  cb.meta.beta = beta_eff;
  cb.meta.auto_alpha = opt.auto_alpha;
  cb.meta.samples_per_source_atom = opt.samples_per_source_atom;
  cb.meta.samples_per_target_atom = opt.samples_per_target_atom;
  cb.meta.tol = opt.p1.tol;
  cb.meta.max_outer_iters = opt.p1.max_outer_iters;
  cb.meta.max_fw_iters = opt.p1.max_fw_iters;
  cb.meta.seed = seed;

  if (traces) traces->assign(static_cast<size_t>(np), ot::P1Trace{});

  parallel_for(np, opt.threads, [&](int i) {
    try {
      const int j = kmap(i);
      ot::SampleSet X = ot::SampleSet::uniform(semlang::sample_atom(
          source_lang, i, opt.samples_per_source_atom,
          mix_seed(seed, {kTagBuildSource, static_cast<uint64_t>(i)})));
      ot::SampleSet Y =
          ot::SampleSet::uniform(target_samples[static_cast<size_t>(j)]);

      ot::P1Config cfg = opt.p1;
      cfg.beta = beta_eff;
      if (opt.auto_alpha || !(cfg.alpha > 0.0)) {
        const double max_d = ot::cost_matrix(X, Y).maxCoeff();
        cfg.alpha = ot::default_p1_config(n, X.size(), max_d).alpha;
      }

      ot::P1Result res = ot::solve_p1(X, Y, cfg);
      cb.maps[static_cast<size_t>(i)] = std::move(res.map);
      if (traces) (*traces)[static_cast<size_t>(i)] = std::move(res.trace);
    } catch (const std::exception& e) {
      throw std::runtime_error("build_codebook: atom pair (" + std::to_string(i) +
                               " -> " + std::to_string(kmap(i)) + "): " + e.what());
    }
  });

  cb.validate();
  return cb;
}

InfoTransferMatrix estimate_rho_matrix(const Codebook& cb, const Language& source_lang,
                                       const Language& target_lang,
                                       int eval_samples_per_atom, uint64_t seed,
                                       int threads) {
  cb.validate();
  if (eval_samples_per_atom < 1)
    throw std::invalid_argument("estimate_rho_matrix: need at least one sample per atom");
  const int np = cb.size();
  InfoTransferMatrix out;
  out.rho.resize(np, np);
  parallel_for(np, threads, [&](int i) {
    const CMat samples = semlang::sample_atom(
        source_lang, i, eval_samples_per_atom,
        mix_seed(seed, {kTagRhoEval, static_cast<uint64_t>(i)}));
    const int j = cb.kmap(i);
    for (int k = 0; k < np; ++k)
      out.rho(i, k) =
          info_transfer(cb.maps[static_cast<size_t>(k)], samples, target_lang, j);
  });
  out.validate();
  return out;
}

RVec estimate_identity_transfer(const Language& source_lang, const Language& target_lang,
                                const LabelMap& kmap, int eval_samples_per_atom,
                                uint64_t seed) {
  kmap.validate(source_lang.num_atoms(), target_lang.num_atoms());
  const int np = source_lang.num_atoms();
  const LinearMap id = LinearMap::identity(source_lang.n);
  RVec out(np);
  for (int i = 0; i < np; ++i) {
    const CMat samples = semlang::sample_atom(
        source_lang, i, eval_samples_per_atom,
        mix_seed(seed, {kTagRhoEval, static_cast<uint64_t>(i)}));
    out[i] = info_transfer(id, samples, target_lang, kmap(i));
  }
  return out;
}

double codebook_entropy(const InfoTransferMatrix& rho, LogBase base) {
  rho.validate();
  const int np = static_cast<int>(rho.rho.rows());
  auto term = [](double p) {
    if (p <= 0.0 || p >= 1.0) return 0.0;  // 0 log 0 = 0
    return p * std::log(p) + (1.0 - p) * std::log(1.0 - p);
  };
  double h = 0.0;
  for (int i = 0; i < np; ++i) h -= term(std::clamp(rho.rho(i, i), 0.0, 1.0));
  h /= static_cast<double>(np);
  if (base == LogBase::Two) h /= std::log(2.0);
  return h;
}

// --------------------------------------------------------------------------
// Serialization
// --------------------------------------------------------------------------

namespace {
constexpr int kCodebookVersion = 1;
}

void save_codebook(const Codebook& cb, const std::string& path,
                   const InfoTransferMatrix* rho) {
  cb.validate();
  json j;
  j["version"] = kCodebookVersion;
  j["n"] = cb.n;
  j["N_P"] = cb.size();
  j["kmap"] = json{{"table", cb.kmap.table}, {"target_count", cb.kmap.target_count}};
  j["build_metadata"] = json{{"radius", cb.meta.radius},
                             {"alpha", cb.meta.alpha},
                             {"beta", cb.meta.beta},
                             {"auto_alpha", cb.meta.auto_alpha},
                             {"samples_per_source_atom", cb.meta.samples_per_source_atom},
                             {"samples_per_target_atom", cb.meta.samples_per_target_atom},
                             {"tol", cb.meta.tol},
                             {"max_outer_iters", cb.meta.max_outer_iters},
                             {"max_fw_iters", cb.meta.max_fw_iters},
                             {"seed", cb.meta.seed}};
  json maps = json::array();
  for (int i = 0; i < cb.size(); ++i) {
    const LinearMap& m = cb.maps[static_cast<size_t>(i)];
    json a = json::array();
    for (int r = 0; r < cb.n; ++r)
      for (int c = 0; c < cb.n; ++c) a.push_back(complex_pair(m.A(r, c)));
    json b = json::array();
    for (int d = 0; d < cb.n; ++d) b.push_back(complex_pair(m.b[d]));
    maps.push_back(json{{"source_atom", i},
                        {"target_atom", cb.kmap(i)},
                        {"A", std::move(a)},
                        {"b", std::move(b)}});
  }
  j["maps"] = std::move(maps);
  if (rho) {
    rho->validate();
    json rows = json::array();
    for (int i = 0; i < rho->rho.rows(); ++i) {
      json row = json::array();
      for (int k = 0; k < rho->rho.cols(); ++k) row.push_back(rho->rho(i, k));
      rows.push_back(std::move(row));
    }
    j["rho"] = std::move(rows);
  }

  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_codebook: cannot open " + path);
  out << j.dump(2) << "\n";
}

Codebook load_codebook(const std::string& path, InfoTransferMatrix* rho_out,
                       int expected_n) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_codebook: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("load_codebook: malformed JSON: ") + e.what());
  }

  if (!j.contains("version") || !j["version"].is_number_integer())
    throw std::runtime_error("load_codebook: missing version");
  if (j["version"].get<int>() != kCodebookVersion)
    throw std::runtime_error("load_codebook: unsupported version " +
                             std::to_string(j["version"].get<int>()));

  Codebook cb;
  cb.n = j.at("n").get<int>();
  if (cb.n < 1) throw std::runtime_error("load_codebook: invalid dimension");
  if (expected_n > 0 && cb.n != expected_n)
    throw std::runtime_error("load_codebook: dimension mismatch (file n=" +
                             std::to_string(cb.n) + ", expected " +
                             std::to_string(expected_n) + ")");
  const int np = j.at("N_P").get<int>();

  const json& km = j.at("kmap");
  cb.kmap.table = km.at("table").get<std::vector<int>>();
  cb.kmap.target_count = km.at("target_count").get<int>();

  if (j.contains("build_metadata")) {
    const json& meta = j["build_metadata"];
    cb.meta.radius = meta.value("radius", 1.0);
    cb.meta.alpha = meta.value("alpha", 0.0);
    cb.meta.beta = meta.value("beta", 0.0);
    cb.meta.auto_alpha = meta.value("auto_alpha", true);
    cb.meta.samples_per_source_atom = meta.value("samples_per_source_atom", 0);
    cb.meta.samples_per_target_atom = meta.value("samples_per_target_atom", 0);
    cb.meta.tol = meta.value("tol", 1e-6);
    cb.meta.max_outer_iters = meta.value("max_outer_iters", 50);
    cb.meta.max_fw_iters = meta.value("max_fw_iters", 20);
    cb.meta.seed = meta.value("seed", uint64_t{0});
  }

  const json& maps = j.at("maps");
  if (!maps.is_array() || static_cast<int>(maps.size()) != np)
    throw std::runtime_error("load_codebook: |maps| does not match declared N_P");
  for (const json& jm : maps) {
    const json& a = jm.at("A");
    const json& b = jm.at("b");
    if (static_cast<int>(a.size()) != cb.n * cb.n)
      throw std::runtime_error("load_codebook: map A has wrong dimension for n=" +
                               std::to_string(cb.n));
    if (static_cast<int>(b.size()) != cb.n)
      throw std::runtime_error("load_codebook: map b has wrong dimension for n=" +
                               std::to_string(cb.n));
    LinearMap m;
    m.A.resize(cb.n, cb.n);
    m.b.resize(cb.n);
    int idx = 0;
    for (int r = 0; r < cb.n; ++r)
      for (int c = 0; c < cb.n; ++c) m.A(r, c) = parse_complex_pair(a[idx++], "A entry");
    for (int d = 0; d < cb.n; ++d) m.b[d] = parse_complex_pair(b[d], "b entry");
    cb.maps.push_back(std::move(m));
  }

  if (rho_out) {
    if (j.contains("rho")) {
      const json& rows = j["rho"];
      rho_out->rho.resize(static_cast<Eigen::Index>(rows.size()),
                          static_cast<Eigen::Index>(rows.size()));
      for (size_t i = 0; i < rows.size(); ++i) {
        if (static_cast<size_t>(rows[i].size()) != rows.size())
          throw std::runtime_error("load_codebook: rho is not square");
        for (size_t k = 0; k < rows.size(); ++k)
          rho_out->rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
              rows[i][k].get<double>();
      }
      rho_out->validate();
    } else {
      rho_out->rho.resize(0, 0);
    }
  }

  cb.validate();
  return cb;
}

}  // namespace semeq::codebook

#include "semeq/semlang.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "semeq/rng.hpp"

namespace semeq::semlang {

namespace {

constexpr double kPi = 3.14159265358979323846;

const uint64_t kTagGenerate = hash_tag("semlang.generate");
const uint64_t kTagAtomSample = hash_tag("semlang.sample_atom");
const uint64_t kTagLayout = hash_tag("semlang.layout");
const uint64_t kTagMessage = hash_tag("semlang.message");

CVec gaussian_cvec(int n, double std_per_real_coord, RngStream& rng) {
  CVec out(n);
  for (int d = 0; d < n; ++d) {
    const double re = rng.next_gaussian() * std_per_real_coord;
    const double im = rng.next_gaussian() * std_per_real_coord;
    out[d] = Complex(re, im);
  }
  return out;
}

// Random unitary via QR of a complex Gaussian matrix (Haar up to phases).
CMat random_unitary(int n, uint64_t seed) {
  RngStream rng(mix_seed(seed, {kTagLayout}));
  CMat g(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      g(r, c) = Complex(rng.next_gaussian(), rng.next_gaussian());
  Eigen::HouseholderQR<CMat> qr(g);
  CMat q = qr.householderQ();
  return q;
}

}  // namespace

void Language::validate() const {
  if (n < 1) throw std::invalid_argument("Language: dimension must be >= 1");
  if (atoms.empty()) throw std::invalid_argument("Language: needs at least one atom");
  for (int i = 0; i < num_atoms(); ++i) {
    const AtomModel& a = atoms[i];
    if (a.label != i)
      throw std::invalid_argument("Language: atom labels must equal their index");
    if (a.centroid.size() != n)
      throw std::invalid_argument("Language: centroid dimension mismatch");
    if (!all_finite(a.centroid))
      throw std::invalid_argument("Language: non-finite centroid");
    if (!(a.spread >= 0.0) || !std::isfinite(a.spread))
      throw std::invalid_argument("Language: atom spread must be finite and >= 0");
  }
  if (!(generator_noise_scale >= 0.0))
    throw std::invalid_argument("Language: generator_noise_scale must be >= 0");
}

int LabelMap::operator()(int i) const {
  if (i < 0 || i >= source_count())
    throw std::out_of_range("LabelMap: source atom index out of range");
  return table[static_cast<size_t>(i)];
}

void LabelMap::validate(int source_atoms, int target_atoms) const {
  if (source_count() != source_atoms)
    throw std::invalid_argument("LabelMap: table must cover every source atom");
  if (target_count != target_atoms)
    throw std::invalid_argument("LabelMap: target_count mismatch");
  for (int t : table)
    if (t < 0 || t >= target_atoms)
      throw std::invalid_argument("LabelMap: target atom index out of range");
}

LabelMap LabelMap::modulo(int source_atoms, int target_atoms) {
  if (source_atoms < 1 || target_atoms < 1)
    throw std::invalid_argument("LabelMap::modulo: atom counts must be >= 1");
  LabelMap km;
  km.target_count = target_atoms;
  km.table.resize(static_cast<size_t>(source_atoms));
  for (int i = 0; i < source_atoms; ++i) km.table[static_cast<size_t>(i)] = i % target_atoms;
  return km;
}

Language make_synthetic_language(const LanguageSpec& spec, uint64_t seed) {
  if (spec.atom_count < 1)
    throw std::invalid_argument("LanguageSpec: atom count must be >= 1");
  if (spec.n < 1) throw std::invalid_argument("LanguageSpec: dimension must be >= 1");
  if (!(spec.spread > 0.0))
    throw std::invalid_argument("LanguageSpec: spread must be > 0");

  std::vector<CVec> centroids;
  centroids.reserve(static_cast<size_t>(spec.atom_count));

  switch (spec.layout) {
    case CentroidLayout::Circle: {
      if (spec.circle_axis < 0 || spec.circle_axis >= spec.n)
        throw std::invalid_argument("LanguageSpec: circle_axis out of range");
      for (int i = 0; i < spec.atom_count; ++i) {
        const double ang = kPi / 180.0 * spec.phase_deg + 2.0 * kPi * i / spec.atom_count;
        CVec c = CVec::Zero(spec.n);
        c[spec.circle_axis] = spec.circle_radius * Complex(std::cos(ang), std::sin(ang));
        centroids.push_back(std::move(c));
      }
      break;
    }
    case CentroidLayout::GroupedModulo: {
      if (spec.group_count < 1 || spec.group_count > spec.atom_count)
        throw std::invalid_argument("LanguageSpec: group_count out of range");
      if (spec.group_axis < 0 || spec.group_axis >= spec.n ||
          spec.circle_axis < 0 || spec.circle_axis >= spec.n)
        throw std::invalid_argument("LanguageSpec: group/circle axis out of range");
      std::vector<int> rank_in_group(static_cast<size_t>(spec.group_count), 0);
      for (int i = 0; i < spec.atom_count; ++i) {
        const int g = i % spec.group_count;
        const int members =
            (spec.atom_count - g + spec.group_count - 1) / spec.group_count;
        const int rank = rank_in_group[static_cast<size_t>(g)]++;
        const double ang = kPi / 180.0 * spec.phase_deg +
                           2.0 * kPi * (rank + 0.5 * g) / std::max(1, members);
        CVec c = CVec::Zero(spec.n);
        c[spec.circle_axis] +=
            spec.within_group_radius * Complex(std::cos(ang), std::sin(ang));
        const double offset =
            (g - 0.5 * (spec.group_count - 1)) * spec.group_separation;
        c[spec.group_axis] += Complex(offset, 0.0);
        centroids.push_back(std::move(c));
      }
      break;
    }
    case CentroidLayout::Explicit: {
      if (static_cast<int>(spec.centroids.size()) != spec.atom_count)
        throw std::invalid_argument("LanguageSpec: explicit centroid count mismatch");
      for (const CVec& c : spec.centroids) {
        if (c.size() != spec.n)
          throw std::invalid_argument("LanguageSpec: explicit centroid dimension mismatch");
        centroids.push_back(c);
      }
      break;
    }
  }

  if (spec.unitary_seed) {
    const CMat u = random_unitary(spec.n, mix_seed(seed, {*spec.unitary_seed}));
    for (CVec& c : centroids) c = u * c;
  }

  Language lang;
  lang.n = spec.n;
  lang.generator_noise_scale = spec.generator_noise_scale;
  lang.atoms.reserve(centroids.size());
  for (int i = 0; i < spec.atom_count; ++i)
    lang.atoms.push_back(AtomModel{i, centroids[static_cast<size_t>(i)], spec.spread});
  lang.label_names = spec.label_names;
  if (lang.label_names.empty()) {
    for (int i = 0; i < spec.atom_count; ++i)
      lang.label_names.push_back(std::to_string(i));
  }
  lang.validate();
  return lang;
}

SemanticSymbol generate(const Language& lang, const Message& m, uint64_t seed) {
  if (m.class_label < 0 || m.class_label >= lang.num_atoms())
    throw std::out_of_range("generate: message label does not index an atom");
  const AtomModel& atom = lang.atoms[static_cast<size_t>(m.class_label)];
  const double s = std::sqrt(atom.spread * atom.spread +
                             lang.generator_noise_scale * lang.generator_noise_scale);
  if (s == 0.0) return atom.centroid;
  RngStream rng(mix_seed(seed, {kTagGenerate, static_cast<uint64_t>(m.id),
                                static_cast<uint64_t>(m.class_label)}));
  return atom.centroid + gaussian_cvec(lang.n, s, rng);
}

CMat sample_atom(const Language& lang, int atom, int count, uint64_t seed) {
  if (atom < 0 || atom >= lang.num_atoms())
    throw std::out_of_range("sample_atom: atom index out of range");
  if (count < 1) throw std::invalid_argument("sample_atom: count must be >= 1");
  CMat out(count, lang.n);
  const uint64_t base = mix_seed(seed, {kTagAtomSample, static_cast<uint64_t>(atom)});
  for (int k = 0; k < count; ++k) {
    Message m;
    m.class_label = atom;
    m.id = k;
    out.row(k) = generate(lang, m, base).transpose();
  }
  return out;
}

int interpret(const Language& lang, const SemanticSymbol& x) {
  if (x.size() != lang.n)
    throw std::invalid_argument("interpret: symbol dimension mismatch");
  int best = 0;
  double best_d2 = (x - lang.atoms[0].centroid).squaredNorm();
  for (int i = 1; i < lang.num_atoms(); ++i) {
    const double d2 = (x - lang.atoms[static_cast<size_t>(i)].centroid).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return best;
}

RVec atom_posterior_at(const Language& lang, const SemanticSymbol& x) {
  const int np = lang.num_atoms();
  RVec u = RVec::Zero(np);

  bool any_zero_spread = false;
  for (const AtomModel& a : lang.atoms) any_zero_spread |= (a.spread == 0.0);
  if (any_zero_spread) {
    // Deterministic atoms concentrate all density at their centroid; the
    // posterior degenerates to the nearest-centroid cell.
    u[interpret(lang, x)] = 1.0;
    return u;
  }

  // log N(x; c_i, s_i^2 I) over the 2n real coordinates, uniform atom priors
  RVec logp(np);
  for (int i = 0; i < np; ++i) {
    const AtomModel& a = lang.atoms[static_cast<size_t>(i)];
    const double d2 = (x - a.centroid).squaredNorm();
    logp[i] = -d2 / (2.0 * a.spread * a.spread) -
              2.0 * lang.n * std::log(a.spread);
  }
  const double m = logp.maxCoeff();
  RVec w = (logp.array() - m).exp();
  u = w / w.sum();
  return u;
}

RVec atom_posterior(const Language& lang, const Message& m) {
  if (m.class_label < 0 || m.class_label >= lang.num_atoms())
    throw std::out_of_range("atom_posterior: message label out of range");
  const AtomModel& atom = lang.atoms[static_cast<size_t>(m.class_label)];
  if (atom.spread == 0.0) {
    RVec u = RVec::Zero(lang.num_atoms());
    u[m.class_label] = 1.0;
    return u;
  }
  return atom_posterior_at(lang, atom.centroid);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double_field(const std::string& s, const std::string& context) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("load_embeddings: malformed numeric field '" + s +
                             "' in " + context);
  }
}

}  // namespace

LabeledSamples load_embeddings(const std::string& path, int expected_n,
                               const std::vector<std::string>* expected_labels) {
  if (expected_n < 1)
    throw std::invalid_argument("load_embeddings: expected_n must be >= 1");
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_embeddings: cannot open " + path);

  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("load_embeddings: empty file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const size_t expected_cols = 2 + 2 * static_cast<size_t>(expected_n);
  {
    const auto header = split_csv_line(line);
    if (header.size() != expected_cols || header[0] != "id" || header[1] != "label")
      throw std::runtime_error(
          "load_embeddings: header does not match the embedding CSV format for n=" +
          std::to_string(expected_n));
  }

  std::vector<CVec> rows;
  std::vector<std::string> raw_labels;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != expected_cols)
      throw std::runtime_error("load_embeddings: row " + std::to_string(line_no) +
                               " has " + std::to_string(fields.size()) +
                               " columns, expected " + std::to_string(expected_cols));
    const std::string ctx = "row " + std::to_string(line_no);
    CVec sym(expected_n);
    for (int d = 0; d < expected_n; ++d) {
      const double re = parse_double_field(fields[2 + 2 * static_cast<size_t>(d)], ctx);
      const double im = parse_double_field(fields[3 + 2 * static_cast<size_t>(d)], ctx);
      sym[d] = Complex(re, im);
    }
    if (!all_finite(sym))
      throw std::runtime_error("load_embeddings: non-finite value in " + ctx);
    rows.push_back(std::move(sym));
    raw_labels.push_back(fields[1]);
  }
  if (rows.empty()) throw std::runtime_error("load_embeddings: no samples in " + path);

  std::vector<std::string> names;
  if (expected_labels) {
    names = *expected_labels;
  } else {
    names.assign(raw_labels.begin(), raw_labels.end());
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
  }
  std::map<std::string, int> index;
  for (int i = 0; i < static_cast<int>(names.size()); ++i) index[names[static_cast<size_t>(i)]] = i;

  LabeledSamples out;
  out.symbols.resize(static_cast<Eigen::Index>(rows.size()), expected_n);
  out.labels.resize(rows.size());
  for (size_t k = 0; k < rows.size(); ++k) {
    auto it = index.find(raw_labels[k]);
    if (it == index.end())
      throw std::runtime_error("load_embeddings: unknown label '" + raw_labels[k] + "'");
    out.symbols.row(static_cast<Eigen::Index>(k)) = rows[k].transpose();
    out.labels[k] = it->second;
  }
  out.label_names = std::move(names);
  return out;
}

void save_embeddings(const std::string& path, const LabeledSamples& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_embeddings: cannot open " + path);
  out << "id,label";
  for (int d = 0; d < data.dim(); ++d) out << ",re_" << d << ",im_" << d;
  out << "\n";
  for (int k = 0; k < data.size(); ++k) {
    const int lab = data.labels[static_cast<size_t>(k)];
    out << k << ','
        << (lab < static_cast<int>(data.label_names.size())
                ? data.label_names[static_cast<size_t>(lab)]
                : std::to_string(lab));
    for (int d = 0; d < data.dim(); ++d) {
      const Complex v = data.symbols(k, d);
      out << ',' << fmt_double(v.real()) << ',' << fmt_double(v.imag());
    }
    out << "\n";
  }
}

Language fit_language(const LabeledSamples& data, double min_spread) {
  if (data.size() < 1) throw std::invalid_argument("fit_language: empty sample set");
  const int n = data.dim();
  const int num_atoms = static_cast<int>(data.label_names.size());

  Language lang;
  lang.n = n;
  lang.label_names = data.label_names;
  for (int i = 0; i < num_atoms; ++i) {
    std::vector<int> members;
    for (int k = 0; k < data.size(); ++k)
      if (data.labels[static_cast<size_t>(k)] == i) members.push_back(k);
    if (members.empty())
      throw std::invalid_argument("fit_language: atom '" +
                                  data.label_names[static_cast<size_t>(i)] +
                                  "' has no samples");
    CVec centroid = CVec::Zero(n);
    for (int k : members) centroid += data.symbols.row(k).transpose();
    centroid /= static_cast<double>(members.size());

    double ss = 0.0;
    for (int k : members)
      ss += (data.symbols.row(k).transpose() - centroid).squaredNorm();
    // pooled variance per real coordinate (2n real coordinates per sample)
    const double var = ss / (2.0 * n * static_cast<double>(members.size()));
    lang.atoms.push_back(AtomModel{i, std::move(centroid),
                                   std::max(std::sqrt(var), min_spread)});
  }
  lang.validate();
  return lang;
}

Message MessageSource::draw(long id, uint64_t seed) const {
  RngStream rng(mix_seed(seed, {kTagMessage, static_cast<uint64_t>(id)}));
  Message m;
  m.id = id;
  m.class_label = rng.next_int(num_classes());
  m.feature.resize(feature_dim());
  for (int d = 0; d < feature_dim(); ++d)
    m.feature[d] = anchors(m.class_label, d) + feature_noise * rng.next_gaussian();
  return m;
}

int MessageSource::classify(const RVec& feature) const {
  int best = 0;
  double best_d2 = (feature.transpose() - anchors.row(0)).squaredNorm();
  for (int i = 1; i < num_classes(); ++i) {
    const double d2 = (feature.transpose() - anchors.row(i)).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return best;
}

MessageSource MessageSource::circle(int num_classes, int feature_dim, double radius,
                                    double noise) {
  if (num_classes < 1 || feature_dim < 2)
    throw std::invalid_argument("MessageSource::circle: need >= 1 class and >= 2 dims");
  MessageSource src;
  src.feature_noise = noise;
  src.anchors = RMat::Zero(num_classes, feature_dim);
  for (int i = 0; i < num_classes; ++i) {
    const double ang = 2.0 * kPi * i / num_classes;
    src.anchors(i, 0) = radius * std::cos(ang);
    src.anchors(i, 1) = radius * std::sin(ang);
  }
  return src;
}

}  // namespace semeq::semlang

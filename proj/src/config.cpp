#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "crossdiff/error.hpp"
#include "crossdiff/harness.hpp"
#include "format_detail.hpp"

namespace crossdiff {

namespace {

struct KindName {
  ExperimentKind kind;
  const char* name;
};

constexpr KindName kind_names[] = {
    {ExperimentKind::poc_vs_N, "poc_vs_N"},
    {ExperimentKind::nonlocal_to_local, "nonlocal_to_local"},
    {ExperimentKind::same_mobility_check, "same_mobility_check"},
    {ExperimentKind::energy_dissipation, "energy_dissipation"},
    {ExperimentKind::eps_of_N_combined, "eps_of_N_combined"},
    {ExperimentKind::heat_oracle, "heat_oracle"},
};

}  // namespace

std::string to_string(ExperimentKind kind) {
  for (const auto& k : kind_names)
    if (k.kind == kind) return k.name;
  throw ConfigError("unknown experiment kind");
}

ExperimentKind parse_kind(const std::string& name) {
  for (const auto& k : kind_names)
    if (name == k.name) return k.kind;
  throw ConfigError("unknown experiment kind '" + name + "'");
}

void ExperimentSpec::validate() const {
  model.validate();
  grid.validate();
  if (grid.dim != model.dim) throw ConfigError("grid and model dimensions differ");
  if (static_cast<int>(species.size()) != model.n_species)
    throw ConfigError("need one initial density per species");
  if (replicas < 1) throw ConfigError("replicas must be at least 1");
  if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) throw ConfigError("cfl_safety must lie in (0, 1]");
  if (solver_dt < 0.0 || particle_dt < 0.0) throw ConfigError("time steps must be nonnegative");
  if (output_every < 1) throw ConfigError("output_every must be at least 1");
  for (double e : eps_values)
    if (!(e > 0.0)) throw ConfigError("eps_values must be positive");
  switch (kind) {
    case ExperimentKind::poc_vs_N:
      if (n_values.empty()) throw ConfigError("poc_vs_N needs n_values");
      break;
    case ExperimentKind::eps_of_N_combined:
      if (n_values.empty()) throw ConfigError("eps_of_N_combined needs n_values");
      if (model.dim != 1) throw ConfigError("eps_of_N_combined is implemented in one dimension");
      for (std::size_t n : n_values)
        if (n < 3) throw ConfigError("eps_of_N_combined needs N >= 3");
      break;
    case ExperimentKind::nonlocal_to_local:
      if (eps_values.empty()) throw ConfigError("nonlocal_to_local needs eps_values");
      break;
    case ExperimentKind::same_mobility_check:
      for (double b : model.b)
        if (b != model.b.front()) throw ConfigError("same_mobility_check needs equal mobilities");
      break;
    case ExperimentKind::heat_oracle:
      if (particles < 1) throw ConfigError("particles must be at least 1");
      break;
    case ExperimentKind::energy_dissipation:
      break;
  }
  for (std::size_t n : n_values)
    if (n < 1) throw ConfigError("n_values must be positive");
  for (std::size_t i = 1; i < n_values.size(); ++i)
    if (n_values[i] <= n_values[i - 1]) throw ConfigError("n_values must be strictly increasing");
  (void)densities();
}

std::vector<InitialDensity> ExperimentSpec::densities() const {
  std::vector<InitialDensity> out;
  for (const auto& s : species) out.emplace_back(model.dim, grid.box, s);
  return out;
}

SolverConfig ExperimentSpec::solver() const {
  SolverConfig cfg;
  cfg.grid = grid;
  cfg.dt = solver_dt;
  cfg.cfl_safety = cfl_safety;
  cfg.output_every = output_every;
  cfg.reconstruction = reconstruction;
  return cfg;
}

double ExperimentSpec::effective_particle_dt() const {
  return particle_dt > 0.0 ? particle_dt : model.horizon / 100.0;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.push_back({});
  return out;
}

struct Entry {
  std::string value;
  int line = 0;
  bool used = false;
};

struct Section {
  int line = 0;
  std::map<std::string, Entry> entries;
};

class Document {
 public:
  explicit Document(const std::string& text) {
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    Section* current = nullptr;
    while (std::getline(in, raw)) {
      ++lineno;
      const auto hash = raw.find('#');
      const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw ParseError(lineno, "malformed section header");
        const std::string name = trim(line.substr(1, line.size() - 2));
        if (name.empty()) throw ParseError(lineno, "empty section name");
        if (sections_.count(name)) throw ParseError(lineno, "duplicate section [" + name + "]");
        current = &sections_[name];
        current->line = lineno;
        order_.push_back(name);
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ParseError(lineno, "expected 'key = value'");
      if (!current) throw ParseError(lineno, "key outside of any section");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) throw ParseError(lineno, "empty key");
      if (current->entries.count(key)) throw ParseError(lineno, "duplicate key '" + key + "'");
      current->entries[key] = {value, lineno, false};
    }
  }

  const std::vector<std::string>& section_names() const { return order_; }
  bool has(const std::string& section) const { return sections_.count(section) > 0; }
  int section_line(const std::string& section) const {
    auto it = sections_.find(section);
    return it == sections_.end() ? 0 : it->second.line;
  }

  Entry* find(const std::string& section, const std::string& key) {
    auto s = sections_.find(section);
    if (s == sections_.end()) return nullptr;
    auto e = s->second.entries.find(key);
    if (e == s->second.entries.end()) return nullptr;
    e->second.used = true;
    return &e->second;
  }

  Entry& require(const std::string& section, const std::string& key) {
    Entry* e = find(section, key);
    if (!e) throw ParseError(section_line(section), "missing key '" + key + "' in [" + section + "]");
    return *e;
  }

  void reject_unused() const {
    for (const auto& name : order_)
      for (const auto& [key, entry] : sections_.at(name).entries)
        if (!entry.used) throw ParseError(entry.line, "unknown key '" + key + "' in [" + name + "]");
  }

 private:
  std::map<std::string, Section> sections_;
  std::vector<std::string> order_;
};

double to_double(const std::string& token, int line) {
  double v = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (token.empty() || res.ec != std::errc() || res.ptr != token.data() + token.size())
    throw ParseError(line, "expected a number, got '" + token + "'");
  return v;
}

long long to_integer(const std::string& token, int line) {
  long long v = 0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (token.empty() || res.ec != std::errc() || res.ptr != token.data() + token.size())
    throw ParseError(line, "expected an integer, got '" + token + "'");
  return v;
}

std::vector<double> to_doubles(const Entry& e) {
  std::vector<double> out;
  for (const auto& t : split(e.value, ',')) out.push_back(to_double(t, e.line));
  if (out.empty()) throw ParseError(e.line, "expected a list of numbers");
  return out;
}

Point to_point(const std::string& text, int dim, int line) {
  const auto parts = split(text, ',');
  if (static_cast<int>(parts.size()) != dim)
    throw ParseError(line, "expected " + std::to_string(dim) + " coordinate(s), got '" + text + "'");
  Point p{0.0, 0.0};
  for (int a = 0; a < dim; ++a) p[a] = to_double(parts[a], line);
  return p;
}

template <class F>
void with_line(int line, F&& f) {
  try {
    f();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(line, e.what());
  }
}

DensityShape parse_species(Document& doc, const std::string& sec, int dim) {
  const Entry& kind = doc.require(sec, "kind");
  if (kind.value == "gaussian_mixture") {
    GaussianMixture g;
    const Entry& means = doc.require(sec, "means");
    for (const auto& m : split(means.value, ';')) g.means.push_back(to_point(m, dim, means.line));
    const Entry& sds = doc.require(sec, "sds");
    g.sds = to_doubles(sds);
    if (g.sds.size() != g.means.size()) throw ParseError(sds.line, "need one sd per mean");
    if (Entry* w = doc.find(sec, "weights")) {
      g.weights = to_doubles(*w);
      if (g.weights.size() != g.means.size()) throw ParseError(w->line, "need one weight per mean");
    } else {
      g.weights.assign(g.means.size(), 1.0 / static_cast<double>(g.means.size()));
    }
    return g;
  }
  if (kind.value == "smoothed_box" || kind.value == "uniform_box") {
    const Entry& lo = doc.require(sec, "lower");
    const Entry& hi = doc.require(sec, "upper");
    const Point lower = to_point(lo.value, dim, lo.line);
    const Point upper = to_point(hi.value, dim, hi.line);
    if (kind.value == "uniform_box") return UniformBox{lower, upper};
    SmoothedBox b{lower, upper, 0.1};
    if (Entry* r = doc.find(sec, "ramp")) b.ramp = to_double(r->value, r->line);
    return b;
  }
  throw ParseError(kind.line, "unknown density kind '" + kind.value + "'");
}

}  // namespace

ExperimentSpec parse_config(const std::string& text) {
  Document doc(text);
  ExperimentSpec spec;

  std::set<std::string> species_sections;
  for (const auto& name : doc.section_names()) {
    if (name == "experiment" || name == "model" || name == "grid" || name == "solver") continue;
    if (name.rfind("species.", 0) == 0) {
      species_sections.insert(name);
      continue;
    }
    throw ParseError(doc.section_line(name), "unknown section [" + name + "]");
  }

  const Entry& kind = doc.require("experiment", "kind");
  with_line(kind.line, [&] { spec.kind = parse_kind(kind.value); });
  if (Entry* e = doc.find("experiment", "seed")) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(e->value.data(), e->value.data() + e->value.size(), v);
    if (e->value.empty() || res.ec != std::errc() || res.ptr != e->value.data() + e->value.size())
      throw ParseError(e->line, "seed must be an unsigned 64-bit integer");
    spec.seed = v;
  }
  if (Entry* e = doc.find("experiment", "replicas")) {
    spec.replicas = static_cast<int>(to_integer(e->value, e->line));
    if (spec.replicas < 1) throw ParseError(e->line, "replicas must be at least 1");
  }
  if (Entry* e = doc.find("experiment", "n_values")) {
    for (const auto& t : split(e->value, ',')) {
      const long long n = to_integer(t, e->line);
      if (n < 1) throw ParseError(e->line, "n_values must be positive");
      spec.n_values.push_back(static_cast<std::size_t>(n));
    }
  }
  if (Entry* e = doc.find("experiment", "eps_values")) spec.eps_values = to_doubles(*e);
  if (Entry* e = doc.find("experiment", "particle_dt")) spec.particle_dt = to_double(e->value, e->line);
  if (Entry* e = doc.find("experiment", "particles")) {
    const long long n = to_integer(e->value, e->line);
    if (n < 1) throw ParseError(e->line, "particles must be at least 1");
    spec.particles = static_cast<std::size_t>(n);
  }

  ModelParams& m = spec.model;
  if (Entry* e = doc.find("model", "species")) {
    m.n_species = static_cast<int>(to_integer(e->value, e->line));
    if (m.n_species < 1) throw ParseError(e->line, "species must be at least 1");
  } else {
    m.n_species = static_cast<int>(std::max<std::size_t>(species_sections.size(), 1));
  }
  m.a.assign(m.n_species, 1.0);
  m.b.assign(m.n_species, 1.0);
  if (Entry* e = doc.find("model", "dim")) {
    m.dim = static_cast<int>(to_integer(e->value, e->line));
    if (m.dim != 1 && m.dim != 2) throw ParseError(e->line, "dim must be 1 or 2");
  }
  if (Entry* e = doc.find("model", "m")) {
    m.m_exponent = to_double(e->value, e->line);
    if (!(m.m_exponent >= 2.0)) throw ParseError(e->line, "m must satisfy m >= 2");
  }
  auto per_species = [&](const char* key, std::vector<double>& dst, bool allow_zero) {
    if (Entry* e = doc.find("model", key)) {
      dst = to_doubles(*e);
      if (static_cast<int>(dst.size()) != m.n_species)
        throw ParseError(e->line, std::string(key) + " needs one value per species");
      for (double v : dst)
        if (allow_zero ? !(v >= 0.0) : !(v > 0.0))
          throw ParseError(e->line, std::string(key) + (allow_zero ? " must be nonnegative" : " must be positive"));
    }
  };
  per_species("a", m.a, false);
  per_species("b", m.b, true);
  auto positive = [&](const char* section, const char* key, double& dst) {
    if (Entry* e = doc.find(section, key)) {
      dst = to_double(e->value, e->line);
      if (!(dst > 0.0)) throw ParseError(e->line, std::string(key) + " must be positive");
    }
  };
  positive("model", "sigma", m.sigma);
  positive("model", "eps", m.eps);
  positive("model", "horizon", m.horizon);

  spec.grid.dim = m.dim;
  if (Entry* e = doc.find("grid", "cells")) {
    spec.grid.cells = static_cast<int>(to_integer(e->value, e->line));
    if (spec.grid.cells < 16) throw ParseError(e->line, "cells must be at least 16");
  }
  if (Entry* e = doc.find("grid", "box_min")) spec.grid.box.lo = to_double(e->value, e->line);
  if (Entry* e = doc.find("grid", "box_max")) spec.grid.box.hi = to_double(e->value, e->line);
  if (!(spec.grid.box.hi > spec.grid.box.lo))
    throw ParseError(doc.section_line("grid"), "box_max must exceed box_min");

  if (Entry* e = doc.find("solver", "cfl_safety")) {
    spec.cfl_safety = to_double(e->value, e->line);
    if (!(spec.cfl_safety > 0.0 && spec.cfl_safety <= 1.0)) throw ParseError(e->line, "cfl_safety must lie in (0, 1]");
  }
  if (Entry* e = doc.find("solver", "dt")) {
    spec.solver_dt = to_double(e->value, e->line);
    if (!(spec.solver_dt >= 0.0)) throw ParseError(e->line, "dt must be nonnegative (0 selects it from the stability bound)");
  }
  if (Entry* e = doc.find("solver", "output_every")) {
    spec.output_every = static_cast<int>(to_integer(e->value, e->line));
    if (spec.output_every < 1) throw ParseError(e->line, "output_every must be at least 1");
  }
  if (Entry* e = doc.find("solver", "reconstruction")) {
    if (e->value == "minmod")
      spec.reconstruction = Reconstruction::minmod;
    else if (e->value == "first_order")
      spec.reconstruction = Reconstruction::first_order;
    else
      throw ParseError(e->line, "reconstruction must be minmod or first_order");
  }

  for (int k = 1; k <= m.n_species; ++k) {
    const std::string sec = "species." + std::to_string(k);
    if (!doc.has(sec)) throw ParseError(0, "missing section [" + sec + "]");
    spec.species.push_back(parse_species(doc, sec, m.dim));
    species_sections.erase(sec);
    with_line(doc.section_line(sec), [&] { InitialDensity(m.dim, spec.grid.box, spec.species.back()); });
  }
  if (!species_sections.empty())
    throw ParseError(doc.section_line(*species_sections.begin()),
                     "section [" + *species_sections.begin() + "] exceeds the species count");
  doc.reject_unused();
  with_line(0, [&] { spec.validate(); });
  return spec;
}

ExperimentSpec parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

namespace {

using detail::format_double;

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
  return s;
}

std::string point(const Point& p, int dim) {
  std::string s = format_double(p[0]);
  if (dim > 1) s += ", " + format_double(p[1]);
  return s;
}

}  // namespace

std::string serialize(const ExperimentSpec& spec) {
  std::ostringstream out;
  out << "[experiment]\n";
  out << "kind = " << to_string(spec.kind) << '\n';
  out << "seed = " << spec.seed << '\n';
  out << "replicas = " << spec.replicas << '\n';
  if (!spec.n_values.empty()) {
    out << "n_values = ";
    for (std::size_t i = 0; i < spec.n_values.size(); ++i) out << (i ? ", " : "") << spec.n_values[i];
    out << '\n';
  }
  if (!spec.eps_values.empty()) out << "eps_values = " << join(spec.eps_values) << '\n';
  out << "particle_dt = " << format_double(spec.particle_dt) << '\n';
  out << "particles = " << spec.particles << '\n';

  const ModelParams& m = spec.model;
  out << "\n[model]\n";
  out << "species = " << m.n_species << '\n';
  out << "dim = " << m.dim << '\n';
  out << "m = " << format_double(m.m_exponent) << '\n';
  out << "a = " << join(m.a) << '\n';
  out << "b = " << join(m.b) << '\n';
  out << "sigma = " << format_double(m.sigma) << '\n';
  out << "eps = " << format_double(m.eps) << '\n';
  out << "horizon = " << format_double(m.horizon) << '\n';

  out << "\n[grid]\n";
  out << "cells = " << spec.grid.cells << '\n';
  out << "box_min = " << format_double(spec.grid.box.lo) << '\n';
  out << "box_max = " << format_double(spec.grid.box.hi) << '\n';

  out << "\n[solver]\n";
  out << "cfl_safety = " << format_double(spec.cfl_safety) << '\n';
  out << "dt = " << format_double(spec.solver_dt) << '\n';
  out << "output_every = " << spec.output_every << '\n';
  out << "reconstruction = " << (spec.reconstruction == Reconstruction::minmod ? "minmod" : "first_order") << '\n';

  for (std::size_t k = 0; k < spec.species.size(); ++k) {
    out << "\n[species." << k + 1 << "]\n";
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, GaussianMixture>) {
            out << "kind = gaussian_mixture\n";
            out << "weights = " << join(s.weights) << '\n';
            out << "means = ";
            for (std::size_t i = 0; i < s.means.size(); ++i) out << (i ? "; " : "") << point(s.means[i], m.dim);
            out << '\n';
            out << "sds = " << join(s.sds) << '\n';
          } else if constexpr (std::is_same_v<T, SmoothedBox>) {
            out << "kind = smoothed_box\n";
            out << "lower = " << point(s.lower, m.dim) << '\n';
            out << "upper = " << point(s.upper, m.dim) << '\n';
            out << "ramp = " << format_double(s.ramp) << '\n';
          } else {
            out << "kind = uniform_box\n";
            out << "lower = " << point(s.lower, m.dim) << '\n';
            out << "upper = " << point(s.upper, m.dim) << '\n';
          }
        },
        spec.species[k]);
  }
  return out.str();
}

}  // namespace crossdiff

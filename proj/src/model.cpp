#include "hypergibbs/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hypergibbs {

SpinDomain SpinDomain::discrete(int q) {
  if (q < 2) throw ModelError("discrete spin domain needs q >= 2");
  SpinDomain d;
  d.kind_ = Kind::Discrete;
  d.q_ = q;
  return d;
}

SpinDomain SpinDomain::piecewise(std::vector<Interval> cells) {
  if (cells.empty()) throw ModelError("piecewise domain needs at least one cell");
  std::vector<Interval> sorted = cells;
  std::sort(sorted.begin(), sorted.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (!(sorted[i].length() > 0.0)) throw ModelError("piecewise cells must have positive length");
    if (i > 0 && sorted[i].lo < sorted[i - 1].hi) throw ModelError("piecewise cells must be disjoint");
  }
  SpinDomain d;
  d.kind_ = Kind::PiecewiseContinuous;
  d.q_ = static_cast<int>(cells.size());
  d.cells_ = std::move(cells);
  return d;
}

std::size_t SpinDomain::size() const {
  return is_discrete() ? static_cast<std::size_t>(q_) : cells_.size();
}

Interval SpinDomain::cell(std::size_t state) const {
  if (is_discrete()) return {static_cast<double>(state), static_cast<double>(state) + 1.0};
  return cells_[state];
}

void SoftStateParams::validate() const {
  if (!(kappa > 0.0)) throw ModelError("kappa must be positive");
  if (!(rho_min > 0.0) || !(rho_min <= rho_max)) throw ModelError("need 0 < rho_min <= rho_max");
  if (!(j_max > 0.0) || !(j_max <= rho_max)) throw ModelError("need 0 < j_max <= rho_max");
  if (!(alpha >= j_max)) throw ModelError("need alpha >= j_max");
}

double ModelParams::get(const std::string& key, double fallback) const {
  auto it = values.find(key);
  return it == values.end() ? fallback : it->second;
}

std::optional<double> ModelParams::find(const std::string& key) const {
  auto it = values.find(key);
  if (it == values.end()) return std::nullopt;
  return it->second;
}

namespace {

double require(const ModelParams& p, const std::string& model, const std::string& key) {
  auto v = p.find(key);
  if (!v) throw ModelError(model + ": missing parameter '" + key + "'");
  return *v;
}

int require_int(const ModelParams& p, const std::string& model, const std::string& key, double fallback) {
  double v = p.get(key, fallback);
  if (std::floor(v) != v) throw ModelError(model + ": parameter '" + key + "' must be an integer");
  return static_cast<int>(v);
}

void reject_unknown(const ModelParams& p, const std::string& model, std::initializer_list<const char*> known) {
  for (const auto& [key, value] : p.values) {
    bool ok = std::any_of(known.begin(), known.end(), [&](const char* k) { return key == k; });
    if (!ok) throw ModelError(model + ": unknown parameter '" + key + "'");
  }
}

// Discrete omega_h: the union of embedded cells [0, q).
std::vector<Interval> color_support(int q) { return {{0.0, static_cast<double>(q)}}; }

Eigen::VectorXd two_state_h(double h1) {
  Eigen::VectorXd h(2);
  h << 1.0, h1;
  return h;
}

KArray<double> parity_table(int k, double beta, double coupling) {
  KArray<double> j(2, k);
  std::vector<std::size_t> idx(static_cast<std::size_t>(k));
  for (std::size_t f = 0; f < j.size(); ++f) {
    j.unravel(f, idx);
    int prod = 1;
    for (std::size_t c : idx) prod *= to_pm1(c);
    j[f] = std::exp(beta * coupling * prod);
  }
  return j;
}

ModelSpec independent_set(const ModelParams& p) {
  reject_unknown(p, "independent_set", {"lambda"});
  double lambda = require(p, "independent_set", "lambda");
  if (!(lambda > 0.0)) throw ModelError("independent_set: lambda must be positive");
  ModelSpec m;
  m.name = "independent_set";
  m.domain = SpinDomain::discrete(2);
  m.node_pot.law = {{1.0, two_state_h(lambda)}};
  m.node_pot.support = color_support(2);
  KArray<double> j(2, 2, 1.0);
  j[3] = 0.0;
  m.edge_pot = {2, {{1.0, j}}};
  m.soft = {1.0, std::min(lambda, 1.0), 1.0 + lambda, 1.0, color_support(2), 1.0};
  m.params = p;
  return m;
}

ModelSpec potts(const ModelParams& p) {
  reject_unknown(p, "potts", {"q", "beta"});
  int q = require_int(p, "potts", "q", require(p, "potts", "q"));
  double beta = require(p, "potts", "beta");
  if (q < 2) throw ModelError("potts: q must be >= 2");
  if (!(beta >= 0.0)) throw ModelError("potts: beta must be >= 0 (anti-ferromagnetic regime)");
  ModelSpec m;
  m.name = "potts";
  m.domain = SpinDomain::discrete(q);
  m.node_pot.law = {{1.0, Eigen::VectorXd::Ones(q)}};
  m.node_pot.support = color_support(q);
  KArray<double> j(static_cast<std::size_t>(q), 2, 1.0);
  for (int i = 0; i < q; ++i) j[static_cast<std::size_t>(i * q + i)] = std::exp(-beta);
  m.edge_pot = {2, {{1.0, j}}};
  double j_max = std::exp(std::abs(beta));
  double rho_max = std::max(j_max, 1.0 * q);
  m.soft = {static_cast<double>(q - 1), std::min(1.0, std::exp(-std::abs(beta))), rho_max, j_max,
            color_support(q), j_max};
  m.params = p;
  return m;
}

ModelSpec ising(const ModelParams& p) {
  reject_unknown(p, "ising", {"beta", "h"});
  double beta = require(p, "ising", "beta");
  double h = p.get("h", 1.0);
  if (!(h > 0.0)) throw ModelError("ising: h must be positive");
  ModelSpec m;
  m.name = "ising";
  m.domain = SpinDomain::discrete(2);
  m.node_pot.law = {{1.0, two_state_h(h)}};
  m.node_pot.support = color_support(2);
  m.edge_pot = {2, {{1.0, parity_table(2, beta, 1.0)}}};
  double j_max = std::exp(std::abs(beta));
  double rho_max = std::max(j_max, std::max(1.0, h) * 2.0);
  double rho_min = std::min(std::min(1.0, h), std::exp(-std::abs(beta)));
  m.soft = {1.0, rho_min, rho_max, j_max, color_support(2), j_max};
  m.params = p;
  return m;
}

ModelSpec viana_bray_like(const std::string& name, double beta, double h, int k,
                          std::vector<std::pair<double, double>> i_law, const ModelParams& p) {
  if (!(beta > 0.0)) throw ModelError(name + ": beta must be positive");
  if (!(h > 0.0)) throw ModelError(name + ": h must be positive");
  if (k < 2) throw ModelError(name + ": k must be >= 2");
  if (i_law.empty()) i_law = {{-1.0, 0.5}, {1.0, 0.5}};
  double total = 0.0;
  double c_i = 0.0;
  for (auto [value, prob] : i_law) {
    if (!std::isfinite(value)) throw ModelError(name + ": coupling values must be finite");
    if (!(prob > 0.0)) throw ModelError(name + ": coupling probabilities must be positive");
    total += prob;
    c_i = std::max(c_i, std::abs(value));
  }
  if (std::abs(total - 1.0) > 1e-12) throw ModelError(name + ": coupling probabilities must sum to 1");
  // Symmetry around zero: the mass at v equals the mass at -v.
  for (auto [value, prob] : i_law) {
    double mirror = 0.0;
    for (auto [v2, p2] : i_law)
      if (v2 == -value) mirror += p2;
    double self = 0.0;
    for (auto [v2, p2] : i_law)
      if (v2 == value) self += p2;
    if (std::abs(mirror - self) > 1e-12) throw ModelError(name + ": coupling law must be symmetric around zero");
  }
  ModelSpec m;
  m.name = name;
  m.domain = SpinDomain::discrete(2);
  m.node_pot.law = {{1.0, two_state_h(h)}};
  m.node_pot.support = color_support(2);
  m.edge_pot.arity = k;
  for (auto [value, prob] : i_law) m.edge_pot.law.push_back({prob, parity_table(k, beta, value)});
  double j_max = std::max(h, std::exp(beta * c_i));
  double rho_max = std::max(j_max, 2.0 * std::max(1.0, h));
  double rho_min = std::min(std::min(1.0, h), std::exp(-beta * c_i));
  m.soft = {1.0, rho_min, rho_max, j_max, color_support(2), j_max};
  m.params = p;
  m.params.i_law = i_law;
  return m;
}

ModelSpec viana_bray(const ModelParams& p) {
  reject_unknown(p, "viana_bray", {"beta", "h", "k"});
  return viana_bray_like("viana_bray", require(p, "viana_bray", "beta"), p.get("h", 1.0),
                         require_int(p, "viana_bray", "k", 2.0), p.i_law, p);
}

ModelSpec xor_model(const ModelParams& p) {
  reject_unknown(p, "xor", {"beta", "k"});
  if (!p.i_law.empty()) throw ModelError("xor: the coupling law is fixed to +-1");
  return viana_bray_like("xor", require(p, "xor", "beta"), 1.0, require_int(p, "xor", "k", 2.0), {}, p);
}

ModelSpec ksat(const ModelParams& p) {
  reject_unknown(p, "ksat", {"k", "beta"});
  int k = require_int(p, "ksat", "k", require(p, "ksat", "k"));
  double beta = require(p, "ksat", "beta");
  if (k < 2) throw ModelError("ksat: k must be >= 2");
  if (!(beta >= 0.0)) throw ModelError("ksat: beta must be >= 0");
  ModelSpec m;
  m.name = "ksat";
  m.domain = SpinDomain::discrete(2);
  m.node_pot.law = {{1.0, Eigen::VectorXd::Ones(2)}};
  m.node_pot.support = color_support(2);
  m.edge_pot.arity = k;
  // Support index z encodes the violating tuple, coordinate 1 most significant.
  const std::size_t outcomes = std::size_t{1} << k;
  for (std::size_t z = 0; z < outcomes; ++z) {
    KArray<double> j(2, k, 1.0);
    j[z] = std::exp(-beta);
    m.edge_pot.law.push_back({1.0 / static_cast<double>(outcomes), std::move(j)});
  }
  m.soft = {2.0, std::exp(-beta), 2.0, 1.0, color_support(2), 1.0};
  m.params = p;
  return m;
}

ModelSpec gaussian_partition_from_params(const ModelParams& p) {
  reject_unknown(p, "gaussian_partition", {"kappa", "width", "half_width", "cells"});
  double kappa = p.get("kappa", 0.5);
  double width = p.get("width", 1.0);
  double half = p.get("half_width", 6.0);
  int cells = require_int(p, "gaussian_partition", "cells", 512.0);
  if (!(width > 0.0)) throw ModelError("gaussian_partition: width must be positive");
  if (!(kappa > 0.0) || !(kappa < half)) throw ModelError("gaussian_partition: need 0 < kappa < half_width");
  std::vector<KernelClass> classes{{{0.0, kappa}, 0.0}};
  for (double lo = kappa; lo < half; lo += width) classes.push_back({{lo, std::min(lo + width, half)}, 1.0});
  for (double hi = 0.0; hi > -half; hi -= width) classes.push_back({{std::max(hi - width, -half), hi}, 1.0});
  ModelSpec m = build_gaussian_partition(std::move(classes), kappa, half, cells);
  m.params = p;
  return m;
}

}  // namespace

std::vector<std::string> model_names() {
  return {"independent_set", "potts", "ising", "viana_bray", "xor", "ksat", "gaussian_partition"};
}

ModelSpec build_model(const std::string& name, const ModelParams& params) {
  ModelSpec m;
  if (name == "independent_set") m = independent_set(params);
  else if (name == "potts") m = potts(params);
  else if (name == "ising") m = ising(params);
  else if (name == "viana_bray") m = viana_bray(params);
  else if (name == "xor") m = xor_model(params);
  else if (name == "ksat") m = ksat(params);
  else if (name == "gaussian_partition") m = gaussian_partition_from_params(params);
  else throw ModelError("unknown model '" + name + "'");
  m.soft.validate();
  return m;
}

ModelSpec build_gaussian_partition(std::vector<KernelClass> classes, double kappa, double half_width,
                                   int cells) {
  if (cells < 1) throw ModelError("gaussian_partition: need at least one cell");
  if (!(half_width > 0.0)) throw ModelError("gaussian_partition: half_width must be positive");
  for (const auto& c : classes)
    if (c.gamma != 0.0 && c.gamma != 1.0) throw ModelError("gaussian_partition: gamma must be 0 or 1");
  const double step = 2.0 * half_width / cells;
  // Snap kappa down to a cell boundary so [0, kappa) is a union of cells.
  double snapped = std::floor(kappa / step + 1e-9) * step;
  if (!(snapped > 0.0)) throw ModelError("gaussian_partition: kappa is below one cell width");

  std::vector<Interval> grid;
  grid.reserve(static_cast<std::size_t>(cells));
  for (int i = 0; i < cells; ++i) grid.push_back({-half_width + i * step, -half_width + (i + 1) * step});
  const std::size_t n = grid.size();

  ModelSpec m;
  m.name = "gaussian_partition";
  m.domain = SpinDomain::piecewise(grid);

  Eigen::VectorXd h(static_cast<Eigen::Index>(n));
  std::vector<int> cls(n, -1);
  for (std::size_t s = 0; s < n; ++s) {
    double mid = 0.5 * (grid[s].lo + grid[s].hi);
    h[static_cast<Eigen::Index>(s)] = std::exp(-mid * mid);
    for (std::size_t c = 0; c < classes.size(); ++c)
      if (classes[c].set.contains(mid)) {
        cls[s] = static_cast<int>(c);
        break;
      }
  }
  m.node_pot.law = {{1.0, h}};
  m.node_pot.support = {{-half_width, half_width}};

  KArray<double> j(n, 2, 1.0);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      if (cls[a] >= 0 && cls[a] == cls[b]) j[a * n + b] = 1.0 - classes[static_cast<std::size_t>(cls[a])].gamma;
  m.edge_pot = {2, {{1.0, std::move(j)}}};

  double total = 0.0;
  double soft_mass = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    double v = h[static_cast<Eigen::Index>(s)];
    total += v * grid[s].length();
    double overlap = std::max(0.0, std::min(grid[s].hi, snapped) - std::max(grid[s].lo, 0.0));
    soft_mass += v * overlap;
  }
  m.soft = {snapped, std::min(1.0, soft_mass), std::max(1.0, total), 1.0, {{-half_width, half_width}}, 1.0};
  m.params.values = {{"kappa", kappa}, {"half_width", half_width}, {"cells", static_cast<double>(cells)}};
  m.soft.validate();
  return m;
}

std::optional<std::size_t> find_soft_color(const KArray<double>& j) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(j.order()));
  for (std::size_t q0 = 0; q0 < j.dim(); ++q0) {
    bool ok = true;
    for (std::size_t f = 0; f < j.size() && ok; ++f) {
      j.unravel(f, idx);
      if (std::find(idx.begin(), idx.end(), q0) != idx.end() && !(j[f] > 0.0)) ok = false;
    }
    if (ok) return q0;
  }
  return std::nullopt;
}

SoftStateParams soft_params_discrete(const KArray<double>& j, const Eigen::VectorXd& h, std::size_t q0) {
  const std::size_t q = j.dim();
  if (static_cast<std::size_t>(h.size()) != q) throw ModelError("node table size must equal q");
  if (q0 >= q) throw ModelError("soft color out of range");
  std::vector<std::size_t> idx(static_cast<std::size_t>(j.order()));
  double rho_min = h[static_cast<Eigen::Index>(q0)];
  for (std::size_t f = 0; f < j.size(); ++f) {
    j.unravel(f, idx);
    if (std::find(idx.begin(), idx.end(), q0) == idx.end()) continue;
    if (!(j[f] > 0.0)) {
      std::ostringstream msg;
      msg << "color " << q0 << " is not soft: a kernel entry touching it is zero";
      throw ModelError(msg.str());
    }
    rho_min = std::min(rho_min, j[f]);
  }
  if (!(rho_min > 0.0)) throw ModelError("soft color has zero node weight");
  SoftStateParams out;
  out.j_max = j.max_coeff();
  out.rho_max = std::max(out.j_max, static_cast<double>(q) * h.maxCoeff());
  out.rho_min = rho_min;
  out.kappa = 1.0;
  out.omega_h = {{0.0, static_cast<double>(q)}};
  out.alpha = out.j_max;
  return out;
}

ModelSpec embed_discrete(const ModelSpec& model) {
  if (!model.domain.is_discrete()) throw ModelError("embed_discrete needs a discrete model");
  ModelSpec out = model;
  std::vector<Interval> cells;
  for (int i = 0; i < model.domain.q(); ++i) cells.push_back({static_cast<double>(i), static_cast<double>(i + 1)});
  out.domain = SpinDomain::piecewise(std::move(cells));
  return out;
}

SoftStateReport check_soft_state(const ModelSpec& model, double tol) {
  SoftStateReport rep;
  auto fail = [&](std::string msg) {
    rep.ok = false;
    rep.failures.push_back(std::move(msg));
  };
  const auto& soft = model.soft;
  try {
    soft.validate();
  } catch (const ModelError& e) {
    fail(e.what());
  }
  const std::size_t n = model.domain.size();
  // Soft states: cells overlapping [0, kappa) with positive length.
  std::vector<bool> soft_state(n, false);
  std::vector<double> soft_overlap(n, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    Interval c = model.domain.cell(s);
    double overlap = std::max(0.0, std::min(c.hi, soft.kappa) - std::max(c.lo, 0.0));
    soft_overlap[s] = overlap;
    soft_state[s] = overlap > 0.0;
  }
  bool kappa_covered = false;
  for (const auto& w : soft.omega_h)
    if (w.lo <= 0.0 && soft.kappa <= w.hi) kappa_covered = true;
  if (!kappa_covered) fail("[0, kappa) is not contained in omega_h");

  for (std::size_t d = 0; d < model.node_pot.law.size(); ++d) {
    const auto& h = model.node_pot.law[d].value;
    double total = 0.0;
    double soft_mass = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      double v = h[static_cast<Eigen::Index>(s)];
      if (v < 0.0) fail("node table " + std::to_string(d) + " has a negative entry");
      Interval c = model.domain.cell(s);
      bool inside = false;
      for (const auto& w : soft.omega_h)
        if (w.lo <= c.lo && c.hi <= w.hi) inside = true;
      if (!inside && v != 0.0) fail("node table " + std::to_string(d) + " is nonzero outside omega_h");
      total += v * model.domain.weight(s);
      soft_mass += v * soft_overlap[s];
    }
    if (soft_mass < soft.rho_min - tol) fail("node table " + std::to_string(d) + ": soft mass below rho_min");
    if (total > soft.rho_max + tol) fail("node table " + std::to_string(d) + ": total mass above rho_max");
  }

  std::vector<std::size_t> idx(static_cast<std::size_t>(model.arity()));
  for (std::size_t d = 0; d < model.edge_pot.law.size(); ++d) {
    const auto& j = model.edge_pot.law[d].value;
    if (j.min_coeff() < 0.0) fail("edge table " + std::to_string(d) + " has a negative entry");
    if (j.max_coeff() > soft.j_max + tol) fail("edge table " + std::to_string(d) + " exceeds j_max");
    for (std::size_t f = 0; f < j.size(); ++f) {
      j.unravel(f, idx);
      bool touches = std::any_of(idx.begin(), idx.end(), [&](std::size_t s) { return soft_state[s]; });
      if (touches && j[f] < soft.rho_min - tol) {
        fail("edge table " + std::to_string(d) + ": soft entry below rho_min");
        break;
      }
    }
  }
  return rep;
}

namespace {
std::vector<double> probabilities(const auto& law) {
  std::vector<double> p;
  p.reserve(law.size());
  for (const auto& w : law) p.push_back(w.probability);
  return p;
}
}  // namespace

std::size_t draw_edge_potential(const ModelSpec& model, Seed seed, std::size_t edge_index) {
  if (model.edge_pot.law.size() == 1) return 0;
  Rng rng(derive_seed(seed, kTagEdges, edge_index));
  auto p = probabilities(model.edge_pot.law);
  return rng.categorical(p);
}

Potentials draw_potentials(const ModelSpec& model, std::size_t n_nodes, std::size_t n_edges, Seed seed) {
  Potentials out;
  out.node.assign(n_nodes, 0);
  out.edge.assign(n_edges, 0);
  if (model.node_pot.law.size() > 1) {
    auto p = probabilities(model.node_pot.law);
    for (std::size_t u = 0; u < n_nodes; ++u) out.node[u] = Rng(derive_seed(seed, kTagNodes, u)).categorical(p);
  }
  for (std::size_t e = 0; e < n_edges; ++e) out.edge[e] = draw_edge_potential(model, seed, e);
  return out;
}

VianaBrayTerms viana_bray_terms(double beta, double alpha, double coupling) {
  return {alpha - std::cosh(beta * coupling), std::sinh(beta * coupling)};
}

}  // namespace hypergibbs

#include <json.hpp>

namespace hypergibbs {

ModelConfig parse_model_config(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ModelError(std::string("model config is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("model") || !j["model"].is_string())
    throw ModelError("model config needs a string field \"model\"");
  ModelConfig cfg;
  cfg.model = j["model"].get<std::string>();
  if (j.contains("params")) {
    if (!j["params"].is_object()) throw ModelError("\"params\" must be an object");
    for (const auto& [key, value] : j["params"].items()) {
      if (key == "i_law") {
        for (const auto& pair : value) {
          if (!pair.is_array() || pair.size() != 2) throw ModelError("i_law entries are [value, probability]");
          cfg.params.i_law.emplace_back(pair[0].get<double>(), pair[1].get<double>());
        }
      } else {
        if (!value.is_number()) throw ModelError("parameter '" + key + "' must be a number");
        cfg.params.values[key] = value.get<double>();
      }
    }
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer()) throw ModelError("\"seed\" must be an integer");
    cfg.seed = j["seed"].get<Seed>();
  }
  for (const auto& [key, value] : j.items())
    if (key != "model" && key != "params" && key != "seed") throw ModelError("unknown config field '" + key + "'");
  return cfg;
}

std::string model_config_to_json(const ModelConfig& config) {
  nlohmann::ordered_json j;
  j["model"] = config.model;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  for (const auto& [key, value] : config.params.values) params[key] = value;
  if (!config.params.i_law.empty()) {
    auto law = nlohmann::ordered_json::array();
    for (auto [v, p] : config.params.i_law) law.push_back({v, p});
    params["i_law"] = std::move(law);
  }
  j["params"] = std::move(params);
  j["seed"] = config.seed;
  return j.dump();
}

}  // namespace hypergibbs

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hypergibbs/karray.hpp"
#include "hypergibbs/rng.hpp"

namespace hypergibbs {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Half-open real interval [lo, hi).
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
  bool contains(double x) const { return lo <= x && x < hi; }
};

/// Spin values: either q discrete colors or a finite partition of the line into
/// cells over which every potential is constant.
class SpinDomain {
 public:
  enum class Kind { Discrete, PiecewiseContinuous };

  static SpinDomain discrete(int q);
  static SpinDomain piecewise(std::vector<Interval> cells);

  Kind kind() const { return kind_; }
  bool is_discrete() const { return kind_ == Kind::Discrete; }
  /// Number of enumeration states (colors or cells).
  std::size_t size() const;
  int q() const { return q_; }
  const std::vector<Interval>& cells() const { return cells_; }
  /// Quadrature weight of a state: 1 for a color, the cell length for a cell.
  double weight(std::size_t state) const { return is_discrete() ? 1.0 : cells_[state].length(); }
  /// Real-line cell of a state; color i embeds as [i, i+1).
  Interval cell(std::size_t state) const;

 private:
  Kind kind_ = Kind::Discrete;
  int q_ = 0;
  std::vector<Interval> cells_;
};

template <typename T>
struct Weighted {
  double probability = 1.0;
  T value;
};

/// nu_h as a finite-support law over node tables (one h value per state).
struct NodePotentialSpec {
  std::vector<Weighted<Eigen::VectorXd>> law;
  std::vector<Interval> support;  // Omega_h
};

/// nu_J as a finite-support law over order-K tables on the states.
struct EdgePotentialSpec {
  int arity = 2;
  std::vector<Weighted<KArray<double>>> law;
};

struct SoftStateParams {
  double kappa = 1.0;
  double rho_min = 1.0;
  double rho_max = 1.0;
  double j_max = 1.0;
  std::vector<Interval> omega_h;
  double alpha = 1.0;

  void validate() const;
};

/// Parameters accepted by build_model; i_law is a (value, probability) list.
struct ModelParams {
  std::map<std::string, double> values;
  std::vector<std::pair<double, double>> i_law;

  double get(const std::string& key, double fallback) const;
  std::optional<double> find(const std::string& key) const;
};

struct ModelSpec {
  std::string name;
  SpinDomain domain;
  NodePotentialSpec node_pot;
  EdgePotentialSpec edge_pot;
  SoftStateParams soft;
  ModelParams params;

  int arity() const { return edge_pot.arity; }
  bool deterministic() const { return node_pot.law.size() == 1 && edge_pot.law.size() == 1; }
};

/// Names accepted by build_model.
std::vector<std::string> model_names();

/// The model zoo: independent_set, potts, ising, viana_bray, xor, ksat, plus the
/// gaussian_partition continuous kernel.
ModelSpec build_model(const std::string& name, const ModelParams& params);

/// Soft-state parameters of a deterministic discrete kernel with soft color q0.
SoftStateParams soft_params_discrete(const KArray<double>& j, const Eigen::VectorXd& h, std::size_t q0);

/// First color whose every incident kernel entry is positive, if any.
std::optional<std::size_t> find_soft_color(const KArray<double>& j);

/// The piecewise-constant image of a discrete model: color i becomes cell [i, i+1).
ModelSpec embed_discrete(const ModelSpec& model);

/// Outcome of an exhaustive check of the soft-state assumption.
struct SoftStateReport {
  bool ok = true;
  std::vector<std::string> failures;
};
SoftStateReport check_soft_state(const ModelSpec& model, double tol = 1e-12);

/// Support indices into the model's laws: one per node and one per edge.
struct Potentials {
  std::vector<std::size_t> node;
  std::vector<std::size_t> edge;
};

Potentials draw_potentials(const ModelSpec& model, std::size_t n_nodes, std::size_t n_edges, Seed seed);
std::size_t draw_edge_potential(const ModelSpec& model, Seed seed, std::size_t edge_index);

/// Gaussian-kernel model on [-half_width, half_width) split into `cells` cells:
/// h(x) = exp(-x^2) at cell midpoints and J(x, y) = 1 - sum_r gamma_r 1{x, y in A_r}.
struct KernelClass {
  Interval set;
  double gamma = 1.0;  // 0 or 1
};
ModelSpec build_gaussian_partition(std::vector<KernelClass> classes, double kappa,
                                   double half_width = 6.0, int cells = 512);

/// Viana-Bray decomposition alpha - J = f1(I) - f2(I) * prod x_i in +-1 coding.
struct VianaBrayTerms {
  double f1 = 0.0;
  double f2 = 0.0;
};
VianaBrayTerms viana_bray_terms(double beta, double alpha, double coupling);

/// Presentation map for +-1 spins: color 0 -> -1, color 1 -> +1.
inline int to_pm1(std::size_t color) { return 2 * static_cast<int>(color) - 1; }

}  // namespace hypergibbs

namespace hypergibbs {

/// Model configuration file: {"model": name, "params": {...}, "seed": integer}.
/// params holds reals by name, plus an optional "i_law": [[value, probability], ...].
struct ModelConfig {
  std::string model;
  ModelParams params;
  Seed seed = 0;
};

ModelConfig parse_model_config(std::string_view json_text);
std::string model_config_to_json(const ModelConfig& config);

}  // namespace hypergibbs

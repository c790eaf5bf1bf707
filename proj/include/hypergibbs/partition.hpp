#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hypergibbs/hypergraph.hpp"
#include "hypergibbs/log_value.hpp"
#include "hypergibbs/model.hpp"

namespace hypergibbs {

class CapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Default state-space cap for exact enumeration.
inline constexpr double kDefaultStateCap = 16777216.0;  // 2^24

/// A graph with potentials drawn from a model.
class Instance {
 public:
  Instance(std::shared_ptr<const ModelSpec> model, Hypergraph graph, Potentials potentials);
  /// Draws potentials for `graph` from `seed`.
  static Instance sample(std::shared_ptr<const ModelSpec> model, Hypergraph graph, Seed seed);

  const ModelSpec& model() const { return *model_; }
  const std::shared_ptr<const ModelSpec>& model_ptr() const { return model_; }
  const Hypergraph& graph() const { return graph_; }
  const Potentials& potentials() const { return pot_; }

  const Eigen::VectorXd& node_table(std::size_t u) const { return model_->node_pot.law[pot_.node[u]].value; }
  const KArray<double>& edge_table(std::size_t e) const { return model_->edge_pot.law[pot_.edge[e]].value; }

  /// Copy with one more edge carrying edge-law support index `draw`.
  Instance with_edge(std::span<const std::size_t> tuple, std::size_t draw) const;
  /// Copy with node u's potential replaced by node-law support index `draw`.
  Instance with_node_potential(std::size_t u, std::size_t draw) const;
  /// Copy with node u's table replaced by an explicit admissible table.
  Instance with_node_table(std::size_t u, const Eigen::VectorXd& table) const;

  /// Graph plus materialized potential tables.
  std::string to_json() const;

 private:
  std::shared_ptr<const ModelSpec> model_;
  Hypergraph graph_;
  Potentials pot_;
};

/// A spin value per node: a color index, or a cell index for piecewise domains.
using Assignment = std::vector<std::size_t>;

/// log H(sigma), with cell lengths folded in for piecewise domains.
LogValue log_weight(const Instance& instance, std::span<const std::size_t> assignment);

struct ExactOptions {
  double state_cap = kDefaultStateCap;
  unsigned workers = 0;  // 0: HYPERGIBBS_WORKERS or hardware concurrency
};

/// log Z by depth-first enumeration with streaming log-sum-exp; zero factors prune
/// whole subtrees. Throws CapExceeded if |states|^N > cap.
LogValue log_z_exact(const Instance& instance, const ExactOptions& options = {});

struct McEstimate {
  LogValue log_z = LogValue::neg_inf();
  double std_error = 0.0;  // on the log scale (delta method)
  std::size_t samples = 0;
  Seed seed = 0;
  /// Set when every sample had weight zero; then log_z is -inf and
  /// upper_bound_95 is a one-sided 95% bound on log Z.
  bool all_zero = false;
  double upper_bound_95 = 0.0;
};

/// Importance sampling from the product node measure.
McEstimate log_z_mc(const Instance& instance, std::size_t samples, Seed seed, unsigned workers = 0);

struct LogZBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// (M + N) log rho_min <= log Z <= (M + N) log rho_max.
LogZBounds logz_bounds(const Instance& instance);

/// 2 (1 + |N(u, G)|) (log rho_max - log rho_min).
double node_change_bound(const Instance& instance, std::size_t node);

/// (2K + 2 |N(e, E)| + 1)(log rho_max - log rho_min), with |N(e, E)| counted in
/// the graph after adding `tuple`.
double edge_change_bound(const Instance& instance, std::span<const std::size_t> tuple);

}  // namespace hypergibbs

namespace hypergibbs {

/// Result row {"logz": value or "-inf", "se": ..., "method": "exact" | "mc", "seed": ...};
/// "se" is omitted when absent.
std::string logz_row_json(const LogValue& log_z, std::optional<double> std_error, const std::string& method,
                          Seed seed);

}  // namespace hypergibbs

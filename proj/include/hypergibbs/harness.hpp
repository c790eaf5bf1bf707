#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hypergibbs/hypergraph.hpp"
#include "hypergibbs/model.hpp"
#include "hypergibbs/partition.hpp"
#include "hypergibbs/record.hpp"

namespace hypergibbs {

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
  Seed seed = 0;
};

/// Sample mean and standard error of values.
MeanEstimate summarize(const std::vector<double>& values, Seed seed = 0);

/// Draws for sample s come from derive_seed(seed, kTagSamples, s): the graph from its
/// kTagGraph substream and the potentials from its kTagPotentials substream. Two calls
/// with the same seed at different interpolation points are therefore coupled.
struct SampleOptions {
  double state_cap = kDefaultStateCap;
  unsigned workers = 0;
};

/// Exact log Z of every sample, in sample order. Without a point the ensemble is G(N, c).
std::vector<double> sample_log_z(const std::shared_ptr<const ModelSpec>& model, std::size_t n, const Density& c,
                                 const std::optional<InterpolationPoint>& point, std::size_t samples, Seed seed,
                                 const SampleOptions& options = {});

MeanEstimate estimate_mean_logz(const std::shared_ptr<const ModelSpec>& model, std::size_t n, const Density& c,
                                const std::optional<InterpolationPoint>& point, std::size_t samples, Seed seed,
                                const SampleOptions& options = {});

/// Everything an experiment needs; round-trips through the flat params of its record.
struct ExperimentConfig {
  std::string experiment;  // logz, logz_mean, interpolate, moments, concentrate, converge, endpoint, degrees
  ModelConfig model;       // model.seed is unused
  int k = 0;               // degrees only; 0 means the model's arity
  std::size_t n = 0;
  std::size_t n1 = 0;
  Density c;
  std::optional<std::size_t> t;  // logz_mean only
  std::size_t samples = 0;
  Seed seed = 0;
  int r = 1;
  std::optional<double> alpha;     // moments; defaults to the model's alpha
  std::vector<std::size_t> n_list;
  bool coupled = true;
  bool exact = true;  // logz: exact enumeration or Monte Carlo with `samples` draws
  double se_factor = 3.0;
  double slope_threshold = -0.3;
  double significance = 0.001;
  unsigned workers = 0;  // not recorded
};

nlohmann::ordered_json config_to_params(const ExperimentConfig& config);
ExperimentConfig config_from_params(const nlohmann::ordered_json& params);

/// Runs any experiment by name. The record's params reproduce the run exactly.
ExperimentRecord run_experiment(const ExperimentConfig& config);
/// Re-runs from stored params.
ExperimentRecord replay(const ExperimentRecord& record, unsigned workers = 0);

ExperimentRecord interpolation_monotonicity(const ExperimentConfig& config);

/// Exact sides of the moment inequality for one base instance.
struct MomentCheck {
  double left = 0.0;
  double right = 0.0;
  double z0 = 0.0;
  /// min over placements and draws of alpha Z(G0) - Z(G0 + e); nonnegative when adding
  /// an edge raises Z by at most a factor alpha.
  double min_alpha_slack = 0.0;
  bool pass = false;
};

/// left = E over uniform placements in [0,N)^K and nu_J of (alpha Z(G0) - Z(G0+e))^r;
/// right = the same over block placements, block j weighted N_j / N.
MomentCheck moment_inequality_check(const Instance& g0, std::size_t n1, int r, double alpha);

/// Draws `samples` random base instances from G(N, c) (c may be 0) and checks each.
ExperimentRecord moment_experiment(const ExperimentConfig& config);

ExperimentRecord concentration_experiment(const ExperimentConfig& config);
ExperimentRecord convergence_experiment(const ExperimentConfig& config);

/// Chi-square of block-1 edge counts at the chain end against Binomial(floor(cN), N1/N),
/// plus end-of-chain E log Z against the sum of independent block estimates.
ExperimentRecord endpoint_experiment(const ExperimentConfig& config);

/// Empirical distribution of |N(u, G)| against degree_tail_probability.
ExperimentRecord degree_experiment(const ExperimentConfig& config);

/// SE of consecutive-t differences with and without common random numbers.
struct CouplingComparison {
  std::vector<double> coupled_se;
  std::vector<double> independent_se;
};
CouplingComparison coupling_comparison(const std::shared_ptr<const ModelSpec>& model, std::size_t n, std::size_t n1,
                                       const Density& c, std::size_t samples, Seed seed, unsigned workers = 0);

/// Merges adjacent bins until every expected count is >= min_expected, then returns the
/// chi-square p-value. counts and expected have equal length.
double chi_square_p_value(const std::vector<double>& counts, const std::vector<double>& expected,
                          double min_expected = 5.0);

/// Least-squares slope of y against x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace hypergibbs

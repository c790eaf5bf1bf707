#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hypergibbs/karray.hpp"
#include "hypergibbs/model.hpp"
#include "hypergibbs/rng.hpp"

namespace hypergibbs {

/// Relative tolerance 1e-9 (1 + ||M||_inf) used for every eigenvalue verdict.
double eigen_tolerance(const Eigen::MatrixXd& m);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Eigen::MatrixXd& m);

/// Orthonormal basis (n x (n-1)) of the zero-sum subspace R0.
Eigen::MatrixXd zero_sum_basis(Eigen::Index n);

enum class R0Verdict { yes, no, boundary };

struct R0Analysis {
  R0Verdict verdict = R0Verdict::boundary;
  double min_eigenvalue = 0.0;  // of B^T (-J) B
  double tol = 0.0;
  Eigen::VectorXd min_direction;  // in R^n, lies in R0
};

/// Is -J positive definite on R0 = {y : sum y = 0}? Throws std::invalid_argument
/// for asymmetric input.
R0Analysis analyze_r0(const Eigen::MatrixXd& j);
inline R0Verdict restricted_definite_on_r0(const Eigen::MatrixXd& j) { return analyze_r0(j).verdict; }

struct PsdCertificate {
  enum class Verdict { psd_for_alpha, no_alpha, inconclusive };
  Verdict verdict = Verdict::inconclusive;
  double alpha = 0.0;           // valid for psd_for_alpha
  double minimal_alpha = 0.0;   // smallest PSD shift ignoring j_max (psd_for_alpha only)
  Eigen::VectorXd witness;      // no_alpha: y in R0 with y^T(-J)y <= 0 and no shift fixing it
  std::string reason;
  double tol = 0.0;

  /// {"verdict": ..., "alpha": ..., "witness": [...], "tol": ...}
  std::string to_json() const;
  std::string describe() const;
};

/// Smallest alpha >= j_max with alpha - J positive semi-definite, or a proof that
/// none exists. Semidefinite-on-R0 inputs are settled by a range test on the
/// coupling between e and R0.
PsdCertificate min_alpha_psd(const Eigen::MatrixXd& j, double j_max);

/// E over nu_J of the tensor product over l of (alpha - J(x^l_{i_1}, ..., x^l_{i_K})),
/// with one shared J draw per realization. x_rows holds r rows of n spin states.
enum class ExpectationMode { exact, monte_carlo };
struct ExpectationOptions {
  ExpectationMode mode = ExpectationMode::exact;
  std::size_t samples = 10000;
  Seed seed = 0;
};
KArray<double> expected_alpha_minus_j_tensor(const ModelSpec& model, double alpha,
                                             const std::vector<std::vector<std::size_t>>& x_rows,
                                             const ExpectationOptions& options = {});

/// The per-draw factors alpha - J(x^l_...) as n-dimensional order-K arrays.
std::vector<KArray<double>> alpha_minus_j_factors(const KArray<double>& j_table, double alpha,
                                                  const std::vector<std::vector<std::size_t>>& x_rows);

struct FalsifyOptions {
  bool orthant_only = true;
  std::size_t trials = 10000;
  Seed seed = 0;
  double log_lo = -3.0;  // positive coordinates are 10^U(log_lo, log_hi)
  double log_hi = 3.0;
  double relative_tol = 1e-9;
  unsigned workers = 0;
};

struct FalsifyResult {
  bool violation = false;
  std::size_t trial = 0;
  Eigen::VectorXd point;
  Eigen::VectorXd direction;
  double second_derivative = 0.0;
};

/// Samples points and directions and reports a negative second directional
/// derivative of y -> <y, A>, if one is found. A sampler, not a proof.
FalsifyResult convexity_falsify(const KArray<double>& array, const FalsifyOptions& options);

struct KsatRank1Report {
  double max_entry_error = 0.0;
  double max_form_relative_error = 0.0;
  std::size_t agreement_size = 0;
  bool exact = false;
};

/// Checks E tensor(1 - J) = 2^{-K}(1 - e^{-beta})^r 1[every slot in the agreement set]
/// entrywise, and the induced form against 2^{-K}(1 - e^{-beta})^r (sum_{agreement} y)^K.
/// The agreement set holds replica tuples (j_1..j_r) with x^1_{j_1} = ... = x^r_{j_r}.
KsatRank1Report ksat_rank1_verify(double beta, int k, const std::vector<std::vector<std::size_t>>& x_rows,
                                  std::size_t form_trials = 64, Seed seed = 0, double tol = 1e-12);

struct KernelClassification {
  bool partition_form = false;
  std::vector<std::vector<std::size_t>> classes;  // the A_r covering A_0
  std::vector<std::size_t> witness;               // pair (reflexivity) or triple (transitivity)
  std::string violation;                          // "reflexivity" or "transitivity"
};

/// Decides whether zeros of a symmetric 0-1 kernel form an equivalence relation on
/// the points with at least one zero.
KernelClassification partition_kernel_classify(const Eigen::MatrixXd& j01);

/// e^{N,r} (global) or e^{N,r,j} (block [offset, offset + size)) as a length N^r vector.
struct InterpolationVector {
  std::size_t n = 0;
  int r = 1;
  std::size_t block_offset = 0;
  std::size_t block_size = 0;  // equals n for the global vector
  Eigen::VectorXd values;
};
InterpolationVector interpolation_vector(std::size_t n, int r);
InterpolationVector interpolation_vector(std::size_t n, int r, std::size_t block_offset, std::size_t block_size);

/// max |e^{N,r} - sum_j (N_j / N) e^{N,r,j}| over entries.
double interpolation_decomposition_error(std::size_t n, std::size_t n1, int r);

/// Exact E f2(I)^r for a finite coupling law.
double viana_bray_f2_moment(double beta, const std::vector<std::pair<double, double>>& i_law, int r);

struct MomentEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};
/// Monte Carlo estimate of E f2(I)^r.
MomentEstimate viana_bray_f2_moment_mc(double beta, const std::vector<std::pair<double, double>>& i_law, int r,
                                       std::size_t samples, Seed seed);

/// Model-level certificate: the K = 2 deterministic PSD test where it applies,
/// exact closed-form checks for K-SAT and even-K Viana-Bray, and the falsifier on
/// small expected tensors otherwise.
struct ModelCertificate {
  PsdCertificate certificate;
  std::string method;
  std::vector<std::string> notes;
};
ModelCertificate certify_model(const ModelSpec& model, Seed seed = 0, std::size_t trials = 2000);

}  // namespace hypergibbs

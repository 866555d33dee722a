#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "fprobe/embedding_io.hpp"

namespace fprobe {

/// labels[n] = n mod T and the size of every residue class C_r.
struct ResidueLabeling {
  std::size_t period = 0;
  std::vector<std::size_t> labels;
  std::vector<std::size_t> class_sizes;

  static ResidueLabeling make(std::size_t n_tokens, std::size_t period);
  bool balanced() const noexcept;
};

/// Residue-class scatter of an embedding table at period T.
///
///   mu_r = mean of e(n) over C_r,   mu = mean of e(n)
///   S_B  = (1/T) sum_r (mu_r - mu)(mu_r - mu)^T
///   S_W  = (1/N) sum_r sum_{n in C_r} (e(n) - mu_r)(e(n) - mu_r)^T
///
/// `fisher` is lambda_max(S_W^-1 S_B). When S_W is numerically singular the
/// generalized problem is solved on S_W + eps I with eps = 1e-10 Tr(S_W) / d,
/// and eps is reported in `regularization`. The within-class eigenvalues,
/// condition number and bounds then refer to the regularized matrix.
/// If Tr(S_W) is zero (below 1e-14 of the total variance) no regularization is
/// possible: fisher is +inf (or 0 when S_B is zero too) and cond_within is NaN.
struct ScatterSummary {
  std::size_t period = 0;
  std::size_t n_tokens = 0;
  bool balanced = true;  ///< T divides N; the Fourier trace identities apply
  RowMatrix class_means;  ///< T x d
  Eigen::VectorXd grand_mean;
  Eigen::MatrixXd s_between;
  Eigen::MatrixXd s_within;
  double trace_between = 0.0;
  double trace_within = 0.0;
  double total_variance = 0.0;  ///< (1/N) sum ||e(n) - mu||^2
  double lambda_min_within = 0.0;
  double lambda_max_within = 0.0;
  double cond_within = 0.0;
  double regularization = 0.0;
  double fisher = 0.0;
  double bound_low = 0.0;
  double bound_high = 0.0;
};

/// Throws DomainError if T < 2 or some residue class is empty (N < T).
/// T not dividing N is allowed; `balanced` is then false.
ScatterSummary scatter(const EmbeddingTable& table, std::size_t period);

/// Largest generalized eigenvalue max_v (v'S_B v)/(v'S_W v), computed by
/// Cholesky whitening of S_W and a symmetric eigensolve.
/// Throws DomainError for inputs that are not symmetric PSD within
/// 1e-9 * trace, and SingularMatrixError when S_W is not positive definite.
double fisher_score(const Eigen::MatrixXd& s_between, const Eigen::MatrixXd& s_within);

struct FisherBounds {
  double low = 0.0;   ///< Phi_T / (N (T-1) lambda_max(S_W))
  double high = 0.0;  ///< Phi_T / (N lambda_min(S_W))
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double cond = 0.0;
};

/// Sandwich on the Fisher score from the harmonic power alone.
/// Throws SingularMatrixError when lambda_min(S_W) <= 1e-12 lambda_max(S_W).
FisherBounds fisher_bounds(double phi_t, const Eigen::MatrixXd& s_within, std::size_t period,
                           std::size_t n_tokens);

struct ClassMeanDftCheck {
  double max_abs_deviation = 0.0;
  double scale = 1.0;  ///< max(1, ||class means||_F)
  double scaled() const noexcept { return max_abs_deviation / scale; }
};

/// Compares the unitary T-point DFT of the class means against
/// sqrt(T/N) F_{l/T} taken from the full N-point spectrum.
ClassMeanDftCheck class_mean_dft_check(const EmbeddingTable& table, std::size_t period);

/// One diagnostic row: how much harmonic power there is and how much of it a
/// linear discriminant can actually use.
struct NoiseAnatomy {
  std::size_t period = 0;
  double harmonic_power = 0.0;      ///< Phi_T from the spectrum
  double off_harmonic_power = 0.0;
  double trace_between = 0.0;
  double trace_within = 0.0;
  double lambda_min_within = 0.0;
  double lambda_max_within = 0.0;
  double cond_within = 0.0;
  double fisher = 0.0;
  double bound_low = 0.0;
  double bound_high = 0.0;
  double regularization = 0.0;
};

NoiseAnatomy noise_anatomy(const EmbeddingTable& table, std::size_t period);

}  // namespace fprobe

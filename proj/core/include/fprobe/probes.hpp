#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fprobe/embedding_io.hpp"

namespace fprobe {

enum class ProbeKind { linear, mlp, circular };

std::string to_string(ProbeKind kind);
/// Accepts "linear", "mlp", "circular"; throws DomainError otherwise.
ProbeKind parse_probe_kind(std::string_view name);

/// Hyperparameters for every probe kind. Defaults are the reproducible
/// protocol: 3 seeds x 10 stratified folds, z-scored features.
struct ProbeConfig {
  ProbeKind kind = ProbeKind::linear;
  std::size_t period = 10;
  std::size_t n_seeds = 3;
  std::uint64_t base_seed = 0;  ///< seeds are base_seed, base_seed + 1, ...
  std::size_t n_folds = 10;
  bool standardize = true;

  // Multinomial logistic regression: L-BFGS on
  //   sum_i CE_i + (l2 / 2) ||W||^2   (bias unpenalized)
  double l2 = 1e-4;
  std::size_t max_iterations = 500;
  double tolerance = 1e-7;  ///< on the gradient 2-norm
  std::size_t lbfgs_history = 10;

  // MLP d -> hidden -> T with ReLU, Adam on mini-batches.
  std::size_t mlp_hidden = 64;
  std::size_t mlp_epochs = 100;
  std::size_t mlp_batch = 32;
  double mlp_learning_rate = 1e-2;
  double mlp_weight_decay = 1e-4;

  // Circular probe, Adam on the full training split.
  std::size_t circular_anchors = 0;  ///< 0 means T; any other value must equal T
  double circular_temperature = 0.1;
  std::size_t circular_epochs = 300;
  double circular_learning_rate = 0.05;
};

/// Balanced Cohen's kappa in percent: 100 (acc - 1/T) / (1 - 1/T).
double cohen_kappa(double accuracy, std::size_t period);

struct ProbeRun {
  std::uint64_t seed = 0;
  std::size_t fold = 0;
  double accuracy = 0.0;  ///< on the held-out fold
  std::size_t n_test = 0;
  bool converged = true;
  double final_gradient_norm = 0.0;  ///< linear probe only
  std::size_t degenerate_points = 0;  ///< circular probe: ||W x|| < 1e-8
};

struct ProbeResult {
  ProbeConfig config;
  std::vector<ProbeRun> runs;  ///< ordered by (seed, fold)
  double accuracy = 0.0;       ///< mean over runs
  double kappa = 0.0;          ///< cohen_kappa(accuracy, T)
};

/// Stratified fold assignment: fold_of[i] for every sample. Classes are
/// visited in order of their first member, so any relabeling of the classes
/// yields the same folds. Throws DomainError when a class has fewer than two
/// members, since some training split would then miss it.
std::vector<std::size_t> stratified_folds(std::span<const std::size_t> labels,
                                          std::size_t n_folds, std::uint64_t seed);

/// Runs the full seeds x folds protocol with explicit labels in [0, n_classes).
/// config.period is treated as the class count for kappa.
ProbeResult run_probe(const EmbeddingTable& table, std::span<const std::size_t> labels,
                      const ProbeConfig& config);

/// Protocol with labels n mod config.period. Requires N >= 2T.
ProbeResult linear_probe(const EmbeddingTable& table, ProbeConfig config);
ProbeResult mlp_probe(const EmbeddingTable& table, ProbeConfig config);

/// Learned rank-2 projection W and its fixed anchors theta_k = 2 pi k / m.
struct CircularProbe {
  Eigen::MatrixXd projection;  ///< d x 2, acts on standardized features
  Eigen::VectorXd feature_mean;
  Eigen::VectorXd feature_scale;
  std::vector<double> anchors;
  double temperature = 0.1;

  /// Unit-circle coordinates of W x for every row (zero for degenerate rows).
  RowMatrix project(const RowMatrix& x) const;
  std::vector<std::size_t> classify(const RowMatrix& x) const;
};

struct CircularProbeReport {
  ProbeResult result;
  CircularProbe probe;     ///< refit on all tokens with base_seed
  RowMatrix projections;   ///< N x 2 normalized coordinates from `probe`
};

CircularProbeReport circular_probe(const EmbeddingTable& table, ProbeConfig config);

/// One cell of a (period x kind) sweep. Exactly one of result / error is set.
struct SweepCell {
  std::size_t period = 0;
  ProbeKind kind = ProbeKind::linear;
  std::optional<ProbeResult> result;
  std::string error;
};

/// Grid over periods x kinds; a failing cell records its error and the sweep
/// continues. `base` supplies every hyperparameter except period and kind.
std::vector<SweepCell> probe_sweep(const EmbeddingTable& table,
                                   std::span<const std::size_t> periods,
                                   std::span<const ProbeKind> kinds,
                                   const ProbeConfig& base = {});

namespace detail {

struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;
  static Standardizer fit(const RowMatrix& x, bool enabled);
  RowMatrix apply(const RowMatrix& x) const;
};

struct LogisticModel {
  Eigen::MatrixXd weights;  ///< d x T
  Eigen::RowVectorXd bias;  ///< 1 x T
  bool converged = false;
  double gradient_norm = 0.0;
  std::size_t iterations = 0;
};

LogisticModel fit_logistic(const RowMatrix& x, std::span<const std::size_t> labels,
                           std::size_t n_classes, const ProbeConfig& config);

/// Row-wise argmax; ties go to the lowest index.
std::vector<std::size_t> argmax_rows(const RowMatrix& scores);

}  // namespace detail

}  // namespace fprobe

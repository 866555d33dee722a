#include "fprobe/geometry.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "fprobe/error.hpp"
#include "fprobe/spectral.hpp"

namespace fprobe {

namespace {

constexpr double kPsdTolerance = 1e-9;
constexpr double kSingularRatio = 1e-12;
constexpr double kRegularizationFactor = 1e-10;
constexpr double kZeroTraceRatio = 1e-14;

void require_symmetric_psd(const Eigen::MatrixXd& m, const char* name) {
  if (m.rows() != m.cols()) {
    throw DomainError(std::string(name) + " must be square");
  }
  const double norm = m.norm();
  if ((m - m.transpose()).norm() > kPsdTolerance * std::max(1.0, norm)) {
    throw DomainError(std::string(name) + " is not symmetric");
  }
  if (m.size() == 0) return;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  const double trace = std::abs(m.trace());
  if (eig.eigenvalues().minCoeff() < -kPsdTolerance * std::max(trace, 1e-300)) {
    throw DomainError(std::string(name) + " is not positive semidefinite (min eigenvalue " +
                      std::to_string(eig.eigenvalues().minCoeff()) + ")");
  }
}

}  // namespace

ResidueLabeling ResidueLabeling::make(std::size_t n_tokens, std::size_t period) {
  if (period < 2) throw DomainError("period must be >= 2, got " + std::to_string(period));
  ResidueLabeling l;
  l.period = period;
  l.labels.resize(n_tokens);
  l.class_sizes.assign(period, 0);
  for (std::size_t n = 0; n < n_tokens; ++n) {
    l.labels[n] = n % period;
    ++l.class_sizes[n % period];
  }
  return l;
}

bool ResidueLabeling::balanced() const noexcept {
  return !labels.empty() && labels.size() % period == 0;
}

double fisher_score(const Eigen::MatrixXd& s_between, const Eigen::MatrixXd& s_within) {
  require_symmetric_psd(s_between, "S_B");
  require_symmetric_psd(s_within, "S_W");
  if (s_between.rows() != s_within.rows()) {
    throw DomainError("S_B and S_W dimensions differ");
  }
  if (s_between.isZero(0.0)) return 0.0;
  const Eigen::LLT<Eigen::MatrixXd> llt(s_within);
  if (llt.info() != Eigen::Success) {
    throw SingularMatrixError("S_W is not positive definite; Cholesky failed");
  }
  // M = L^-1 S_B L^-T has the same spectrum as S_W^-1 S_B.
  const auto lower = llt.matrixL();
  Eigen::MatrixXd half = lower.solve(s_between);
  Eigen::MatrixXd whitened = lower.solve(half.transpose());
  whitened = 0.5 * (whitened + whitened.transpose()).eval();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(whitened, Eigen::EigenvaluesOnly);
  return std::max(0.0, eig.eigenvalues().maxCoeff());
}

FisherBounds fisher_bounds(double phi_t, const Eigen::MatrixXd& s_within, std::size_t period,
                           std::size_t n_tokens) {
  if (period < 2) throw DomainError("period must be >= 2");
  if (n_tokens == 0) throw DomainError("N must be positive");
  if (phi_t < 0.0) throw DomainError("harmonic power must be non-negative");
  require_symmetric_psd(s_within, "S_W");
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s_within, Eigen::EigenvaluesOnly);
  FisherBounds b;
  b.lambda_min = eig.eigenvalues().minCoeff();
  b.lambda_max = eig.eigenvalues().maxCoeff();
  if (!(b.lambda_max > 0.0) || b.lambda_min <= kSingularRatio * b.lambda_max) {
    throw SingularMatrixError("S_W is singular: lambda_min = " + std::to_string(b.lambda_min));
  }
  b.cond = b.lambda_max / b.lambda_min;
  const double n = static_cast<double>(n_tokens);
  const double t1 = static_cast<double>(period - 1);
  b.low = phi_t / (n * t1 * b.lambda_max);
  b.high = phi_t / (n * b.lambda_min);
  return b;
}

ScatterSummary scatter(const EmbeddingTable& table, std::size_t period) {
  const auto labeling = ResidueLabeling::make(table.n_tokens(), period);
  for (std::size_t r = 0; r < period; ++r) {
    if (labeling.class_sizes[r] == 0) {
      throw DomainError("residue class " + std::to_string(r) + " is empty (N = " +
                        std::to_string(table.n_tokens()) + " < T = " +
                        std::to_string(period) + ")");
    }
  }
  const RowMatrix& x = table.values();
  const auto d = x.cols();
  const auto t = static_cast<Eigen::Index>(period);

  ScatterSummary s;
  s.period = period;
  s.n_tokens = table.n_tokens();
  s.balanced = labeling.balanced();

  s.class_means = RowMatrix::Zero(t, d);
  for (Eigen::Index n = 0; n < x.rows(); ++n) {
    s.class_means.row(static_cast<Eigen::Index>(labeling.labels[n])) += x.row(n);
  }
  for (Eigen::Index r = 0; r < t; ++r) {
    s.class_means.row(r) /= static_cast<double>(labeling.class_sizes[r]);
  }
  s.grand_mean = x.colwise().mean().transpose();

  const RowMatrix between = s.class_means.rowwise() - s.grand_mean.transpose();
  s.s_between = between.transpose() * between / static_cast<double>(period);

  RowMatrix within(x.rows(), d);
  for (Eigen::Index n = 0; n < x.rows(); ++n) {
    within.row(n) = x.row(n) - s.class_means.row(static_cast<Eigen::Index>(labeling.labels[n]));
  }
  s.s_within = within.transpose() * within / static_cast<double>(x.rows());
  s.trace_between = s.s_between.trace();
  s.trace_within = s.s_within.trace();
  s.total_variance =
      (x.rowwise() - s.grand_mean.transpose()).squaredNorm() / static_cast<double>(x.rows());

  Eigen::MatrixXd sw = s.s_within;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sw, Eigen::EigenvaluesOnly);
  double lmin = eig.eigenvalues().minCoeff();
  double lmax = eig.eigenvalues().maxCoeff();
  const bool singular = !(lmax > 0.0) || lmin <= kSingularRatio * lmax ||
                        Eigen::LLT<Eigen::MatrixXd>(sw).info() != Eigen::Success;
  // Traces below 1e-14 of the total variance are rounding residue, not scatter.
  const double zero_trace = kZeroTraceRatio * s.total_variance;
  const bool no_within = !(s.trace_within > zero_trace);
  if (singular && !no_within) {
    s.regularization = kRegularizationFactor * s.trace_within / static_cast<double>(d);
    sw.diagonal().array() += s.regularization;
    eig.compute(sw, Eigen::EigenvaluesOnly);
    lmin = eig.eigenvalues().minCoeff();
    lmax = eig.eigenvalues().maxCoeff();
  }
  s.lambda_min_within = lmin;
  s.lambda_max_within = lmax;

  // N Tr(S_B) equals Phi_T when T | N; in general it is what the bounds need.
  const double phi_equivalent = static_cast<double>(s.n_tokens) * s.trace_between;
  if (no_within) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    const bool has_signal = s.trace_between > zero_trace;
    s.cond_within = std::numeric_limits<double>::quiet_NaN();
    s.fisher = has_signal ? inf : 0.0;
    s.bound_low = has_signal ? inf : 0.0;
    s.bound_high = s.bound_low;
    return s;
  }
  s.cond_within = lmax / lmin;
  s.fisher = fisher_score(s.s_between, sw);
  const auto bounds = fisher_bounds(phi_equivalent, sw, period, s.n_tokens);
  s.bound_low = bounds.low;
  s.bound_high = bounds.high;
  return s;
}

ClassMeanDftCheck class_mean_dft_check(const EmbeddingTable& table, std::size_t period) {
  const auto harmonics = HarmonicSet::make(table.n_tokens(), period);
  const auto summary = scatter(table, period);
  const Spectrum spectrum = dft(table);
  const auto d = static_cast<Eigen::Index>(table.dim());
  const double t = static_cast<double>(period);
  const double ratio = std::sqrt(t / static_cast<double>(table.n_tokens()));

  ClassMeanDftCheck check;
  check.scale = std::max(1.0, summary.class_means.norm());
  for (std::size_t l = 0; l < period; ++l) {
    for (Eigen::Index j = 0; j < d; ++j) {
      std::complex<double> acc = 0.0;
      for (std::size_t r = 0; r < period; ++r) {
        const double angle =
            -2.0 * std::numbers::pi * static_cast<double>((l * r) % period) / t;
        acc += summary.class_means(static_cast<Eigen::Index>(r), j) *
               std::complex<double>(std::cos(angle), std::sin(angle));
      }
      acc /= std::sqrt(t);
      const auto expected =
          ratio * spectrum.coeffs(static_cast<Eigen::Index>(harmonics.indices[l]), j);
      check.max_abs_deviation = std::max(check.max_abs_deviation, std::abs(acc - expected));
    }
  }
  return check;
}

NoiseAnatomy noise_anatomy(const EmbeddingTable& table, std::size_t period) {
  const auto summary = scatter(table, period);
  NoiseAnatomy row;
  row.period = period;
  if (summary.balanced) {
    const Spectrum spectrum = dft(table);
    row.harmonic_power = harmonic_power(spectrum, period);
    row.off_harmonic_power = off_harmonic_power(spectrum, period);
  } else {
    row.harmonic_power = std::numeric_limits<double>::quiet_NaN();
    row.off_harmonic_power = std::numeric_limits<double>::quiet_NaN();
  }
  row.trace_between = summary.trace_between;
  row.trace_within = summary.trace_within;
  row.lambda_min_within = summary.lambda_min_within;
  row.lambda_max_within = summary.lambda_max_within;
  row.cond_within = summary.cond_within;
  row.fisher = summary.fisher;
  row.bound_low = summary.bound_low;
  row.bound_high = summary.bound_high;
  row.regularization = summary.regularization;
  return row;
}

}  // namespace fprobe

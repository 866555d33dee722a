#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "fprobe/embedding_io.hpp"

namespace fprobe {

using ComplexRowMatrix =
    Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class DftMethod {
  direct,  ///< O(N^2 d) summation; the reference
  fft,     ///< FFTW, any N
};

/// Which per-frequency quantity is divided by its median to give norm_mag.
enum class SpectrumScale {
  power,      ///< ||F_nu||^2
  magnitude,  ///< ||F_nu||
};

struct SpectrumOptions {
  DftMethod method = DftMethod::direct;
  SpectrumScale scale = SpectrumScale::power;
  bool include_dc_in_median = false;
};

/// Unitary DFT of an embedding table along the token index.
///
///   F_k = (1/sqrt(N)) sum_n e(n) exp(-2 pi i k n / N),   nu = k / N
///
/// power[k] = ||F_k||^2 summed over the d embedding coordinates.
/// norm_mag[k] is power (or its square root, per SpectrumScale) divided by the
/// median of the same quantity over k != 0. When that median is zero up to
/// rounding (below 1e-14 of the largest power) the divisor falls back to 1 and
/// `median_degenerate` is set.
struct Spectrum {
  std::size_t n_tokens = 0;
  std::size_t dim = 0;
  ComplexRowMatrix coeffs;  ///< N x d, row k = F_{k/N}
  Eigen::VectorXd power;
  Eigen::VectorXd norm_mag;
  double median = 0.0;
  bool median_degenerate = false;
  SpectrumOptions options;

  double frequency(std::size_t k) const noexcept {
    return static_cast<double>(k) / static_cast<double>(n_tokens);
  }
};

Spectrum dft(const EmbeddingTable& table, const SpectrumOptions& options = {});

/// Indices {0, N/T, ..., (T-1)N/T} of the frequencies {0, 1/T, ..., (T-1)/T}.
struct HarmonicSet {
  std::size_t period = 0;
  std::vector<std::size_t> indices;

  /// Throws DomainError unless T >= 2 and T divides N.
  static HarmonicSet make(std::size_t n_tokens, std::size_t period);
  bool contains(std::size_t k) const noexcept;
};

/// Phi_T: power summed over the non-DC harmonics l N / T, l = 1..T-1.
double harmonic_power(const Spectrum& spectrum, std::size_t period);

/// Power summed over every index outside the harmonic set (DC included in the set).
double off_harmonic_power(const Spectrum& spectrum, std::size_t period);

double total_power(const Spectrum& spectrum);

struct SpikeRow {
  std::size_t period = 0;
  double harmonic_power = 0.0;
  double peak = 0.0;        ///< norm_mag at nu = 1/T
  double prominence = 0.0;  ///< peak / max(norm_mag at the two adjacent indices)
};

/// One row per period, sorted by T. Throws DomainError on an empty list or a
/// period that does not divide N.
std::vector<SpikeRow> spike_report(const Spectrum& spectrum,
                                   std::span<const std::size_t> periods);

}  // namespace fprobe

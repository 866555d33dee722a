#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "fprobe/embedding_io.hpp"

namespace fprobe {

/// Scalar counterexample e(n) = A (n mod T) + B floor(n / T), n = r + m T.
///
/// A sets all of the between-class scatter (and hence the harmonic power),
/// B sets all of the within-class scatter. Derived fields:
///   K = ceil((T - 1) / (T eps)),  N = K T,
///   A = sqrt(12 C / (K T (T^2 - 1)))   so that Phi_T = C.
struct SynthSpec {
  std::size_t period = 10;
  double epsilon = 0.009;
  double power_target = 0.0;  ///< C
  double block_scale = 0.0;   ///< B
  std::size_t blocks = 0;     ///< K
  std::size_t n_tokens = 0;   ///< N
  double amplitude = 0.0;     ///< A

  /// B > (T - 1) A: consecutive blocks occupy disjoint intervals.
  bool interleaving() const noexcept;
};

/// Throws DomainError unless T >= 2, eps > 0, C > 0, B >= 0.
SynthSpec make_synth_spec(std::size_t period, double epsilon, double power_target,
                          double block_scale);

/// Same construction parametrized by A directly; C = A^2 K T (T^2 - 1) / 12.
/// A = 0 is allowed (the zero-power boundary case).
SynthSpec make_synth_spec_from_amplitude(std::size_t period, double epsilon, double amplitude,
                                         double block_scale);

enum class SynthPreset {
  interleaved,  ///< B = 4.2 (T - 1) A, inside the interleaving regime
  separable,    ///< B = 0.006 A (B = 0.03 at A = 5)
};

double preset_block_scale(SynthPreset preset, std::size_t period, double amplitude);
SynthPreset parse_synth_preset(std::string_view name);
std::string to_string(SynthPreset preset);

/// ceil((T - 1) / (T eps)), robust to eps values such as 0.009 that are not
/// exact in binary.
std::size_t blocks_for_epsilon(std::size_t period, double epsilon);

struct SynthPrediction {
  double harmonic_power = 0.0;   ///< A^2 K T (T^2 - 1) / 12
  double trace_between = 0.0;    ///< A^2 (T^2 - 1) / 12
  double trace_within = 0.0;     ///< B^2 (K^2 - 1) / 12
  double fisher = 0.0;           ///< trace_between / trace_within (d = 1)
  double accuracy_ceiling = 0.0; ///< 1/T + (T - 1)/(K T); a bound only when interleaving()
  bool ceiling_applies = false;
};

SynthPrediction predict(const SynthSpec& spec);

/// N x 1 table of the construction.
EmbeddingTable construct(const SynthSpec& spec);

/// Rows (cos 2 pi n / T, sin 2 pi n / T, 0, ..., 0), optionally rotated by a
/// seeded random orthogonal d x d map. Throws DomainError for d < 2 or N < 2.
EmbeddingTable ideal_circle(std::size_t period, std::size_t n_tokens, std::size_t dim,
                            std::optional<std::uint64_t> lift_seed = std::nullopt);

/// Haar-distributed orthogonal matrix from the QR of a Gaussian matrix.
Eigen::MatrixXd random_orthogonal(std::size_t dim, std::uint64_t seed);

/// Removes every component at the non-DC harmonics of period T:
/// e(n) <- e(n) - (mu_{n mod T} - mu). Idempotent. Requires T | N.
EmbeddingTable project_out_harmonics(const EmbeddingTable& table, std::size_t period);

/// Gaussian table with the period-T harmonics projected out, so Phi_T = 0
/// up to rounding.
EmbeddingTable zero_harmonic_table(std::size_t period, std::size_t n_tokens, std::size_t dim,
                                   std::uint64_t seed);

/// i.i.d. standard normal N x d table.
EmbeddingTable gaussian_table(std::size_t n_tokens, std::size_t dim, std::uint64_t seed);

}  // namespace fprobe

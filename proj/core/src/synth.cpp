#include "fprobe/synth.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/QR>

#include "fprobe/error.hpp"
#include "fprobe/rng.hpp"

namespace fprobe {

bool SynthSpec::interleaving() const noexcept {
  return block_scale > static_cast<double>(period - 1) * amplitude;
}

std::size_t blocks_for_epsilon(std::size_t period, double epsilon) {
  if (period < 2) throw DomainError("synth period must be >= 2");
  if (!(epsilon > 0.0)) throw DomainError("epsilon must be > 0");
  const double exact = static_cast<double>(period - 1) / (static_cast<double>(period) * epsilon);
  // Shave a few ulps so that 9 / (10 * 0.009) = 100.00000000000001 gives 100.
  auto k = static_cast<std::size_t>(std::ceil(exact * (1.0 - 1e-12)));
  return std::max<std::size_t>(k, 1);
}

namespace {

double power_for_amplitude(std::size_t period, std::size_t blocks, double amplitude) {
  const double t = static_cast<double>(period);
  return amplitude * amplitude * static_cast<double>(blocks) * t * (t * t - 1.0) / 12.0;
}

}  // namespace

SynthSpec make_synth_spec(std::size_t period, double epsilon, double power_target,
                          double block_scale) {
  if (!(power_target > 0.0)) throw DomainError("power target C must be > 0");
  if (!(block_scale >= 0.0)) throw DomainError("block scale B must be >= 0");
  SynthSpec s;
  s.period = period;
  s.epsilon = epsilon;
  s.power_target = power_target;
  s.block_scale = block_scale;
  s.blocks = blocks_for_epsilon(period, epsilon);
  s.n_tokens = s.blocks * period;
  const double t = static_cast<double>(period);
  s.amplitude = std::sqrt(12.0 * power_target / (static_cast<double>(s.blocks) * t * (t * t - 1.0)));
  return s;
}

SynthSpec make_synth_spec_from_amplitude(std::size_t period, double epsilon, double amplitude,
                                         double block_scale) {
  if (!(amplitude >= 0.0)) throw DomainError("amplitude A must be >= 0");
  if (!(block_scale >= 0.0)) throw DomainError("block scale B must be >= 0");
  SynthSpec s;
  s.period = period;
  s.epsilon = epsilon;
  s.block_scale = block_scale;
  s.blocks = blocks_for_epsilon(period, epsilon);
  s.n_tokens = s.blocks * period;
  s.amplitude = amplitude;
  s.power_target = power_for_amplitude(period, s.blocks, amplitude);
  return s;
}

double preset_block_scale(SynthPreset preset, std::size_t period, double amplitude) {
  if (preset == SynthPreset::interleaved) {
    return 42.0 * static_cast<double>(period - 1) * amplitude / 10.0;
  }
  // Blocks must stay narrower than the class spacing A for every K, so no (T - 1) here.
  return 6.0 * amplitude / 1000.0;
}

SynthPreset parse_synth_preset(std::string_view name) {
  if (name == "interleaved") return SynthPreset::interleaved;
  if (name == "separable") return SynthPreset::separable;
  throw DomainError("unknown synth preset '" + std::string(name) + "'");
}

std::string to_string(SynthPreset preset) {
  return preset == SynthPreset::interleaved ? "interleaved" : "separable";
}

SynthPrediction predict(const SynthSpec& spec) {
  const double t = static_cast<double>(spec.period);
  const double k = static_cast<double>(spec.blocks);
  SynthPrediction p;
  p.trace_between = spec.amplitude * spec.amplitude * (t * t - 1.0) / 12.0;
  p.harmonic_power = power_for_amplitude(spec.period, spec.blocks, spec.amplitude);
  p.trace_within = spec.block_scale * spec.block_scale * (k * k - 1.0) / 12.0;
  if (p.trace_within > 0.0) {
    p.fisher = p.trace_between / p.trace_within;
  } else {
    p.fisher = p.trace_between > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  p.accuracy_ceiling = 1.0 / t + (t - 1.0) / (k * t);
  p.ceiling_applies = spec.interleaving();
  return p;
}

EmbeddingTable construct(const SynthSpec& spec) {
  if (spec.period < 2 || spec.n_tokens != spec.blocks * spec.period || spec.n_tokens < 2) {
    throw DomainError("inconsistent synth spec");
  }
  RowMatrix values(static_cast<Eigen::Index>(spec.n_tokens), 1);
  for (std::size_t n = 0; n < spec.n_tokens; ++n) {
    values(static_cast<Eigen::Index>(n), 0) =
        spec.amplitude * static_cast<double>(n % spec.period) +
        spec.block_scale * static_cast<double>(n / spec.period);
  }
  return EmbeddingTable(std::move(values), "synth T=" + std::to_string(spec.period) +
                                               " K=" + std::to_string(spec.blocks));
}

Eigen::MatrixXd random_orthogonal(std::size_t dim, std::uint64_t seed) {
  SplitMix64 rng(seed);
  const auto d = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXd g(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < d; ++i) g(i, j) = rng.normal();
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < d; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

EmbeddingTable ideal_circle(std::size_t period, std::size_t n_tokens, std::size_t dim,
                            std::optional<std::uint64_t> lift_seed) {
  if (dim < 2) throw DomainError("ideal circle needs d >= 2");
  if (period < 2) throw DomainError("ideal circle needs T >= 2");
  RowMatrix values = RowMatrix::Zero(static_cast<Eigen::Index>(n_tokens),
                                     static_cast<Eigen::Index>(dim));
  for (std::size_t n = 0; n < n_tokens; ++n) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(n % period) /
                         static_cast<double>(period);
    values(static_cast<Eigen::Index>(n), 0) = std::cos(angle);
    values(static_cast<Eigen::Index>(n), 1) = std::sin(angle);
  }
  if (lift_seed) {
    values = values * random_orthogonal(dim, *lift_seed).transpose();
  }
  return EmbeddingTable(std::move(values), "ideal-circle T=" + std::to_string(period));
}

EmbeddingTable project_out_harmonics(const EmbeddingTable& table, std::size_t period) {
  if (period < 2 || table.n_tokens() % period != 0) {
    throw DomainError("project_out_harmonics needs T >= 2 dividing N");
  }
  const RowMatrix& x = table.values();
  const auto t = static_cast<Eigen::Index>(period);
  RowMatrix means = RowMatrix::Zero(t, x.cols());
  for (Eigen::Index n = 0; n < x.rows(); ++n) means.row(n % t) += x.row(n);
  means /= static_cast<double>(x.rows() / t);
  const Eigen::RowVectorXd grand = means.colwise().mean();
  RowMatrix out = x;
  for (Eigen::Index n = 0; n < x.rows(); ++n) out.row(n) -= means.row(n % t) - grand;
  return EmbeddingTable(std::move(out), table.label());
}

EmbeddingTable gaussian_table(std::size_t n_tokens, std::size_t dim, std::uint64_t seed) {
  SplitMix64 rng(seed);
  RowMatrix values(static_cast<Eigen::Index>(n_tokens), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < values.size(); ++i) values.data()[i] = rng.normal();
  return EmbeddingTable(std::move(values), "gaussian");
}

EmbeddingTable zero_harmonic_table(std::size_t period, std::size_t n_tokens, std::size_t dim,
                                   std::uint64_t seed) {
  const auto projected = project_out_harmonics(gaussian_table(n_tokens, dim, seed), period);
  return EmbeddingTable(projected.values(), "zero-harmonic T=" + std::to_string(period));
}

}  // namespace fprobe

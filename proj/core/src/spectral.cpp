#include "fprobe/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "fprobe/error.hpp"
#include "parallel.hpp"

namespace fprobe {

namespace {

void direct_dft(const RowMatrix& x, ComplexRowMatrix& out) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto d = x.cols();
  // Twiddles indexed by (k * m) mod N keep every phase exact in integers.
  std::vector<double> cos_table(n), sin_table(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
    cos_table[j] = std::cos(angle);
    sin_table[j] = -std::sin(angle);
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  detail::parallel_for(n, [&](std::size_t k) {
    Eigen::RowVectorXd re = Eigen::RowVectorXd::Zero(d);
    Eigen::RowVectorXd im = Eigen::RowVectorXd::Zero(d);
    std::size_t phase = 0;
    for (std::size_t m = 0; m < n; ++m) {
      re.noalias() += cos_table[phase] * x.row(static_cast<Eigen::Index>(m));
      im.noalias() += sin_table[phase] * x.row(static_cast<Eigen::Index>(m));
      phase += k;
      if (phase >= n) phase -= n;
    }
    for (Eigen::Index j = 0; j < d; ++j) {
      out(static_cast<Eigen::Index>(k), j) = {scale * re(j), scale * im(j)};
    }
  });
}

// FFTW planning is not thread-safe; execution is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

void fftw_dft(const RowMatrix& x, ComplexRowMatrix& out) {
  const int n = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  auto* buffer = fftw_alloc_complex(static_cast<std::size_t>(n) * static_cast<std::size_t>(d));
  if (buffer == nullptr) throw std::bad_alloc();
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    // Row-major N x d: transform each column (stride d, distance 1).
    plan = fftw_plan_many_dft(1, &n, d, buffer, nullptr, d, 1, buffer, nullptr, d, 1,
                              FFTW_FORWARD, FFTW_ESTIMATE);
  }
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    buffer[i][0] = x.data()[i];
    buffer[i][1] = 0.0;
  }
  fftw_execute(plan);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    out.data()[i] = {scale * buffer[i][0], scale * buffer[i][1]};
  }
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(buffer);
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  if (v.size() % 2 == 1) return v[mid];
  const double upper = v[mid];
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace

Spectrum dft(const EmbeddingTable& table, const SpectrumOptions& options) {
  Spectrum s;
  s.n_tokens = table.n_tokens();
  s.dim = table.dim();
  s.options = options;
  s.coeffs.resize(static_cast<Eigen::Index>(s.n_tokens), static_cast<Eigen::Index>(s.dim));
  if (options.method == DftMethod::direct) {
    direct_dft(table.values(), s.coeffs);
  } else {
    fftw_dft(table.values(), s.coeffs);
  }

  s.power = s.coeffs.rowwise().squaredNorm();
  Eigen::VectorXd quantity =
      options.scale == SpectrumScale::power ? s.power : s.power.cwiseSqrt().eval();
  const std::size_t first = options.include_dc_in_median ? 0 : 1;
  s.median = median_of(std::vector<double>(quantity.data() + first,
                                           quantity.data() + quantity.size()));
  // Zero up to rounding: below 1e-14 of the peak power (1e-7 of the peak magnitude).
  const double floor = options.scale == SpectrumScale::power ? 1e-14 : 1e-7;
  s.median_degenerate = !(s.median > floor * quantity.maxCoeff());
  s.norm_mag = s.median_degenerate ? quantity : (quantity / s.median).eval();
  return s;
}

HarmonicSet HarmonicSet::make(std::size_t n_tokens, std::size_t period) {
  if (period < 2) throw DomainError("period must be >= 2, got " + std::to_string(period));
  if (n_tokens % period != 0) {
    throw DomainError("period " + std::to_string(period) + " does not divide N = " +
                      std::to_string(n_tokens));
  }
  HarmonicSet h;
  h.period = period;
  const std::size_t step = n_tokens / period;
  for (std::size_t l = 0; l < period; ++l) h.indices.push_back(l * step);
  return h;
}

bool HarmonicSet::contains(std::size_t k) const noexcept {
  return std::binary_search(indices.begin(), indices.end(), k);
}

double harmonic_power(const Spectrum& spectrum, std::size_t period) {
  const auto h = HarmonicSet::make(spectrum.n_tokens, period);
  double phi = 0.0;
  for (std::size_t l = 1; l < h.indices.size(); ++l) {
    phi += spectrum.power(static_cast<Eigen::Index>(h.indices[l]));
  }
  return phi;
}

double off_harmonic_power(const Spectrum& spectrum, std::size_t period) {
  const auto h = HarmonicSet::make(spectrum.n_tokens, period);
  const std::size_t step = spectrum.n_tokens / period;
  double off = 0.0;
  for (std::size_t k = 0; k < spectrum.n_tokens; ++k) {
    if (k % step != 0) off += spectrum.power(static_cast<Eigen::Index>(k));
  }
  return off;
}

double total_power(const Spectrum& spectrum) { return spectrum.power.sum(); }

std::vector<SpikeRow> spike_report(const Spectrum& spectrum,
                                   std::span<const std::size_t> periods) {
  if (periods.empty()) throw DomainError("spike_report needs at least one period");
  std::vector<std::size_t> sorted(periods.begin(), periods.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = spectrum.n_tokens;
  std::vector<SpikeRow> rows;
  rows.reserve(sorted.size());
  for (auto period : sorted) {
    SpikeRow row;
    row.period = period;
    row.harmonic_power = harmonic_power(spectrum, period);
    const std::size_t k = n / period;
    const auto& mag = spectrum.norm_mag;
    row.peak = mag(static_cast<Eigen::Index>(k));
    const double neighbor = std::max(mag(static_cast<Eigen::Index>((k + n - 1) % n)),
                                     mag(static_cast<Eigen::Index>((k + 1) % n)));
    if (neighbor > 0.0) {
      row.prominence = row.peak / neighbor;
    } else {
      row.prominence = row.peak > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace fprobe

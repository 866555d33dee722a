#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "fprobe/error.hpp"
#include "fprobe/spectral.hpp"
#include "fprobe/synth.hpp"
#include "oracles.hpp"

namespace fprobe {
namespace {

EmbeddingTable random_table(std::size_t n, std::size_t d, std::uint64_t seed) {
  return EmbeddingTable(fixture::gaussian_matrix(n, d, seed));
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

TEST(Dft, DirectMatchesBruteForce) {
  const auto t = random_table(64, 3, 1);
  const auto spec = dft(t);
  const auto brute = oracle::brute_dft(t.values());
  EXPECT_LT((spec.coeffs - brute).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Dft, FftMatchesDirect) {
  for (std::size_t n : {1000u, 97u, 2u}) {
    const auto t = random_table(n, 8, n);
    SpectrumOptions fft;
    fft.method = DftMethod::fft;
    const auto a = dft(t);
    const auto b = dft(t, fft);
    EXPECT_LT((a.coeffs - b.coeffs).cwiseAbs().maxCoeff(), 1e-10) << n;
    EXPECT_LT((a.power - b.power).cwiseAbs().maxCoeff(), 1e-9 * a.power.maxCoeff()) << n;
  }
}

TEST(Dft, ConstantRowsAreDcOnly) {
  RowMatrix m(50, 3);
  m.rowwise() = Eigen::RowVector3d(1.0, -2.0, 0.5);
  const auto spec = dft(EmbeddingTable(m));
  EXPECT_NEAR(spec.power(0), 50 * 5.25, 1e-9);
  for (Eigen::Index k = 1; k < 50; ++k) EXPECT_LT(spec.power(k), 1e-20) << k;
}

TEST(Dft, PureCosineHasPowerQuarterN) {
  const std::size_t n = 120, k0 = 7;
  RowMatrix m(n, 1);
  for (std::size_t t = 0; t < n; ++t) m(t, 0) = std::cos(2 * std::numbers::pi * k0 * t / n);
  const auto spec = dft(EmbeddingTable(m));
  for (std::size_t k = 0; k < n; ++k) {
    const double expected = (k == k0 || k == n - k0) ? n / 4.0 : 0.0;
    EXPECT_NEAR(spec.power(k), expected, 1e-10) << k;
  }
}

TEST(Dft, ParsevalHolds) {
  const auto t = random_table(100, 8, 2);
  const auto spec = dft(t);
  const double energy = t.values().squaredNorm();
  EXPECT_NEAR(total_power(spec), energy, 1e-12 * energy);
}

TEST(Dft, PowerIsConjugateSymmetric) {
  const auto t = random_table(101, 4, 3);
  const auto spec = dft(t);
  for (Eigen::Index k = 1; k < 101; ++k) {
    EXPECT_NEAR(spec.power(k), spec.power(101 - k), 1e-9 * spec.power(k));
    const auto diff = spec.coeffs.row(k) - spec.coeffs.row(101 - k).conjugate();
    EXPECT_LT(diff.cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Dft, IsLinear) {
  const auto x = fixture::gaussian_matrix(60, 5, 4);
  const auto y = fixture::gaussian_matrix(60, 5, 5);
  const RowMatrix z = 2.5 * x - 0.75 * y;
  const auto fx = dft(EmbeddingTable(x)).coeffs;
  const auto fy = dft(EmbeddingTable(y)).coeffs;
  const auto fz = dft(EmbeddingTable(z)).coeffs;
  const ComplexRowMatrix combo = 2.5 * fx - 0.75 * fy;
  EXPECT_LT((fz - combo).cwiseAbs().maxCoeff(), 1e-6 * fz.cwiseAbs().maxCoeff());
}

TEST(Dft, NormMagDividesByNonDcMedian) {
  const auto t = random_table(40, 2, 6);
  const auto spec = dft(t);
  const auto brute = oracle::brute_power(t.values());
  std::vector<double> rest(brute.data() + 1, brute.data() + 40);
  const double med = median_of(rest);
  EXPECT_NEAR(spec.median, med, 1e-12 * med);
  for (Eigen::Index k = 0; k < 40; ++k) EXPECT_NEAR(spec.norm_mag(k), brute(k) / med, 1e-9);

  SpectrumOptions with_dc;
  with_dc.include_dc_in_median = true;
  std::vector<double> all(brute.data(), brute.data() + 40);
  EXPECT_NEAR(dft(t, with_dc).median, median_of(all), 1e-12);

  SpectrumOptions magnitude;
  magnitude.scale = SpectrumScale::magnitude;
  const auto mag = dft(t, magnitude);
  std::vector<double> roots;
  for (double p : rest) roots.push_back(std::sqrt(p));
  EXPECT_NEAR(mag.median, median_of(roots), 1e-12);
  EXPECT_NEAR(mag.norm_mag(3), std::sqrt(brute(3)) / median_of(roots), 1e-9);
}

TEST(Dft, ZeroMedianFallsBackToUnitDivisor) {
  RowMatrix m = RowMatrix::Constant(30, 2, 3.0);
  const auto spec = dft(EmbeddingTable(m));
  EXPECT_TRUE(spec.median_degenerate);
  EXPECT_EQ(spec.norm_mag(0), spec.power(0));
}

TEST(Harmonics, SetIndicesAndErrors) {
  const auto h = HarmonicSet::make(1000, 10);
  ASSERT_EQ(h.indices.size(), 10u);
  for (std::size_t l = 0; l < 10; ++l) EXPECT_EQ(h.indices[l], 100 * l);
  EXPECT_TRUE(h.contains(300));
  EXPECT_FALSE(h.contains(301));
  EXPECT_THROW(HarmonicSet::make(1000, 7), DomainError);
  EXPECT_THROW(HarmonicSet::make(1000, 1), DomainError);
  const auto spec = dft(random_table(20, 1, 7));
  EXPECT_THROW(harmonic_power(spec, 3), DomainError);
  EXPECT_THROW(off_harmonic_power(spec, 3), DomainError);
  EXPECT_THROW(spike_report(spec, std::vector<std::size_t>{}), DomainError);
}

TEST(Harmonics, ConstantTableHasNoHarmonicPower) {
  const auto spec = dft(EmbeddingTable(RowMatrix::Constant(60, 2, -1.5)));
  for (std::size_t t : {2u, 3u, 4u, 5u, 6u, 10u, 12u, 15u, 20u, 30u, 60u}) {
    EXPECT_LT(harmonic_power(spec, t), 1e-20) << t;
    EXPECT_LT(off_harmonic_power(spec, t), 1e-20) << t;
  }
}

TEST(Harmonics, CosineOfPeriodFive) {
  RowMatrix m(25, 1);
  for (int n = 0; n < 25; ++n) m(n, 0) = std::cos(2 * std::numbers::pi * n / 5);
  EXPECT_NEAR(harmonic_power(dft(EmbeddingTable(m)), 5), 12.5, 1e-10);
}

TEST(Harmonics, ConstructionPowerIsIndependentOfB) {
  for (double b : {0.0, 0.03, 21.0, 189.0}) {
    const auto t = construct(make_synth_spec_from_amplitude(10, 0.009, 5.0, b));
    ASSERT_EQ(t.n_tokens(), 1000u);
    const auto spec = dft(t);
    EXPECT_NEAR(harmonic_power(spec, 10), 206250.0, 206250.0 * 1e-6) << b;
  }
  // Brute-force cross-check on a smaller instance of the same family.
  const auto small = construct(make_synth_spec_from_amplitude(5, 0.16, 2.0, 7.0));
  const auto brute = oracle::brute_power(small.values());
  double phi = 0.0;
  for (std::size_t l = 1; l < 5; ++l) phi += brute(l * 5);
  EXPECT_NEAR(harmonic_power(dft(small), 5), phi, 1e-9 * phi);
}

TEST(Harmonics, FrequencyPartitionSumsToTotal) {
  const auto spec = dft(random_table(120, 6, 8));
  for (std::size_t t : {2u, 3u, 8u, 10u, 40u}) {
    const double total = total_power(spec);
    EXPECT_NEAR(spec.power(0) + harmonic_power(spec, t) + off_harmonic_power(spec, t), total,
                1e-12 * total);
  }
}

TEST(Harmonics, PurelyPeriodicConstructionHasNoOffHarmonicPower) {
  const auto spec = dft(construct(make_synth_spec_from_amplitude(10, 0.009, 5.0, 0.0)));
  EXPECT_LT(off_harmonic_power(spec, 10), 1e-12 * total_power(spec));
}

TEST(Spikes, RowsAreSortedAndMatchDefinition) {
  const auto spec = dft(random_table(60, 3, 9));
  const std::vector<std::size_t> periods{10, 2, 5};
  const auto rows = spike_report(spec, periods);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].period, 2u);
  EXPECT_EQ(rows[2].period, 10u);
  const auto& r = rows[2];
  EXPECT_EQ(r.peak, spec.norm_mag(6));
  EXPECT_EQ(r.prominence, spec.norm_mag(6) / std::max(spec.norm_mag(5), spec.norm_mag(7)));
  EXPECT_EQ(r.harmonic_power, harmonic_power(spec, 10));
  // T = 2 sits at N/2, whose neighbours are N/2 - 1 and N/2 + 1.
  EXPECT_EQ(rows[0].prominence,
            spec.norm_mag(30) / std::max(spec.norm_mag(29), spec.norm_mag(31)));
}

TEST(Spikes, SeparableConstructionSpikesAtOneTenth) {
  const auto spec = dft(construct(make_synth_spec_from_amplitude(10, 0.009, 5.0, 0.03)));
  const std::size_t periods[] = {10};
  const auto row = spike_report(spec, periods)[0];
  EXPECT_GT(row.prominence, 10.0);
  EXPECT_GT(row.peak, 10.0);
}

TEST(Spikes, InterleavedConstructionMatchesBruteForce) {
  const auto t = construct(make_synth_spec_from_amplitude(10, 0.009, 5.0, 21.0));
  const auto spec = dft(t);
  const auto brute = oracle::brute_power(t.values());
  const std::size_t periods[] = {10};
  const auto row = spike_report(spec, periods)[0];
  EXPECT_NEAR(row.prominence, brute(100) / std::max(brute(99), brute(101)), 1e-9);
  EXPECT_GT(row.peak, 10.0);
}

TEST(Spikes, GaussianProminencesStayCalibrated) {
  // Monte-Carlo over 100 seeds; the band [0.2, 5] must hold for >= 99 of them.
  const std::vector<std::size_t> periods{2, 5, 10};
  int inside = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto spec = dft(random_table(1000, 64, 1000 + seed), {DftMethod::fft, {}, false});
    bool ok = true;
    for (const auto& row : spike_report(spec, periods)) {
      ok = ok && row.prominence >= 0.2 && row.prominence <= 5.0;
    }
    inside += ok;
  }
  EXPECT_GE(inside, 99);
}

TEST(Spikes, FrequencyBaselineFixtureSpikesAtTen) {
  const auto counts = fixture::periodic_counts(1000);
  const auto spec = dft(frequency_embedding(TokenFrequencyTable::from_counts(counts)));
  const std::size_t periods[] = {10};
  const auto row = spike_report(spec, periods)[0];
  EXPECT_GT(row.peak, 10.0);
  EXPECT_GT(row.prominence, 2.0);
}

}  // namespace
}  // namespace fprobe

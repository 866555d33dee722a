#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "fprobe/error.hpp"
#include "fprobe/geometry.hpp"
#include "fprobe/probes.hpp"
#include "fprobe/spectral.hpp"
#include "fprobe/synth.hpp"

namespace fprobe {
namespace {

std::vector<double> column(const EmbeddingTable& t) {
  std::vector<double> v(t.n_tokens());
  for (std::size_t n = 0; n < v.size(); ++n) v[n] = t.values()(static_cast<Eigen::Index>(n), 0);
  return v;
}

std::vector<std::size_t> residues(std::size_t n, std::size_t t) {
  std::vector<std::size_t> l(n);
  for (std::size_t i = 0; i < n; ++i) l[i] = i % t;
  return l;
}

TEST(SynthSpec, BlockCountFromEpsilon) {
  const auto a = make_synth_spec(5, 0.16, 1.0, 0.0);
  EXPECT_EQ(a.blocks, 5u);
  EXPECT_EQ(a.n_tokens, 25u);
  const auto b = make_synth_spec(10, 0.009, 1.0, 0.0);
  EXPECT_EQ(b.blocks, 100u);
  EXPECT_EQ(b.n_tokens, 1000u);
  EXPECT_EQ(blocks_for_epsilon(2, 0.5), 1u);
  EXPECT_EQ(blocks_for_epsilon(2, 0.3), 2u);
}

TEST(SynthSpec, RejectsBadParameters) {
  EXPECT_THROW(make_synth_spec(1, 0.1, 1.0, 0.0), DomainError);
  EXPECT_THROW(make_synth_spec(5, 0.0, 1.0, 0.0), DomainError);
  EXPECT_THROW(make_synth_spec(5, 0.1, 0.0, 0.0), DomainError);
  EXPECT_THROW(make_synth_spec(5, 0.1, 1.0, -1.0), DomainError);
  EXPECT_THROW(parse_synth_preset("loose"), DomainError);
}

TEST(SynthSpec, AmplitudeRealizesPowerTarget) {
  const auto s = make_synth_spec(10, 0.009, 206250.0, 21.0);
  EXPECT_NEAR(s.amplitude, 5.0, 1e-12);
  const auto p = predict(s);
  EXPECT_NEAR(p.harmonic_power, 206250.0, 1e-6);
  // B = 21 mixes the classes but overlaps neighbouring blocks: (T - 1) A = 45.
  EXPECT_FALSE(s.interleaving());
  EXPECT_TRUE(make_synth_spec_from_amplitude(10, 0.009, 5.0, 46.0).interleaving());
  EXPECT_FALSE(make_synth_spec_from_amplitude(10, 0.009, 5.0, 0.03).interleaving());
}

TEST(SynthSpec, Presets) {
  EXPECT_DOUBLE_EQ(preset_block_scale(SynthPreset::interleaved, 10, 5.0), 189.0);
  EXPECT_DOUBLE_EQ(preset_block_scale(SynthPreset::separable, 10, 5.0), 0.03);
  for (std::size_t t : {2u, 5u, 10u}) {
    const double b = preset_block_scale(SynthPreset::interleaved, t, 1.0);
    EXPECT_TRUE(make_synth_spec_from_amplitude(t, 0.009, 1.0, b).interleaving());
  }
  EXPECT_EQ(parse_synth_preset(to_string(SynthPreset::separable)), SynthPreset::separable);
}

TEST(Construct, MatchesDefinition) {
  const auto s = make_synth_spec_from_amplitude(5, 0.16, 2.0, 3.0);
  const auto t = construct(s);
  ASSERT_EQ(t.n_tokens(), 25u);
  ASSERT_EQ(t.dim(), 1u);
  for (std::size_t n = 0; n < 25; ++n) {
    EXPECT_DOUBLE_EQ(t.values()(static_cast<Eigen::Index>(n), 0),
                     2.0 * static_cast<double>(n % 5) + 3.0 * static_cast<double>(n / 5));
  }
}

TEST(Construct, PredictionsMatchMeasurements) {
  for (double b : {0.0, 0.03, 1.0, 21.0}) {
    const auto s = make_synth_spec_from_amplitude(10, 0.009, 5.0, b);
    const auto p = predict(s);
    const auto t = construct(s);
    const auto sc = scatter(t, 10);
    EXPECT_NEAR(harmonic_power(dft(t, {DftMethod::fft}), 10), p.harmonic_power,
                1e-9 * p.harmonic_power);
    EXPECT_NEAR(sc.trace_between, p.trace_between, 1e-9 * p.trace_between);
    EXPECT_NEAR(sc.trace_within, p.trace_within, 1e-9 * std::max(1.0, p.trace_within));
    if (b > 0) EXPECT_NEAR(sc.fisher, p.fisher, 1e-6 * p.fisher);
  }
  const auto p = predict(make_synth_spec_from_amplitude(10, 0.009, 5.0, 21.0));
  EXPECT_NEAR(p.harmonic_power, 206250.0, 1e-6);
  EXPECT_NEAR(p.accuracy_ceiling, 0.109, 1e-12);
  EXPECT_FALSE(p.ceiling_applies);
  EXPECT_NEAR(p.fisher, 25.0 * 99.0 / (441.0 * 9999.0), 1e-15);
}

TEST(Construct, ZeroAmplitudeHasNoHarmonicPower) {
  const auto t = construct(make_synth_spec_from_amplitude(10, 0.009, 0.0, 1.0));
  EXPECT_NEAR(harmonic_power(dft(t, {DftMethod::fft}), 10), 0.0, 1e-9);
  EXPECT_EQ(predict(make_synth_spec_from_amplitude(10, 0.009, 0.0, 1.0)).harmonic_power, 0.0);
}

TEST(Construct, ZeroBlockScaleHasNoWithinScatter) {
  const auto sc = scatter(construct(make_synth_spec_from_amplitude(10, 0.009, 5.0, 0.0)), 10);
  EXPECT_EQ(sc.trace_within, 0.0);
}

TEST(Construct, CeilingEqualsExhaustiveIntervalSearch) {
  // The exact best 1-D linear accuracy must equal 1/T + (T-1)/(KT) for interleaved blocks.
  struct Case { std::size_t t; double eps; double a; double b; };
  const Case cases[] = {{2, 0.05, 1.0, 1.5}, {3, 0.06, 1.0, 2.5}, {5, 0.16, 1.0, 4.2},
                        {5, 0.02, 0.5, 2.1}, {10, 0.09, 5.0, 46.0}};
  for (const auto& c : cases) {
    const auto s = make_synth_spec_from_amplitude(c.t, c.eps, c.a, c.b);
    ASSERT_TRUE(s.interleaving());
    const auto v = column(construct(s));
    const auto l = residues(v.size(), c.t);
    const auto p = predict(s);
    EXPECT_NEAR(oracle::interval_distinct_accuracy(v, l, c.t), p.accuracy_ceiling, 1e-12) << c.t;
    EXPECT_NEAR(oracle::interval_majority_accuracy(v, l, c.t), p.accuracy_ceiling, 1e-12) << c.t;
  }
}

TEST(Construct, SeparableCaseReachesPerfectAccuracy) {
  const auto s = make_synth_spec_from_amplitude(5, 0.16, 5.0, 0.03);
  const auto v = column(construct(s));
  EXPECT_DOUBLE_EQ(oracle::interval_distinct_accuracy(v, residues(v.size(), 5), 5), 1.0);
}

TEST(IdealCircle, DistinctPointsAndFullHarmonicPower) {
  const auto c = ideal_circle(10, 1000, 2);
  std::set<std::pair<long long, long long>> pts;
  for (Eigen::Index n = 0; n < 1000; ++n) {
    pts.emplace(std::llround(c.values()(n, 0) * 1e9), std::llround(c.values()(n, 1) * 1e9));
  }
  EXPECT_EQ(pts.size(), 10u);
  const auto sp = dft(c, {DftMethod::fft});
  const double non_dc = total_power(sp) - sp.power(0);
  EXPECT_NEAR(harmonic_power(sp, 10), non_dc, 1e-9 * non_dc);
  EXPECT_NEAR(non_dc, 1000.0, 1e-8);

  const auto lifted = ideal_circle(10, 1000, 64, 3);
  EXPECT_NEAR(harmonic_power(dft(lifted, {DftMethod::fft}), 10), harmonic_power(sp, 10), 1e-8);
  EXPECT_THROW(ideal_circle(10, 1000, 1), DomainError);
}

TEST(RandomOrthogonal, IsOrthogonalAndSeeded) {
  const auto q = random_orthogonal(16, 4);
  EXPECT_LE((q.transpose() * q - Eigen::MatrixXd::Identity(16, 16)).norm(), 1e-12);
  EXPECT_EQ(q, random_orthogonal(16, 4));
  EXPECT_NE(q, random_orthogonal(16, 5));
}

TEST(ZeroHarmonic, RemovesPeriodicPowerAndIsIdempotent) {
  const auto z = zero_harmonic_table(10, 1000, 64, 11);
  const auto sp = dft(z, {DftMethod::fft});
  EXPECT_LE(harmonic_power(sp, 10), 1e-10 * total_power(sp));
  const auto again = project_out_harmonics(z, 10);
  EXPECT_LE((again.values() - z.values()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(project_out_harmonics(z, 7), DomainError);
  ProbeConfig c;
  c.period = 10;
  c.n_seeds = 1;
  // Equal class means forbid above-chance accuracy. Held-out folds pull the
  // training means away from the test points, so the estimate sits at or below chance.
  EXPECT_LE(linear_probe(z, c).kappa, 5.0);
}

TEST(ZeroHarmonic, ProjectionKeepsOffHarmonicPower) {
  const auto g = gaussian_table(200, 8, 12);
  const auto p = project_out_harmonics(g, 5);
  const auto a = dft(g);
  const auto b = dft(p);
  EXPECT_NEAR(off_harmonic_power(a, 5), off_harmonic_power(b, 5),
              1e-9 * total_power(a));
  EXPECT_NEAR(a.power(0), b.power(0), 1e-9 * total_power(a));
}

}  // namespace
}  // namespace fprobe

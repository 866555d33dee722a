#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "fixtures.hpp"
#include "fprobe/error.hpp"
#include "fprobe/perturb.hpp"

namespace fprobe {
namespace {

// Text token 0; number value v is token 10 + v.
TokenCorpus small_corpus(std::vector<std::vector<std::uint32_t>> seqs) {
  TokenCorpus c;
  c.sequences = std::move(seqs);
  c.vocab_size = 20;
  for (std::uint32_t v = 0; v < 10; ++v) c.number_vocab.emplace(10 + v, v);
  return c;
}

std::vector<std::size_t> number_positions(const TokenCorpus& c, std::size_t s) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < c.sequences[s].size(); ++i) {
    if (c.is_number(c.sequences[s][i])) out.push_back(i);
  }
  return out;
}

std::vector<std::uint32_t> numbers_of(const TokenCorpus& c, std::size_t s) {
  std::vector<std::uint32_t> out;
  for (auto t : c.sequences[s]) {
    if (c.is_number(t)) out.push_back(t);
  }
  return out;
}

void expect_text_identical(const TokenCorpus& a, const TokenCorpus& b) {
  ASSERT_EQ(a.sequences.size(), b.sequences.size());
  for (std::size_t s = 0; s < a.sequences.size(); ++s) {
    ASSERT_EQ(a.sequences[s].size(), b.sequences[s].size());
    for (std::size_t i = 0; i < a.sequences[s].size(); ++i) {
      if (!a.is_number(a.sequences[s][i])) ASSERT_EQ(a.sequences[s][i], b.sequences[s][i]);
    }
    ASSERT_EQ(number_positions(a, s), number_positions(b, s));
  }
}

std::size_t max_numbers_per_segment(const TokenCorpus& c, const SegmentPlan& plan) {
  std::size_t worst = 0;
  for (std::size_t s = 0; s < c.sequences.size(); ++s) {
    const auto& sp = plan.sequences[s];
    std::map<std::uint32_t, std::size_t> per;
    for (std::size_t i = 0; i < c.sequences[s].size(); ++i) {
      if (c.is_number(c.sequences[s][i])) worst = std::max(worst, ++per[sp.segment_id[i]]);
    }
  }
  return worst;
}

void expect_plan_consistent(const SequencePlan& p, std::size_t length) {
  ASSERT_EQ(p.segment_id.size(), length);
  ASSERT_EQ(p.position_id.size(), length);
  ASSERT_EQ(p.loss_mask.size(), length);
  if (length == 0) return;
  ASSERT_FALSE(p.boundaries.empty());
  EXPECT_EQ(p.boundaries.front(), 0u);
  for (std::size_t i = 0; i < length; ++i) {
    const bool starts = std::binary_search(p.boundaries.begin(), p.boundaries.end(), i);
    EXPECT_EQ(p.position_id[i] == 0, starts) << i;
    if (i > 0) {
      EXPECT_GE(p.segment_id[i], p.segment_id[i - 1]);
      EXPECT_EQ(p.position_id[i], starts ? 0u : p.position_id[i - 1] + 1);
    }
    const bool crosses = i + 1 == length || p.segment_id[i + 1] != p.segment_id[i];
    EXPECT_EQ(p.loss_mask[i], crosses ? 0 : 1) << i;
  }
}

TEST(Midpoint, RoundingLeavesExtraTokenOnTheLeft) {
  EXPECT_EQ(midpoint_boundary(1, 4), 3u);  // gap {2,3}
  EXPECT_EQ(midpoint_boundary(1, 5), 4u);  // gap {2,3,4}
  EXPECT_EQ(midpoint_boundary(1, 3), 3u);  // gap {2}
  EXPECT_EQ(midpoint_boundary(1, 2), 2u);  // adjacent numbers
  EXPECT_THROW(midpoint_boundary(4, 4), DomainError);
}

TEST(IsolateK, SingleNumberSegments) {
  const auto c = small_corpus({{0, 17, 0, 0, 19, 0}});
  const auto out = isolate_k(c, 1);
  ASSERT_TRUE(out.plan);
  const auto& p = out.plan->sequences[0];
  EXPECT_EQ(p.boundaries, (std::vector<std::size_t>{0, 3}));
  EXPECT_EQ(p.position_id, (std::vector<std::uint32_t>{0, 1, 2, 0, 1, 2}));
  EXPECT_EQ(p.loss_mask, (std::vector<std::uint8_t>{1, 1, 0, 1, 1, 0}));
  EXPECT_EQ(out.corpus.sequences, c.sequences);
  EXPECT_EQ(max_numbers_per_segment(c, *out.plan), 1u);
  EXPECT_EQ(out.provenance.perturbation, "isolate");
}

TEST(IsolateK, GroupsGreedilyFromTheLeft) {
  const auto c = small_corpus({{11, 0, 12, 0, 13, 0, 0, 14, 15}});
  const auto out = isolate_k(c, 2);
  const auto& p = out.plan->sequences[0];
  // groups {11,12} {13,14} {15}: the lone gap token at 3 stays left, adjacent numbers at 7 and 8
  EXPECT_EQ(p.boundaries, (std::vector<std::size_t>{0, 4, 8}));
}

TEST(IsolateK, ZeroNumbersGivesIdentityPlan) {
  const auto c = small_corpus({{0, 1, 2, 3}, {}});
  const auto out = isolate_k(c, 1);
  EXPECT_EQ(out.plan->sequences[0].boundaries, (std::vector<std::size_t>{0}));
  EXPECT_TRUE(out.plan->sequences[1].boundaries.empty());
  expect_plan_consistent(out.plan->sequences[0], 4);
  EXPECT_THROW(isolate_k(c, 0), DomainError);
}

TEST(IsolateK, CapHoldsOnRandomCorpora) {
  const auto c = fixture::random_corpus(300, 1, 0, 200, 0.4);
  for (std::size_t k : {1u, 2u, 3u, 8u}) {
    const auto out = isolate_k(c, k);
    EXPECT_EQ(out.corpus.sequences, c.sequences);
    EXPECT_LE(max_numbers_per_segment(c, *out.plan), k);
    for (std::size_t s = 0; s < c.sequences.size(); ++s) {
      expect_plan_consistent(out.plan->sequences[s], c.sequences[s].size());
      const auto n = number_positions(c, s).size();
      const std::size_t expected = n == 0 ? (c.sequences[s].empty() ? 0 : 1) : (n + k - 1) / k;
      EXPECT_EQ(out.plan->sequences[s].boundaries.size(), expected);
    }
  }
}

TEST(ContextWindow, FloorRule) {
  std::vector<std::uint32_t> long_seq(1024);
  for (std::size_t i = 0; i < 1024; ++i) long_seq[i] = static_cast<std::uint32_t>(i % 20);
  const auto c = small_corpus({long_seq});
  EXPECT_EQ(context_window(c, 2).corpus.sequences.size(), 512u);
  EXPECT_EQ(context_window(c, 64).corpus.sequences.size(), 16u);

  const auto d = small_corpus({{1, 2, 3, 4, 5, 6, 7}});
  const auto w = context_window(d, 4);
  ASSERT_EQ(w.corpus.sequences.size(), 1u);
  EXPECT_EQ(w.corpus.sequences[0], (std::vector<std::uint32_t>{1, 2, 3, 4}));
  EXPECT_EQ(w.window_source[0], std::make_pair(std::size_t{0}, std::size_t{0}));
}

TEST(ContextWindow, WindowsAreContiguousSlices) {
  const auto c = fixture::random_corpus(50, 2, 0, 300, 0.3);
  const auto w = context_window(c, 8);
  std::size_t expected = 0;
  for (const auto& s : c.sequences) expected += s.size() / 8;
  ASSERT_EQ(w.corpus.sequences.size(), expected);
  for (std::size_t i = 0; i < w.corpus.sequences.size(); ++i) {
    const auto [src, start] = w.window_source[i];
    const auto& from = c.sequences[src];
    EXPECT_TRUE(std::equal(w.corpus.sequences[i].begin(), w.corpus.sequences[i].end(),
                           from.begin() + static_cast<std::ptrdiff_t>(start)));
  }
}

TEST(ContextWindow, Errors) {
  const auto c = small_corpus({{1, 2, 3}});
  EXPECT_THROW(context_window(c, 1), DomainError);
  EXPECT_THROW(context_window(c, 4), DomainError);
}

TEST(Swap, TwoSequenceExample) {
  // A = numbers [1,2,3], B = numbers [4,5]; pool [1,2,3,4,5].
  const auto c = small_corpus({{0, 11, 12, 0, 13}, {14, 0, 15}});
  EXPECT_THROW(swap_numbers(c, 0), DomainError);  // A needs 3 numbers, only B's 2 are eligible

  const std::set<std::vector<std::uint32_t>> a_slices{{14, 15, 14}, {15, 14, 15}};
  const std::set<std::vector<std::uint32_t>> b_slices{{11, 12}, {12, 13}};
  std::set<std::vector<std::uint32_t>> seen_a, seen_b;
  for (std::uint64_t seed = 0; seed < 64; ++seed) {
    const auto out = swap_numbers(c, seed, true);
    expect_text_identical(c, out.corpus);
    const auto a = numbers_of(out.corpus, 0);
    const auto b = numbers_of(out.corpus, 1);
    EXPECT_TRUE(a_slices.contains(a));
    EXPECT_TRUE(b_slices.contains(b));
    seen_a.insert(a);
    seen_b.insert(b);
  }
  EXPECT_EQ(seen_a, a_slices);
  EXPECT_EQ(seen_b, b_slices);
}

TEST(Swap, SequencesWithoutNumbersAreUnchanged) {
  const auto c = small_corpus({{0, 1, 2}, {11, 0, 12}, {13, 14}});
  const auto out = swap_numbers(c, 3);
  EXPECT_EQ(out.corpus.sequences[0], c.sequences[0]);
}

TEST(Swap, Errors) {
  EXPECT_THROW(swap_numbers(small_corpus({{0, 11, 12}}), 0), DomainError);
  EXPECT_THROW(swap_numbers(small_corpus({{0, 11, 12}}), 0, true), DomainError);
  EXPECT_THROW(swap_numbers(small_corpus({{0, 1}, {2}}), 0), DomainError);
}

TEST(Swap, SlicesComeFromOtherSequencesInOrder) {
  const auto c = fixture::random_corpus(200, 3, 10, 120, 0.3);
  const auto out = swap_numbers(c, 9);
  expect_text_identical(c, out.corpus);
  for (std::size_t s = 0; s < c.sequences.size(); ++s) {
    const auto got = numbers_of(out.corpus, s);
    if (got.empty()) continue;
    std::vector<std::uint32_t> pool;
    for (std::size_t o = 0; o < c.sequences.size(); ++o) {
      if (o == s) continue;
      const auto n = numbers_of(c, o);
      pool.insert(pool.end(), n.begin(), n.end());
    }
    EXPECT_NE(std::search(pool.begin(), pool.end(), got.begin(), got.end()), pool.end()) << s;
  }
  const auto audit = marginal_audit(c, out);
  EXPECT_TRUE(*audit.text_identical);
  EXPECT_TRUE(*audit.number_positions_identical);
  // Contiguous slices keep number bigrams in aggregate; i.i.d. resampling does not.
  const auto iid = marginal_audit(c, unigram_replace(c, 9));
  EXPECT_GT(audit.bigram_overlap, 0.4);
  EXPECT_GT(audit.bigram_overlap, iid.bigram_overlap + 0.2);
}

TEST(Swap, Deterministic) {
  const auto c = fixture::random_corpus(100, 4, 10, 100, 0.3);
  EXPECT_EQ(swap_numbers(c, 5).corpus.sequences, swap_numbers(c, 5).corpus.sequences);
  EXPECT_NE(swap_numbers(c, 5).corpus.sequences, swap_numbers(c, 6).corpus.sequences);
}

TEST(Unigram, ConcentratedMarginalIsIdentity) {
  const auto c = small_corpus({{0, 13, 0, 13}, {13, 13, 0}});
  EXPECT_EQ(unigram_replace(c, 1).corpus.sequences, c.sequences);
  EXPECT_THROW(unigram_replace(small_corpus({{0, 1}}), 1), DomainError);
}

TEST(Unigram, FrequenciesWithinBinomialBound) {
  // 1e5 number slots with marginal 0.5, 0.3, 0.15, 0.05 over tokens 10..13.
  std::vector<std::vector<std::uint32_t>> seqs(100);
  const std::uint32_t pattern[20] = {10, 10, 10, 10, 10, 10, 10, 10, 10, 10,
                                     11, 11, 11, 11, 11, 11, 12, 12, 12, 13};
  for (std::size_t s = 0; s < 100; ++s) {
    for (std::size_t i = 0; i < 1000; ++i) {
      seqs[s].push_back(0);
      seqs[s].push_back(pattern[(s * 1000 + i) % 20]);
    }
  }
  const auto c = small_corpus(seqs);
  const auto out = unigram_replace(c, 2024);
  expect_text_identical(c, out.corpus);
  const auto audit = marginal_audit(c, out);
  for (const auto& t : audit.tokens) {
    if (t.count_before == 0) continue;
    const double bound = 3.0 * std::sqrt(t.p_before * (1.0 - t.p_before) / 1e5);
    EXPECT_LE(std::abs(t.p_after - t.p_before), bound) << t.token;
  }
  EXPECT_NEAR(audit.sum_p_squared, 0.25 + 0.09 + 0.0225 + 0.0025, 1e-12);
  ASSERT_TRUE(audit.number_survival && audit.bigram_survival);
  EXPECT_NEAR(*audit.number_survival, audit.sum_p_squared, 0.01);
  // Pair survival is p(a) p(b) per adjacent pair: 2.9725 per 20-pair cycle,
  // minus the one missing wrap pair (13, 10) out of 999 per sequence.
  EXPECT_NEAR(*audit.bigram_survival, (50 * 2.9725 - 0.025) / 999.0, 0.01);
  EXPECT_EQ(out.provenance.seed, std::optional<std::uint64_t>(2024));
}

TEST(Audit, IdentityHasZeroDeltas) {
  const auto c = fixture::random_corpus(50, 5, 5, 50, 0.3);
  PerturbedCorpus same;
  same.corpus = c;
  const auto a = marginal_audit(c, same);
  EXPECT_EQ(a.tv_distance, 0.0);
  for (const auto& t : a.tokens) EXPECT_EQ(t.delta, 0.0);
  EXPECT_EQ(a.bigram_overlap, 1.0);
  EXPECT_EQ(*a.number_survival, 1.0);
  EXPECT_EQ(*a.bigram_survival, 1.0);
  EXPECT_TRUE(*a.text_identical);
}

TEST(Audit, Errors) {
  const auto c = small_corpus({{0, 11}});
  PerturbedCorpus other;
  other.corpus = c;
  other.corpus.number_vocab.erase(11);
  EXPECT_THROW(marginal_audit(c, other), DomainError);
  const auto empty = small_corpus({{0, 1}});
  PerturbedCorpus e;
  e.corpus = empty;
  EXPECT_THROW(marginal_audit(empty, e), DomainError);
}

TEST(Audit, ContextWindowIsNotAligned) {
  const auto c = fixture::random_corpus(20, 6, 40, 80, 0.3);
  const auto a = marginal_audit(c, context_window(c, 16));
  EXPECT_FALSE(a.aligned);
  EXPECT_FALSE(a.number_survival.has_value());
}

}  // namespace
}  // namespace fprobe

#include "fprobe/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "fprobe/error.hpp"
#include "fprobe/rng.hpp"
#include "parallel.hpp"

namespace fprobe {

namespace {

std::vector<std::size_t> number_positions(const TokenCorpus& corpus,
                                          const std::vector<std::uint32_t>& seq) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (corpus.is_number(seq[i])) out.push_back(i);
  }
  return out;
}

PerturbedCorpus copy_shell(const TokenCorpus& corpus, std::string name) {
  PerturbedCorpus out;
  out.corpus.vocab_size = corpus.vocab_size;
  out.corpus.number_vocab = corpus.number_vocab;
  out.provenance.perturbation = std::move(name);
  return out;
}

}  // namespace

SequencePlan SequencePlan::from_boundaries(std::vector<std::size_t> boundaries,
                                           std::size_t length) {
  SequencePlan plan;
  plan.boundaries = std::move(boundaries);
  plan.segment_id.resize(length);
  plan.position_id.resize(length);
  plan.loss_mask.resize(length);
  std::size_t segment = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < length; ++i) {
    if (segment + 1 < plan.boundaries.size() && plan.boundaries[segment + 1] == i) {
      ++segment;
      start = i;
    }
    plan.segment_id[i] = static_cast<std::uint32_t>(segment);
    plan.position_id[i] = static_cast<std::uint32_t>(i - start);
  }
  for (std::size_t i = 0; i < length; ++i) {
    plan.loss_mask[i] = i + 1 < length && plan.segment_id[i + 1] == plan.segment_id[i];
  }
  return plan;
}

std::size_t midpoint_boundary(std::size_t previous_number, std::size_t next_number) {
  if (next_number <= previous_number) {
    throw DomainError("midpoint_boundary needs previous < next");
  }
  const std::size_t gap = next_number - previous_number - 1;
  return previous_number + 1 + (gap + 1) / 2;
}

PerturbedCorpus isolate_k(const TokenCorpus& corpus, std::size_t k) {
  if (k == 0) throw DomainError("isolate-k needs k >= 1");
  PerturbedCorpus out = copy_shell(corpus, "isolate");
  out.provenance.parameters["k"] = std::to_string(k);
  out.corpus.sequences = corpus.sequences;
  SegmentPlan plan;
  plan.sequences.resize(corpus.sequences.size());
  detail::parallel_for(corpus.sequences.size(), [&](std::size_t s) {
    const auto& seq = corpus.sequences[s];
    const auto numbers = number_positions(corpus, seq);
    std::vector<std::size_t> boundaries;
    if (!seq.empty()) boundaries.push_back(0);
    for (std::size_t j = k; j < numbers.size(); j += k) {
      boundaries.push_back(midpoint_boundary(numbers[j - 1], numbers[j]));
    }
    plan.sequences[s] = SequencePlan::from_boundaries(std::move(boundaries), seq.size());
  });
  out.plan = std::move(plan);
  return out;
}

PerturbedCorpus context_window(const TokenCorpus& corpus, std::size_t window) {
  if (window < 2) throw DomainError("context window length must be >= 2");
  PerturbedCorpus out = copy_shell(corpus, "context");
  out.provenance.parameters["window"] = std::to_string(window);
  for (std::size_t s = 0; s < corpus.sequences.size(); ++s) {
    const auto& seq = corpus.sequences[s];
    for (std::size_t start = 0; start + window <= seq.size(); start += window) {
      out.corpus.sequences.emplace_back(seq.begin() + static_cast<std::ptrdiff_t>(start),
                                        seq.begin() + static_cast<std::ptrdiff_t>(start + window));
      out.window_source.emplace_back(s, start);
    }
  }
  if (out.corpus.sequences.empty()) {
    throw DomainError("context window " + std::to_string(window) +
                      " exceeds every sequence length; output would be empty");
  }
  return out;
}

PerturbedCorpus swap_numbers(const TokenCorpus& corpus, std::uint64_t seed, bool allow_wrap) {
  PerturbedCorpus out = copy_shell(corpus, "swap");
  out.provenance.seed = seed;
  out.provenance.parameters["allow_wrap"] = allow_wrap ? "true" : "false";

  // Sequential pre-pass: pooled number stream in corpus order.
  std::vector<std::uint32_t> pool;
  std::vector<std::size_t> pool_start(corpus.sequences.size());
  std::vector<std::vector<std::size_t>> positions(corpus.sequences.size());
  for (std::size_t s = 0; s < corpus.sequences.size(); ++s) {
    positions[s] = number_positions(corpus, corpus.sequences[s]);
    pool_start[s] = pool.size();
    for (auto p : positions[s]) pool.push_back(corpus.sequences[s][p]);
  }
  if (pool.empty()) throw DomainError("swap_numbers: corpus contains no number tokens");
  for (std::size_t s = 0; s < corpus.sequences.size(); ++s) {
    const std::size_t needed = positions[s].size();
    if (needed == 0) continue;
    const std::size_t available = pool.size() - needed;
    if (available == 0) {
      throw DomainError("swap_numbers: sequence " + std::to_string(s) +
                        " holds every number token; no other document to draw from");
    }
    if (needed > available && !allow_wrap) {
      throw DomainError("swap_numbers: sequence " + std::to_string(s) + " needs " +
                        std::to_string(needed) + " numbers but only " +
                        std::to_string(available) +
                        " remain outside its own range (enable wrap-around)");
    }
  }

  out.corpus.sequences = corpus.sequences;
  detail::parallel_for(corpus.sequences.size(), [&](std::size_t s) {
    const std::size_t needed = positions[s].size();
    if (needed == 0) return;
    const std::size_t own = pool_start[s];
    const std::size_t available = pool.size() - needed;
    // Index into the pool with this sequence's own extraction range excised.
    auto other = [&](std::size_t j) { return j < own ? pool[j] : pool[j + needed]; };
    // Wrapping only kicks in for sequences that would otherwise have no slice.
    const std::size_t starts = needed <= available ? available - needed + 1 : available;
    SplitMix64 rng(SplitMix64::derive(seed, s));
    const auto start = static_cast<std::size_t>(rng.below(starts));
    auto& seq = out.corpus.sequences[s];
    for (std::size_t i = 0; i < needed; ++i) {
      seq[positions[s][i]] = other((start + i) % available);
    }
  });
  return out;
}

PerturbedCorpus unigram_replace(const TokenCorpus& corpus, std::uint64_t seed) {
  PerturbedCorpus out = copy_shell(corpus, "unigram");
  out.provenance.seed = seed;
  std::map<std::uint32_t, std::uint64_t> counts;
  for (const auto& seq : corpus.sequences) {
    for (auto t : seq) {
      if (corpus.is_number(t)) ++counts[t];
    }
  }
  if (counts.empty()) throw DomainError("unigram_replace: corpus contains no number tokens");
  std::vector<std::uint32_t> tokens;
  std::vector<std::uint64_t> cumulative;
  std::uint64_t total = 0;
  for (const auto& [token, count] : counts) {
    total += count;
    tokens.push_back(token);
    cumulative.push_back(total);
  }

  out.corpus.sequences = corpus.sequences;
  detail::parallel_for(corpus.sequences.size(), [&](std::size_t s) {
    SplitMix64 rng(SplitMix64::derive(seed, s));
    for (auto& t : out.corpus.sequences[s]) {
      if (!corpus.is_number(t)) continue;
      const std::uint64_t draw = rng.below(total);
      const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), draw);
      t = tokens[static_cast<std::size_t>(it - cumulative.begin())];
    }
  });
  return out;
}

MarginalAudit marginal_audit(const TokenCorpus& before, const PerturbedCorpus& after) {
  if (before.number_vocab != after.corpus.number_vocab) {
    throw DomainError("marginal_audit: number vocabularies differ");
  }
  const auto& vocab = before.number_vocab;
  std::map<std::uint32_t, std::uint64_t> c_before, c_after;
  using Bigram = std::pair<std::uint32_t, std::uint32_t>;
  std::map<Bigram, std::uint64_t> b_before, b_after;

  auto tally = [&](const TokenCorpus& corpus, auto& counts, auto& bigrams) {
    std::uint64_t total = 0;
    for (const auto& seq : corpus.sequences) {
      std::optional<std::uint32_t> previous;
      for (auto t : seq) {
        if (!vocab.contains(t)) continue;
        ++counts[t];
        ++total;
        if (previous) ++bigrams[{*previous, t}];
        previous = t;
      }
    }
    return total;
  };
  const std::uint64_t total_before = tally(before, c_before, b_before);
  const std::uint64_t total_after = tally(after.corpus, c_after, b_after);
  if (total_before == 0) throw DomainError("marginal_audit: no number tokens before");

  MarginalAudit audit;
  for (const auto& [token, value] : vocab) {
    TokenDelta d;
    d.token = token;
    d.value = value;
    d.count_before = c_before.contains(token) ? c_before[token] : 0;
    d.count_after = c_after.contains(token) ? c_after[token] : 0;
    d.p_before = static_cast<double>(d.count_before) / static_cast<double>(total_before);
    d.p_after = total_after == 0
                    ? 0.0
                    : static_cast<double>(d.count_after) / static_cast<double>(total_after);
    d.delta = d.p_after - d.p_before;
    audit.tv_distance += 0.5 * std::abs(d.delta);
    audit.sum_p_squared += d.p_before * d.p_before;
    audit.tokens.push_back(d);
  }

  std::uint64_t pairs = 0, shared = 0;
  for (const auto& [bigram, count] : b_before) {
    pairs += count;
    const auto it = b_after.find(bigram);
    if (it != b_after.end()) shared += std::min(count, it->second);
  }
  audit.bigrams_before = pairs;
  audit.bigram_overlap = pairs == 0 ? 1.0 : static_cast<double>(shared) / static_cast<double>(pairs);

  const auto& lhs = before.sequences;
  const auto& rhs = after.corpus.sequences;
  audit.aligned = lhs.size() == rhs.size() &&
                  std::equal(lhs.begin(), lhs.end(), rhs.begin(),
                             [](const auto& a, const auto& b) { return a.size() == b.size(); });
  if (!audit.aligned) return audit;

  std::uint64_t slots = 0, kept = 0, pair_slots = 0, pairs_kept = 0;
  bool text_identical = true, positions_identical = true;
  for (std::size_t s = 0; s < lhs.size(); ++s) {
    std::optional<std::size_t> previous;
    for (std::size_t i = 0; i < lhs[s].size(); ++i) {
      const bool was_number = vocab.contains(lhs[s][i]);
      if (was_number != vocab.contains(rhs[s][i])) positions_identical = false;
      if (!was_number) {
        if (lhs[s][i] != rhs[s][i]) text_identical = false;
        continue;
      }
      ++slots;
      kept += lhs[s][i] == rhs[s][i];
      if (previous) {
        ++pair_slots;
        pairs_kept += lhs[s][*previous] == rhs[s][*previous] && lhs[s][i] == rhs[s][i];
      }
      previous = i;
    }
  }
  audit.number_survival = static_cast<double>(kept) / static_cast<double>(slots);
  audit.bigram_survival =
      pair_slots == 0 ? 1.0 : static_cast<double>(pairs_kept) / static_cast<double>(pair_slots);
  audit.text_identical = text_identical;
  audit.number_positions_identical = positions_identical;
  return audit;
}

}  // namespace fprobe

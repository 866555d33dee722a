#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fprobe/embedding_io.hpp"

namespace fprobe {

/// Attention segmentation of one sequence.
///
/// loss_mask[i] = 1 iff token i+1 exists and lies in the same segment as
/// token i, i.e. the next-token prediction made at position i stays inside
/// one segment. It is therefore 0 at the last token of every segment.
struct SequencePlan {
  std::vector<std::size_t> boundaries;  ///< segment start indices; first is 0
  std::vector<std::uint32_t> segment_id;
  std::vector<std::uint32_t> position_id;  ///< resets to 0 at each boundary
  std::vector<std::uint8_t> loss_mask;

  static SequencePlan from_boundaries(std::vector<std::size_t> boundaries, std::size_t length);
};

struct SegmentPlan {
  std::vector<SequencePlan> sequences;
};

struct Provenance {
  std::string perturbation;
  std::map<std::string, std::string> parameters;
  std::optional<std::uint64_t> seed;
};

struct PerturbedCorpus {
  TokenCorpus corpus;
  std::optional<SegmentPlan> plan;
  Provenance provenance;
  /// context_window only: (source sequence, start offset) of each window.
  std::vector<std::pair<std::size_t, std::size_t>> window_source;
};

/// Segment boundary for a text gap between two number tokens: with gap
/// indices g0..g1 the boundary is g0 + ceil((g1 - g0 + 1) / 2), so an odd gap
/// leaves the extra token in the left segment. `next_number` is g1 + 1.
std::size_t midpoint_boundary(std::size_t previous_number, std::size_t next_number);

/// Caps every segment at k number tokens. Numbers are grouped greedily from
/// the start of each sequence; a boundary sits at the midpoint of the text
/// between consecutive groups. Tokens are untouched. Throws DomainError for k = 0.
PerturbedCorpus isolate_k(const TokenCorpus& corpus, std::size_t k);

/// Each length-L sequence becomes floor(L / l) windows of length l; the
/// remainder is dropped. Throws DomainError for l < 2 or when every sequence
/// is shorter than l.
PerturbedCorpus context_window(const TokenCorpus& corpus, std::size_t window);

/// Overwrites each sequence's number tokens with a contiguous, order-preserving
/// slice of the corpus-wide number stream (built in corpus order) with the
/// sequence's own numbers removed. Starts are uniform and independent per
/// sequence. Throws DomainError when a sequence needs more numbers than the
/// rest of the corpus holds, unless `allow_wrap` lets such slices wrap around;
/// sequences that fit never wrap, so the flag does not change their output.
PerturbedCorpus swap_numbers(const TokenCorpus& corpus, std::uint64_t seed,
                             bool allow_wrap = false);

/// Resamples every number token i.i.d. from the corpus-wide empirical
/// marginal over number tokens. Throws DomainError if no number token occurs.
PerturbedCorpus unigram_replace(const TokenCorpus& corpus, std::uint64_t seed);

struct TokenDelta {
  std::uint32_t token = 0;
  std::int64_t value = 0;
  std::uint64_t count_before = 0;
  std::uint64_t count_after = 0;
  double p_before = 0.0;
  double p_after = 0.0;
  double delta = 0.0;  ///< p_after - p_before
};

struct MarginalAudit {
  std::vector<TokenDelta> tokens;  ///< every number token, ascending id
  double tv_distance = 0.0;        ///< 0.5 sum |p_after - p_before|
  double sum_p_squared = 0.0;      ///< collision probability of the before-marginal
  /// Aggregate number-bigram preservation: sum_ab min(c_before, c_after) / pairs_before,
  /// over adjacent pairs in each sequence's number subsequence.
  double bigram_overlap = 0.0;
  std::size_t bigrams_before = 0;
  bool aligned = false;  ///< same sequence count and lengths; positional stats below
  std::optional<double> number_survival;  ///< fraction of number slots unchanged
  std::optional<double> bigram_survival;  ///< fraction of adjacent number pairs unchanged
  std::optional<bool> text_identical;     ///< every non-number token bit-identical
  std::optional<bool> number_positions_identical;
};

/// Throws DomainError when the number vocabularies differ or before has no numbers.
MarginalAudit marginal_audit(const TokenCorpus& before, const PerturbedCorpus& after);

}  // namespace fprobe

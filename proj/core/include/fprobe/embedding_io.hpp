#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace fprobe {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// N x d table of token embeddings; row n is e(n).
///
/// Immutable after construction. The constructor enforces N >= 2, d >= 1 and
/// finite entries, so every EmbeddingTable in the program is valid.
class EmbeddingTable {
 public:
  EmbeddingTable(RowMatrix values, std::string label = {});

  std::size_t n_tokens() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(values_.cols()); }
  const RowMatrix& values() const noexcept { return values_; }
  const std::string& label() const noexcept { return label_; }

  friend bool operator==(const EmbeddingTable& a, const EmbeddingTable& b);

 private:
  RowMatrix values_;
  std::string label_;
};

enum class TableFormat {
  raw_f32,  ///< one-line JSON header, then little-endian float32 payload
  npy,      ///< NumPy .npy v1/v2, 2-D float32 or float64
};

/// Sniffs the magic bytes; anything that is not .npy is treated as raw-f32.
TableFormat detect_format(const std::filesystem::path& path);

EmbeddingTable load_embeddings(const std::filesystem::path& path, TableFormat format);
EmbeddingTable load_embeddings(const std::filesystem::path& path);

/// Values are rounded to float32 on write, so load(save(t)) == t bit-exactly
/// whenever t holds float32-representable values. A non-empty `manifest` is
/// recorded in the raw-f32 header; .npy has no room for it.
void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path,
                     TableFormat format = TableFormat::raw_f32,
                     std::string_view manifest = {});

/// Counts and probabilities of number values 0..N-1.
struct TokenFrequencyTable {
  std::vector<std::uint64_t> counts;
  std::vector<double> probs;

  /// Throws DomainError when the counts are empty or sum to zero.
  static TokenFrequencyTable from_counts(std::vector<std::uint64_t> counts);
  std::size_t size() const noexcept { return counts.size(); }
};

/// Token-id sequences plus the external map identifying number tokens.
struct TokenCorpus {
  std::vector<std::vector<std::uint32_t>> sequences;
  std::size_t vocab_size = 0;
  std::map<std::uint32_t, std::int64_t> number_vocab;  ///< token id -> number value

  bool is_number(std::uint32_t token) const { return number_vocab.contains(token); }
  /// Throws DomainError if a token id or vocab key is >= vocab_size.
  void validate() const;
  std::size_t total_tokens() const noexcept;
};

/// Newline-delimited JSON, one array of token ids per line. A JSON object on
/// the first line is a metadata header and is skipped on load.
std::vector<std::vector<std::uint32_t>> load_sequences(const std::filesystem::path& path);
void save_sequences(std::span<const std::vector<std::uint32_t>> sequences,
                    const std::filesystem::path& path, std::string_view header_json = {});

/// JSON object mapping token-id strings to integer values.
std::map<std::uint32_t, std::int64_t> load_number_vocab(const std::filesystem::path& path);
void save_number_vocab(const std::map<std::uint32_t, std::int64_t>& vocab,
                       const std::filesystem::path& path);

/// Loads sequences and vocabulary. vocab_size defaults to one past the
/// largest id seen in either file.
TokenCorpus load_corpus(const std::filesystem::path& sequences_path,
                        const std::filesystem::path& vocab_path,
                        std::optional<std::size_t> vocab_size = std::nullopt);

/// counts[v] = occurrences of the token encoding value v. `n_values` defaults
/// to one past the largest value in the number vocabulary. Throws DomainError
/// for a number value outside [0, n_values) or when no number token occurs.
TokenFrequencyTable count_number_tokens(const TokenCorpus& corpus,
                                        std::optional<std::size_t> n_values = std::nullopt);

/// N x 1 table with row n holding p_n.
EmbeddingTable frequency_embedding(const TokenFrequencyTable& freq);

}  // namespace fprobe

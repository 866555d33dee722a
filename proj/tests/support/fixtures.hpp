#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "fprobe/embedding_io.hpp"

namespace fprobe::fixture {

RowMatrix gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed);

/// Number-token counts with a decreasing block trend and a mod-10 preference:
/// counts(n) = 3000 - 21 floor(n / 10) + 5 (9 - n mod 10). Round numbers are
/// the most frequent in each decade, yet the decade trend interleaves the
/// residue classes on the line. Valid for n_values <= 1420.
std::vector<std::uint64_t> periodic_counts(std::size_t n_values);

/// Corpus realizing the given counts: text ids 0..9, number value v is token
/// id 10 + v. Numbers are shuffled and alternate with text tokens.
TokenCorpus corpus_from_counts(const std::vector<std::uint64_t>& counts, std::uint64_t seed,
                               std::size_t sequence_length = 1024);

/// Random corpus for perturbation tests. Text ids 0..99, number value v is
/// token id 100 + v with Zipf-like weights over n_values values. Lengths are
/// uniform in [min_length, max_length].
TokenCorpus random_corpus(std::size_t n_sequences, std::uint64_t seed, std::size_t min_length,
                          std::size_t max_length, double number_rate,
                          std::size_t n_values = 1000);

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& name);

}  // namespace fprobe::fixture

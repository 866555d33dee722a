#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "fprobe/rng.hpp"

namespace fprobe::fixture {

RowMatrix gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  SplitMix64 rng(seed);
  RowMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.normal();
  }
  return m;
}

std::vector<std::uint64_t> periodic_counts(std::size_t n_values) {
  if (n_values > 1420) throw std::invalid_argument("periodic_counts: n_values too large");
  std::vector<std::uint64_t> counts(n_values);
  for (std::size_t n = 0; n < n_values; ++n) {
    counts[n] = 3000 - 21 * (n / 10) + 5 * (9 - n % 10);
  }
  return counts;
}

TokenCorpus corpus_from_counts(const std::vector<std::uint64_t>& counts, std::uint64_t seed,
                               std::size_t sequence_length) {
  std::vector<std::uint32_t> numbers;
  for (std::size_t v = 0; v < counts.size(); ++v) {
    numbers.insert(numbers.end(), counts[v], static_cast<std::uint32_t>(10 + v));
  }
  SplitMix64 rng(seed);
  rng.shuffle(std::span<std::uint32_t>(numbers));
  TokenCorpus corpus;
  corpus.vocab_size = 10 + counts.size();
  for (std::size_t v = 0; v < counts.size(); ++v) {
    corpus.number_vocab[static_cast<std::uint32_t>(10 + v)] = static_cast<std::int64_t>(v);
  }
  std::vector<std::uint32_t> seq;
  for (std::size_t i = 0; i < numbers.size(); ++i) {
    seq.push_back(static_cast<std::uint32_t>(i % 10));
    seq.push_back(numbers[i]);
    if (seq.size() >= sequence_length) corpus.sequences.push_back(std::exchange(seq, {}));
  }
  if (!seq.empty()) corpus.sequences.push_back(std::move(seq));
  return corpus;
}

TokenCorpus random_corpus(std::size_t n_sequences, std::uint64_t seed, std::size_t min_length,
                          std::size_t max_length, double number_rate, std::size_t n_values) {
  std::vector<double> cdf(n_values);
  double total = 0.0;
  for (std::size_t v = 0; v < n_values; ++v) {
    total += 1.0 / std::pow(static_cast<double>(v) + 1.0, 0.8);
    cdf[v] = total;
  }
  SplitMix64 rng(seed);
  TokenCorpus corpus;
  corpus.vocab_size = 100 + n_values;
  for (std::size_t v = 0; v < n_values; ++v) {
    corpus.number_vocab[static_cast<std::uint32_t>(100 + v)] = static_cast<std::int64_t>(v);
  }
  corpus.sequences.resize(n_sequences);
  for (auto& seq : corpus.sequences) {
    const std::size_t length = min_length + rng.below(max_length - min_length + 1);
    seq.resize(length);
    for (auto& t : seq) {
      if (rng.uniform() < number_rate) {
        const double u = rng.uniform() * total;
        const auto v = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) -
                                                cdf.begin());
        t = static_cast<std::uint32_t>(100 + std::min(v, n_values - 1));
      } else {
        t = static_cast<std::uint32_t>(rng.below(100));
      }
    }
  }
  return corpus;
}

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("fprobe-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fprobe::fixture

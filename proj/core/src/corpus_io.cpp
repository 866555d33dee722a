#include <fstream>
#include <sstream>

#include "fprobe/embedding_io.hpp"
#include "fprobe/error.hpp"
#include "json.hpp"

namespace fprobe {

void TokenCorpus::validate() const {
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    for (auto token : sequences[s]) {
      if (token >= vocab_size) {
        throw DomainError("sequence " + std::to_string(s) + " holds token id " +
                          std::to_string(token) + " >= vocab_size " +
                          std::to_string(vocab_size));
      }
    }
  }
  for (const auto& [token, value] : number_vocab) {
    if (token >= vocab_size) {
      throw DomainError("number vocab key " + std::to_string(token) +
                        " >= vocab_size " + std::to_string(vocab_size));
    }
  }
}

std::size_t TokenCorpus::total_tokens() const noexcept {
  std::size_t total = 0;
  for (const auto& seq : sequences) total += seq.size();
  return total;
}

std::vector<std::vector<std::uint32_t>> load_sequences(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::vector<std::uint32_t>> sequences;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (sequences.empty() && j.is_object()) continue;
      if (!j.is_array()) throw FormatError("not an array");
      std::vector<std::uint32_t> seq;
      seq.reserve(j.size());
      for (const auto& t : j) {
        if (!t.is_number_unsigned() || t.get<std::uint64_t>() > UINT32_MAX) {
          throw FormatError("token ids must be non-negative 32-bit integers");
        }
        seq.push_back(t.get<std::uint32_t>());
      }
      sequences.push_back(std::move(seq));
    } catch (const std::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return sequences;
}

void save_sequences(std::span<const std::vector<std::uint32_t>> sequences,
                    const std::filesystem::path& path, std::string_view header_json) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  if (!header_json.empty()) out << header_json << '\n';
  for (const auto& seq : sequences) {
    out << '[';
    for (std::size_t i = 0; i < seq.size(); ++i) {
      if (i) out << ',';
      out << seq[i];
    }
    out << "]\n";
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::map<std::uint32_t, std::int64_t> load_number_vocab(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw FormatError(path.string() + ": number vocab must be an object");
  std::map<std::uint32_t, std::int64_t> vocab;
  for (const auto& [key, value] : j.items()) {
    std::uint32_t token = 0;
    try {
      std::size_t used = 0;
      const auto parsed = std::stoull(key, &used);
      if (used != key.size() || parsed > UINT32_MAX) throw std::out_of_range(key);
      token = static_cast<std::uint32_t>(parsed);
    } catch (const std::exception&) {
      throw FormatError(path.string() + ": key '" + key + "' is not a token id");
    }
    if (!value.is_number_integer()) {
      throw FormatError(path.string() + ": value for token " + key + " is not an integer");
    }
    vocab.emplace(token, value.get<std::int64_t>());
  }
  return vocab;
}

void save_number_vocab(const std::map<std::uint32_t, std::int64_t>& vocab,
                       const std::filesystem::path& path) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [token, value] : vocab) j[std::to_string(token)] = value;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << j.dump() << '\n';
}

TokenCorpus load_corpus(const std::filesystem::path& sequences_path,
                        const std::filesystem::path& vocab_path,
                        std::optional<std::size_t> vocab_size) {
  TokenCorpus corpus;
  corpus.sequences = load_sequences(sequences_path);
  corpus.number_vocab = load_number_vocab(vocab_path);
  if (vocab_size) {
    corpus.vocab_size = *vocab_size;
  } else {
    std::size_t max_id = 0;
    for (const auto& seq : corpus.sequences) {
      for (auto t : seq) max_id = std::max<std::size_t>(max_id, t + 1);
    }
    if (!corpus.number_vocab.empty()) {
      max_id = std::max<std::size_t>(max_id, corpus.number_vocab.rbegin()->first + 1);
    }
    corpus.vocab_size = max_id;
  }
  corpus.validate();
  return corpus;
}

TokenFrequencyTable count_number_tokens(const TokenCorpus& corpus,
                                        std::optional<std::size_t> n_values) {
  std::size_t n = 0;
  if (n_values) {
    n = *n_values;
  } else {
    for (const auto& [token, value] : corpus.number_vocab) {
      if (value < 0) {
        throw DomainError("number value " + std::to_string(value) + " for token " +
                          std::to_string(token) + " is negative");
      }
      n = std::max<std::size_t>(n, static_cast<std::size_t>(value) + 1);
    }
  }
  std::vector<std::uint64_t> counts(n, 0);
  for (const auto& seq : corpus.sequences) {
    for (auto token : seq) {
      const auto it = corpus.number_vocab.find(token);
      if (it == corpus.number_vocab.end()) continue;
      if (it->second < 0 || static_cast<std::size_t>(it->second) >= n) {
        throw DomainError("number value " + std::to_string(it->second) + " outside 0.." +
                          std::to_string(n == 0 ? 0 : n - 1));
      }
      ++counts[static_cast<std::size_t>(it->second)];
    }
  }
  return TokenFrequencyTable::from_counts(std::move(counts));
}

}  // namespace fprobe

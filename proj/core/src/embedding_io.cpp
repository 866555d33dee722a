#include "fprobe/embedding_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <regex>
#include <sstream>

#include "fprobe/error.hpp"
#include "json.hpp"

namespace fprobe {

namespace {

constexpr std::size_t kMaxHeaderBytes = 1 << 16;
constexpr std::array<char, 6> kNpyMagic = {'\x93', 'N', 'U', 'M', 'P', 'Y'};

std::string describe_rows(const std::vector<std::size_t>& rows) {
  std::ostringstream out;
  out << "non-finite embedding values at row";
  if (rows.size() > 1) out << 's';
  const std::size_t shown = std::min<std::size_t>(rows.size(), 8);
  for (std::size_t i = 0; i < shown; ++i) out << (i ? ", " : " ") << rows[i];
  if (rows.size() > shown) out << " (+" << rows.size() - shown << " more)";
  return out.str();
}

template <typename T>
T from_little_endian(const char* bytes) {
  T value;
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(&value, bytes, sizeof(T));
  } else {
    std::array<char, sizeof(T)> swapped;
    std::reverse_copy(bytes, bytes + sizeof(T), swapped.begin());
    std::memcpy(&value, swapped.data(), sizeof(T));
  }
  return value;
}

template <typename T>
void append_little_endian(std::string& out, T value) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native != std::endian::little) {
    std::reverse(bytes.begin(), bytes.end());
  }
  out.append(bytes.data(), bytes.size());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return data;
}

void write_file(const std::filesystem::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

RowMatrix decode_payload(std::string_view payload, std::size_t rows, std::size_t cols,
                         std::size_t elem_size) {
  const std::size_t expected = rows * cols * elem_size;
  if (payload.size() != expected) {
    throw FormatError("payload length mismatch: header declares " + std::to_string(rows) +
                      "x" + std::to_string(cols) + " (" + std::to_string(expected) +
                      " bytes), file holds " + std::to_string(payload.size()) + " bytes");
  }
  RowMatrix values(rows, cols);
  const char* p = payload.data();
  for (std::size_t i = 0; i < rows * cols; ++i, p += elem_size) {
    values.data()[i] = elem_size == 4 ? static_cast<double>(from_little_endian<float>(p))
                                      : from_little_endian<double>(p);
  }
  return values;
}

EmbeddingTable load_raw(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  const auto newline = data.find('\n');
  if (newline == std::string::npos || newline > kMaxHeaderBytes) {
    throw FormatError("malformed header: missing newline-terminated JSON line in " +
                      path.string());
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(data.substr(0, newline));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed header: ") + e.what());
  }
  if (!header.is_object() || !header.contains("n_tokens") || !header.contains("dim") ||
      !header["n_tokens"].is_number_unsigned() || !header["dim"].is_number_unsigned()) {
    throw FormatError("malformed header: n_tokens and dim must be non-negative integers");
  }
  if (header.contains("dtype") && header["dtype"] != "float32") {
    throw FormatError("malformed header: only dtype float32 is supported");
  }
  const auto rows = header["n_tokens"].get<std::size_t>();
  const auto cols = header["dim"].get<std::size_t>();
  std::string label;
  if (header.contains("label") && header["label"].is_string()) {
    label = header["label"].get<std::string>();
  }
  auto values = decode_payload(std::string_view(data).substr(newline + 1), rows, cols, 4);
  return EmbeddingTable(std::move(values), std::move(label));
}

struct NpyHeader {
  std::size_t elem_size = 0;
  bool fortran_order = false;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t payload_offset = 0;
};

NpyHeader parse_npy_header(const std::string& data) {
  if (data.size() < 10 || !std::equal(kNpyMagic.begin(), kNpyMagic.end(), data.begin())) {
    throw FormatError("malformed header: missing .npy magic");
  }
  const auto major = static_cast<unsigned char>(data[6]);
  std::size_t header_len = 0;
  std::size_t offset = 0;
  if (major == 1) {
    header_len = from_little_endian<std::uint16_t>(data.data() + 8);
    offset = 10;
  } else if (major == 2 || major == 3) {
    if (data.size() < 12) throw FormatError("malformed header: truncated .npy preamble");
    header_len = from_little_endian<std::uint32_t>(data.data() + 8);
    offset = 12;
  } else {
    throw FormatError("malformed header: unsupported .npy version " + std::to_string(major));
  }
  if (offset + header_len > data.size()) {
    throw FormatError("malformed header: .npy header exceeds file length");
  }
  const std::string dict = data.substr(offset, header_len);

  NpyHeader h;
  h.payload_offset = offset + header_len;
  std::smatch m;
  static const std::regex descr_re(R"('descr'\s*:\s*'([<>|=])([a-z])(\d+)')");
  static const std::regex fortran_re(R"('fortran_order'\s*:\s*(True|False))");
  static const std::regex shape_re(R"('shape'\s*:\s*\(\s*(\d+)\s*,\s*(\d+)\s*,?\s*\))");
  if (!std::regex_search(dict, m, descr_re)) throw FormatError("malformed header: no descr");
  if (m[2] != "f" || (m[3] != "4" && m[3] != "8") || m[1] == ">") {
    throw FormatError("malformed header: dtype must be little-endian float32/float64, got " +
                      m[0].str());
  }
  h.elem_size = m[3] == "4" ? 4 : 8;
  if (!std::regex_search(dict, m, fortran_re)) {
    throw FormatError("malformed header: no fortran_order");
  }
  h.fortran_order = m[1] == "True";
  if (!std::regex_search(dict, m, shape_re)) {
    throw FormatError("malformed header: shape must be a 2-D tuple");
  }
  h.rows = std::stoull(m[1].str());
  h.cols = std::stoull(m[2].str());
  return h;
}

EmbeddingTable load_npy(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  const NpyHeader h = parse_npy_header(data);
  const auto payload = std::string_view(data).substr(h.payload_offset);
  if (!h.fortran_order) {
    return EmbeddingTable(decode_payload(payload, h.rows, h.cols, h.elem_size),
                          path.filename().string());
  }
  RowMatrix transposed = decode_payload(payload, h.cols, h.rows, h.elem_size);
  return EmbeddingTable(transposed.transpose(), path.filename().string());
}

std::string encode_f32(const RowMatrix& values) {
  std::string out;
  out.reserve(static_cast<std::size_t>(values.size()) * 4);
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    append_little_endian(out, static_cast<float>(values.data()[i]));
  }
  return out;
}

}  // namespace

NonFiniteError::NonFiniteError(std::vector<std::size_t> rows)
    : FormatError(describe_rows(rows)), rows_(std::move(rows)) {}

EmbeddingTable::EmbeddingTable(RowMatrix values, std::string label)
    : values_(std::move(values)), label_(std::move(label)) {
  if (values_.rows() < 2) {
    throw DomainError("embedding table needs at least 2 tokens, got " +
                      std::to_string(values_.rows()));
  }
  if (values_.cols() < 1) throw DomainError("embedding table needs dim >= 1");
  std::vector<std::size_t> bad;
  for (Eigen::Index r = 0; r < values_.rows(); ++r) {
    if (!values_.row(r).allFinite()) bad.push_back(static_cast<std::size_t>(r));
  }
  if (!bad.empty()) throw NonFiniteError(std::move(bad));
}

bool operator==(const EmbeddingTable& a, const EmbeddingTable& b) {
  if (a.values_.rows() != b.values_.rows() || a.values_.cols() != b.values_.cols()) {
    return false;
  }
  return std::memcmp(a.values_.data(), b.values_.data(),
                     static_cast<std::size_t>(a.values_.size()) * sizeof(double)) == 0;
}

TableFormat detect_format(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::array<char, 6> head{};
  in.read(head.data(), head.size());
  return in.gcount() == 6 && head == kNpyMagic ? TableFormat::npy : TableFormat::raw_f32;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path, TableFormat format) {
  return format == TableFormat::npy ? load_npy(path) : load_raw(path);
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  return load_embeddings(path, detect_format(path));
}

void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path,
                     TableFormat format, std::string_view manifest) {
  std::string out;
  if (format == TableFormat::raw_f32) {
    nlohmann::ordered_json header;
    header["n_tokens"] = table.n_tokens();
    header["dim"] = table.dim();
    header["label"] = table.label();
    if (!manifest.empty()) header["manifest"] = manifest;
    out = header.dump() + '\n';
  } else {
    std::string dict = "{'descr': '<f4', 'fortran_order': False, 'shape': (" +
                       std::to_string(table.n_tokens()) + ", " +
                       std::to_string(table.dim()) + "), }";
    // Preamble (10 bytes) + dict + padding + '\n' must be a multiple of 64.
    const std::size_t unpadded = 10 + dict.size() + 1;
    dict.append((64 - unpadded % 64) % 64, ' ');
    dict.push_back('\n');
    out.append(kNpyMagic.data(), kNpyMagic.size());
    out.push_back('\x01');
    out.push_back('\x00');
    append_little_endian(out, static_cast<std::uint16_t>(dict.size()));
    out += dict;
  }
  out += encode_f32(table.values());
  write_file(path, out);
}

TokenFrequencyTable TokenFrequencyTable::from_counts(std::vector<std::uint64_t> counts) {
  if (counts.empty()) throw DomainError("frequency table needs at least one value");
  long double total = 0;
  for (auto c : counts) total += static_cast<long double>(c);
  if (total == 0) {
    throw DomainError("no number tokens counted; probabilities are undefined");
  }
  TokenFrequencyTable t;
  t.probs.reserve(counts.size());
  for (auto c : counts) t.probs.push_back(static_cast<double>(c / total));
  t.counts = std::move(counts);
  return t;
}

EmbeddingTable frequency_embedding(const TokenFrequencyTable& freq) {
  RowMatrix values(static_cast<Eigen::Index>(freq.size()), 1);
  for (std::size_t n = 0; n < freq.size(); ++n) {
    values(static_cast<Eigen::Index>(n), 0) = freq.probs[n];
  }
  return EmbeddingTable(std::move(values), "token-frequency");
}

}  // namespace fprobe

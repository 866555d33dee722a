#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace fprobe::cli {

inline constexpr const char* kManifestSchema = "fprobe.manifest.v1";

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Records what a subcommand was asked to do and what it wrote. Every output
/// names the manifest by file name, so outputs stay byte-identical across runs
/// while the manifest itself carries the timing.
class RunManifest {
 public:
  RunManifest(std::string subcommand, std::vector<std::string> argv,
              std::filesystem::path prefix);

  /// Output path `<prefix>.<suffix>`, recorded in the manifest.
  std::filesystem::path output(const std::string& suffix);
  void input(const std::filesystem::path& path);
  void parameter(std::string name, std::string value);
  void seed(std::uint64_t seed);
  void error(std::string message);

  /// File name written into every output.
  std::string ref() const;
  std::filesystem::path path() const;
  /// Writes `<prefix>.manifest.json` with the elapsed wall-clock time.
  void write(int exit_status) const;

 private:
  std::string subcommand_;
  std::vector<std::string> argv_;
  std::filesystem::path prefix_;
  std::vector<std::pair<std::string, std::string>> parameters_;
  std::vector<std::pair<std::string, std::string>> inputs_;
  std::vector<std::string> outputs_;
  std::vector<std::uint64_t> seeds_;
  std::vector<std::string> errors_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace fprobe::cli

#include "manifest.hpp"

#include <array>
#include <memory>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "fprobe/error.hpp"
#include "json.hpp"

namespace fprobe::cli {

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 initialisation failed");
  }
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &length);
  std::ostringstream hex;
  for (unsigned int i = 0; i < length; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

RunManifest::RunManifest(std::string subcommand, std::vector<std::string> argv,
                         std::filesystem::path prefix)
    : subcommand_(std::move(subcommand)),
      argv_(std::move(argv)),
      prefix_(std::move(prefix)),
      start_(std::chrono::steady_clock::now()) {
  if (prefix_.has_parent_path()) std::filesystem::create_directories(prefix_.parent_path());
}

std::filesystem::path RunManifest::output(const std::string& suffix) {
  auto path = prefix_;
  path += "." + suffix;
  outputs_.push_back(path.string());
  return path;
}

void RunManifest::input(const std::filesystem::path& path) {
  inputs_.emplace_back(path.string(), sha256_file(path));
}

void RunManifest::parameter(std::string name, std::string value) {
  parameters_.emplace_back(std::move(name), std::move(value));
}

void RunManifest::seed(std::uint64_t seed) { seeds_.push_back(seed); }

void RunManifest::error(std::string message) { errors_.push_back(std::move(message)); }

std::filesystem::path RunManifest::path() const {
  auto path = prefix_;
  path += ".manifest.json";
  return path;
}

std::string RunManifest::ref() const { return path().filename().string(); }

void RunManifest::write(int exit_status) const {
  using Json = nlohmann::ordered_json;
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  Json j;
  j["schema"] = kManifestSchema;
  j["tool_version"] = FPROBE_VERSION;
  j["subcommand"] = subcommand_;
  j["argv"] = argv_;
  j["working_directory"] = std::filesystem::current_path().string();
  Json params = Json::object();
  for (const auto& [k, v] : parameters_) params[k] = v;
  j["parameters"] = std::move(params);
  Json inputs = Json::array();
  for (const auto& [p, digest] : inputs_) inputs.push_back({{"path", p}, {"sha256", digest}});
  j["inputs"] = std::move(inputs);
  j["seeds"] = seeds_;
  j["outputs"] = outputs_;
  j["errors"] = errors_;
  j["exit_status"] = exit_status;
  j["wall_clock_seconds"] = seconds;
  std::ofstream out(path(), std::ios::trunc);
  if (!out) throw IoError("cannot write manifest " + path().string());
  out << j.dump(2) << '\n';
}

}  // namespace fprobe::cli

#include "gpcbf_cli/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <ctime>
#include <memory>
#include <stdexcept>

namespace gpcbf::cli {

namespace {

std::string to_hex(const unsigned char* data, unsigned len) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned i = 0; i < len; ++i) {
    out += kDigits[data[i] >> 4];
    out += kDigits[data[i] & 0xf];
  }
  return out;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::array<char, 32> buf{};
  std::strftime(buf.data(), buf.size(), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf.data();
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  return to_hex(digest, len);
}

std::string sha256_file(const std::filesystem::path& path) {
  return sha256_hex(read_text_file(path));
}

RunManifest::RunManifest(std::string command)
    : start_(std::chrono::steady_clock::now()) {
  doc_["tool"] = "gpcbf";
  doc_["tool_version"] = kToolVersion;
  doc_["command"] = std::move(command);
  doc_["started_utc"] = utc_now();
  doc_["config"] = Json::object();
  doc_["seeds"] = Json::object();
  doc_["inputs"] = Json::array();
  doc_["outputs"] = Json::array();
  doc_["stages"] = Json::array();
  doc_["interpretation"] = Json::object();
}

void RunManifest::add_seed(const std::string& name, std::uint64_t seed) {
  doc_["seeds"][name] = seed;
}

void RunManifest::add_input(const std::filesystem::path& path) {
  doc_["inputs"].push_back({{"path", path.string()}, {"sha256", sha256_file(path)}});
}

void RunManifest::add_output(const std::filesystem::path& path) {
  doc_["outputs"].push_back({{"path", path.string()}});
}

void RunManifest::stage(const std::string& name, const std::string& outcome,
                        double seconds) {
  doc_["stages"].push_back(
      {{"name", name}, {"outcome", outcome}, {"seconds", seconds}});
}

void RunManifest::set_outcome(const std::string& outcome, int exit_code) {
  doc_["outcome"] = outcome;
  doc_["exit_code"] = exit_code;
}

void RunManifest::write(const std::filesystem::path& path) {
  for (auto& out : doc_["outputs"]) {
    out["sha256"] = sha256_file(out["path"].get<std::string>());
  }
  doc_["finished_utc"] = utc_now();
  doc_["wall_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  write_json_file(path, doc_);
}

std::filesystem::path manifest_path_for(const std::filesystem::path& output) {
  std::filesystem::path p = output;
  p.replace_extension();
  p += ".manifest.json";
  return p;
}

}  // namespace gpcbf::cli

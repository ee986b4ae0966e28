#include "fairboard/manifest.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <json.hpp>
#include <memory>

#include "fairboard/csv.hpp"
#include "fairboard/error.hpp"

namespace fairboard {

std::string sha256_hex(std::string_view data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1)
    throw Error(ErrorCode::IoFailure, "SHA-256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 15]);
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_text_file(path)); }

namespace {

std::string relative_to(const std::filesystem::path& p, const std::filesystem::path& base) {
  const auto rel = std::filesystem::path(p).lexically_normal().lexically_relative(base.lexically_normal());
  return (rel.empty() ? p : rel).generic_string();
}

}  // namespace

Manifest::Manifest(std::string stage, std::filesystem::path input_base, std::filesystem::path output_base)
    : stage_(std::move(stage)), input_base_(std::move(input_base)), output_base_(std::move(output_base)) {}

void Manifest::add_input(const std::filesystem::path& path) {
  inputs_.push_back({relative_to(path, input_base_), sha256_file(path)});
}

void Manifest::add_input_tree(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) add_input(f);
}

void Manifest::add_output(const std::filesystem::path& path) {
  outputs_.push_back({relative_to(path, output_base_), sha256_file(path)});
}

std::string Manifest::to_json() const {
  nlohmann::ordered_json j;
  j["stage"] = stage_;
  j["engine_version"] = kEngineVersion;
  j["parameters"] = nlohmann::ordered_json::parse(parameters_);
  auto entries = [](const std::vector<Entry>& v) {
    auto a = nlohmann::ordered_json::array();
    for (const auto& e : v) a.push_back({{"path", e.path}, {"sha256", e.sha256}});
    return a;
  };
  j["inputs"] = entries(inputs_);
  j["outputs"] = entries(outputs_);
  j["notes"] = notes_;
  return j.dump(2) + "\n";
}

std::filesystem::path Manifest::write() const {
  const auto path = output_base_ / "manifests" / (stage_ + ".json");
  write_text_file(path, to_json());
  return path;
}

std::string run_manifest_hash(const std::filesystem::path& output_dir) {
  const auto dir = output_dir / "manifests";
  if (!std::filesystem::is_directory(dir)) return "";
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  if (files.empty()) return "";
  std::sort(files.begin(), files.end());
  std::string joined;
  for (const auto& f : files) joined += f.filename().string() + ":" + sha256_file(f) + "\n";
  return sha256_hex(joined);
}

}  // namespace fairboard

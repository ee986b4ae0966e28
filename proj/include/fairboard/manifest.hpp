#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace fairboard {

inline constexpr const char* kEngineVersion = "0.1.0";

// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

// Per-stage record written to <output>/manifests/<stage>.json. Inputs are
// listed relative to the config directory, outputs relative to the output
// directory, so identical runs in different locations produce identical
// manifests. There are no timestamps.
class Manifest {
 public:
  Manifest(std::string stage, std::filesystem::path input_base, std::filesystem::path output_base);

  void add_input(const std::filesystem::path& path);
  // Adds every regular file below dir, in sorted order.
  void add_input_tree(const std::filesystem::path& dir);
  void add_output(const std::filesystem::path& path);
  void set_parameters(std::string parameters_json) { parameters_ = std::move(parameters_json); }
  void add_note(std::string note) { notes_.push_back(std::move(note)); }

  std::string to_json() const;
  // Writes the manifest and returns its path.
  std::filesystem::path write() const;

 private:
  struct Entry {
    std::string path;
    std::string sha256;
  };
  std::string stage_;
  std::filesystem::path input_base_;
  std::filesystem::path output_base_;
  std::string parameters_ = "{}";
  std::vector<Entry> inputs_;
  std::vector<Entry> outputs_;
  std::vector<std::string> notes_;
};

// SHA-256 over the sorted stage manifests of a run; empty when none exist.
std::string run_manifest_hash(const std::filesystem::path& output_dir);

}  // namespace fairboard

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace fairboard {

struct SynthOptions {
  int n_patients = 60;
  std::vector<std::string> models{"model_a", "model_b", "model_c"};
  // Predicts a single tumour-core label, so its NET metrics are missing.
  std::string two_class_model = "model_c";
  int n_oedema_only = 2;
  std::array<int, 3> dims{32, 40, 32};
  double spacing_mm = 4.0;
  std::uint64_t seed = 42;
};

// Writes a self-contained study below dir:
//   cohort.csv, masks/ground_truth/<patient>.nii.gz,
//   masks/<model>/<patient>.nii.gz, config.json (output_dir "out").
// Segmentation quality degrades with biopsy, subtotal resection and
// non-glioblastoma diagnoses, and differs between models.
void write_synthetic_study(const std::filesystem::path& dir, const SynthOptions& options = {});

}  // namespace fairboard

#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string_view>

#include "fairboard/volume.hpp"

namespace fairboard {

enum class Compartment { WT = 0, NET = 1, ET = 2, OED = 3 };

inline constexpr std::array<Compartment, 4> kCompartments{Compartment::WT, Compartment::NET, Compartment::ET,
                                                          Compartment::OED};

std::string_view name(Compartment c);
Compartment compartment_from_name(std::string_view s);

// Binary indicator volume for one tumour compartment.
struct CompartmentMask {
  Compartment compartment = Compartment::WT;
  Volume volume;

  std::size_t count() const;
  bool empty() const { return count() == 0; }
};

// Indexed by static_cast<int>(Compartment).
using CompartmentMasks = std::array<CompartmentMask, 4>;

// Integer label -> sub-compartment (NET, ET or OED). WT is always the union.
struct LabelMap {
  std::map<int, Compartment> labels;

  // 1 -> NET, 2 -> OED, 4 -> ET.
  static LabelMap defaults();
  // Lines of "label=COMPARTMENT" (or "COMPARTMENT=label"); '#' starts a comment.
  static LabelMap parse(std::string_view text);
  static LabelMap load(const std::filesystem::path& path);
};

CompartmentMasks extract_compartments(const Volume& labels, const LabelMap& label_map = LabelMap::defaults());

// True when the ground truth holds oedema and no tumour-core label.
bool is_oedema_only(const CompartmentMasks& masks);

// Nearest-neighbour resampling. Output voxel i pulls the source voxel nearest
// to its centre, c = (i + 0.5) * src / dst - 0.5, with ties rounded down.
CompartmentMask resample_mask(const CompartmentMask& m, const std::array<int, 3>& target_dims);

}  // namespace fairboard

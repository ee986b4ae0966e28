#include "fairboard/compartments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "fairboard/csv.hpp"
#include "fairboard/error.hpp"

namespace fairboard {

std::string_view name(Compartment c) {
  switch (c) {
    case Compartment::WT: return "WT";
    case Compartment::NET: return "NET";
    case Compartment::ET: return "ET";
    case Compartment::OED: return "OED";
  }
  return "?";
}

Compartment compartment_from_name(std::string_view s) {
  for (Compartment c : kCompartments)
    if (name(c) == s) return c;
  throw Error(ErrorCode::ParseError, "unknown compartment '" + std::string(s) + "'");
}

std::size_t CompartmentMask::count() const {
  return static_cast<std::size_t>(std::count_if(volume.data.begin(), volume.data.end(), [](double x) { return x != 0.0; }));
}

LabelMap LabelMap::defaults() {
  return LabelMap{{{1, Compartment::NET}, {2, Compartment::OED}, {4, Compartment::ET}}};
}

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool is_integer(const std::string& s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i)
    if (s[i] < '0' || s[i] > '9') return false;
  return true;
}

}  // namespace

LabelMap LabelMap::parse(std::string_view text) {
  LabelMap map;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::ParseError, "label map line " + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (!is_integer(key)) std::swap(key, value);
    if (!is_integer(key)) throw Error(ErrorCode::ParseError, "label map line " + std::to_string(lineno) + ": no integer label");
    const Compartment c = compartment_from_name(value);
    if (c == Compartment::WT) throw Error(ErrorCode::ParseError, "WT is the union of the others and cannot be mapped");
    const int label = std::stoi(key);
    if (label == 0) throw Error(ErrorCode::ParseError, "label 0 is background");
    map.labels[label] = c;
  }
  if (map.labels.empty()) throw Error(ErrorCode::ParseError, "empty label map");
  return map;
}

LabelMap LabelMap::load(const std::filesystem::path& path) {
  return parse(read_text_file(path));
}

CompartmentMasks extract_compartments(const Volume& labels, const LabelMap& label_map) {
  CompartmentMasks out;
  for (Compartment c : kCompartments) {
    auto& m = out[static_cast<int>(c)];
    m.compartment = c;
    m.volume = labels.like(Dtype::U8);
  }
  for (std::size_t i = 0; i < labels.data.size(); ++i) {
    const double v = labels.data[i];
    if (v == 0.0) continue;
    const double r = std::round(v);
    auto it = r == v ? label_map.labels.find(static_cast<int>(r)) : label_map.labels.end();
    if (it == label_map.labels.end())
      throw Error(ErrorCode::UnknownLabel, "unmapped label value " + format_number(v));
    out[static_cast<int>(it->second)].volume.data[i] = 1.0;
    out[static_cast<int>(Compartment::WT)].volume.data[i] = 1.0;
  }
  return out;
}

bool is_oedema_only(const CompartmentMasks& masks) {
  return !masks[static_cast<int>(Compartment::OED)].empty() && masks[static_cast<int>(Compartment::NET)].empty() &&
         masks[static_cast<int>(Compartment::ET)].empty();
}

CompartmentMask resample_mask(const CompartmentMask& m, const std::array<int, 3>& target_dims) {
  for (int d : target_dims)
    if (d <= 0) throw Error(ErrorCode::InvalidArgument, "target dims must be positive");
  const Volume& src = m.volume;
  if (target_dims == src.dims) return m;

  std::array<std::vector<int>, 3> pull;
  std::array<double, 3> spacing{};
  for (int a = 0; a < 3; ++a) {
    const double scale = static_cast<double>(src.dims[a]) / target_dims[a];
    spacing[a] = static_cast<double>(static_cast<float>(src.spacing[a] * scale));
    pull[a].resize(static_cast<std::size_t>(target_dims[a]));
    for (int i = 0; i < target_dims[a]; ++i) {
      const double c = (i + 0.5) * scale - 0.5;
      const int j = static_cast<int>(std::ceil(c - 0.5));
      pull[a][static_cast<std::size_t>(i)] = std::clamp(j, 0, src.dims[a] - 1);
    }
  }

  CompartmentMask out;
  out.compartment = m.compartment;
  out.volume = Volume::zeros(target_dims, spacing, Dtype::U8);
  // Keep the world position of voxel (0,0,0)'s corner and scale the axes.
  out.volume.affine = src.affine;
  for (int r = 0; r < 3; ++r) {
    for (int a = 0; a < 3; ++a) {
      const double scale = static_cast<double>(src.dims[a]) / target_dims[a];
      out.volume.affine[r][3] += src.affine[r][a] * (0.5 * scale - 0.5);
      out.volume.affine[r][a] = src.affine[r][a] * scale;
    }
  }
  for (int z = 0; z < target_dims[2]; ++z)
    for (int y = 0; y < target_dims[1]; ++y)
      for (int x = 0; x < target_dims[0]; ++x)
        out.volume.at(x, y, z) = src.at(pull[0][x], pull[1][y], pull[2][z]) != 0.0 ? 1.0 : 0.0;
  return out;
}

}  // namespace fairboard

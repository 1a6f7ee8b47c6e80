#pragma once

#include <string>

#include "vkstab/profiles.hpp"

namespace vkstab {

// Profile file: {"schema", "model", "grid": {kind, extent, n}, "xi",
// "residual", "invariants", "values": one [re0, im0, re1, im1, ...] array per
// component}. Keys are sorted so identical profiles give identical bytes.
std::string profile_json(const Profile& prof);
// Inverse of profile_json. The residual is recomputed, not trusted.
Profile profile_from_json(const std::string& text);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace vkstab

#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace tbpos {

/// Database image ids are `<scan_id>_<index:03>`, e.g. `scan003_012`, so the
/// source scan of a retrieval candidate is a pure string operation.
inline std::string make_image_id(std::string_view scan_id, int index) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "%03d", index);
  return std::string(scan_id) + "_" + buf;
}

/// Scan id of a database image id, or nullopt if the id does not end in
/// `_<3 digits>` with a non-empty prefix.
inline std::optional<std::string> scan_id_of_image(std::string_view image_id) {
  if (image_id.size() < 5) {
    return std::nullopt;
  }
  const std::size_t underscore = image_id.size() - 4;
  if (image_id[underscore] != '_') {
    return std::nullopt;
  }
  for (std::size_t i = underscore + 1; i < image_id.size(); ++i) {
    if (image_id[i] < '0' || image_id[i] > '9') {
      return std::nullopt;
    }
  }
  return std::string(image_id.substr(0, underscore));
}

}  // namespace tbpos

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nlflow/grid.hpp"

namespace nlflow::io {

/// A case `<id>` is the pair `<id>_flair.rvol` (image) and `<id>_seg.rvol` (mask, nonzero = tumor).
struct BratsCase {
  std::string id;
  GridField volume;
  SegmentationMask truth;
};

/// Walks a directory of RVOL pairs in id order. Cases with a missing partner,
/// an unreadable file or mismatched dimensions are skipped with a warning.
class BratsReader {
 public:
  explicit BratsReader(const std::filesystem::path& directory);

  std::optional<BratsCase> next();
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> ids_;
  std::size_t cursor_ = 0;
  std::vector<std::string> warnings_;
};

}  // namespace nlflow::io

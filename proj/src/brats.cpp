#include "nlflow/brats.hpp"

#include <algorithm>
#include <iostream>
#include <set>

#include "nlflow/errors.hpp"
#include "nlflow/io.hpp"

namespace nlflow::io {

namespace {

constexpr const char* kImageSuffix = "_flair.rvol";
constexpr const char* kMaskSuffix = "_seg.rvol";

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

BratsReader::BratsReader(const std::filesystem::path& directory) : dir_(directory) {
  std::error_code ec;
  if (!std::filesystem::is_directory(directory, ec))
    fail(ErrorCategory::io, "'" + directory.string() + "' is not a directory");
  std::set<std::string> images, masks;
  for (const auto& entry : std::filesystem::directory_iterator(directory)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (ends_with(name, kImageSuffix)) images.insert(name.substr(0, name.size() - std::char_traits<char>::length(kImageSuffix)));
    else if (ends_with(name, kMaskSuffix)) masks.insert(name.substr(0, name.size() - std::char_traits<char>::length(kMaskSuffix)));
  }
  for (const auto& id : images) {
    if (masks.count(id)) ids_.push_back(id);
    else warnings_.push_back("case '" + id + "': missing " + id + kMaskSuffix + ", skipped");
  }
  for (const auto& id : masks)
    if (!images.count(id)) warnings_.push_back("case '" + id + "': missing " + id + kImageSuffix + ", skipped");
}

std::optional<BratsCase> BratsReader::next() {
  while (cursor_ < ids_.size()) {
    const std::string id = ids_[cursor_++];
    try {
      BratsCase c;
      c.id = id;
      c.volume = read_rvol(dir_ / (id + kImageSuffix));
      const GridField seg = read_rvol(dir_ / (id + kMaskSuffix));
      if (seg.shape() != c.volume.shape()) {
        warnings_.push_back("case '" + id + "': mask dimensions differ from the image, skipped");
        continue;
      }
      c.truth = SegmentationMask(seg.shape());
      for (std::size_t k = 0; k < seg.size(); ++k) c.truth.set(k, seg[k] > 0.0);
      return c;
    } catch (const Error& e) {
      warnings_.push_back("case '" + id + "': " + e.what() + ", skipped");
    }
  }
  return std::nullopt;
}

}  // namespace nlflow::io

#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stylerec/error.hpp"
#include "stylerec/types.hpp"

namespace stylerec {

// Shared accounting for corpus-scale builds: how many observations were
// usable and why the rest were skipped.
struct BuildReport {
  std::uint64_t used = 0;
  std::uint64_t skipped = 0;
  std::map<std::string, std::uint64_t> skip_reasons;

  void skip(const std::string& reason) {
    ++skipped;
    ++skip_reasons[reason];
  }
};

// Read-only index over loaded annotations for resolving detection
// references from association pairs. Does not own the annotations.
class AnnotationCorpus {
 public:
  explicit AnnotationCorpus(std::span<const StreetStyleAnnotation> annotations)
      : annotations_(annotations) {
    for (std::size_t i = 0; i < annotations.size(); ++i) {
      const StreetStyleAnnotation& a = annotations[i];
      for (std::size_t g = 0; g < a.garments.size(); ++g)
        index_[{a.image_id, a.garments[g].detection_id}] = {i, g};
    }
  }

  std::span<const StreetStyleAnnotation> annotations() const {
    return annotations_;
  }

  const GarmentDetection* find(const std::string& image_id,
                               const std::string& detection_id) const {
    auto it = index_.find({image_id, detection_id});
    if (it == index_.end()) return nullptr;
    return &annotations_[it->second.first].garments[it->second.second];
  }

  const GarmentDetection& resolve(const std::string& image_id,
                                  const std::string& detection_id) const {
    const GarmentDetection* g = find(image_id, detection_id);
    if (!g)
      throw NotFoundError("unknown detection " + image_id + "/" +
                          detection_id);
    return *g;
  }

 private:
  std::span<const StreetStyleAnnotation> annotations_;
  std::map<std::pair<std::string, std::string>, std::pair<std::size_t, std::size_t>>
      index_;
};

}  // namespace stylerec

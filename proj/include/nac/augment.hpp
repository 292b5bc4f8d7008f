#pragma once

#include <array>
#include <vector>

#include "nac/image.hpp"

namespace nac {

/// Element of the dihedral group of the square: an optional horizontal mirror
/// followed by `rotation` quarter turns counter-clockwise. Ids 0-3 are pure
/// rotations, 4-7 are mirrored.
struct Dihedral {
  int id = 0;

  static constexpr int kCount = 8;

  bool mirrored() const { return id >= 4; }
  int rotation() const { return id % 4; }

  Dihedral inverse() const;
  /// The transform equivalent to applying `first`, then `second`.
  static Dihedral compose(Dihedral first, Dihedral second);

  friend bool operator==(Dihedral, Dihedral) = default;
};

ImageBuffer apply(Dihedral t, const ImageBuffer& image);

struct AugmentedImage {
  Dihedral transform;
  ImageBuffer image;
};

/// All 8 dihedral images of `image`, identity first.
std::vector<AugmentedImage> augment_dihedral(const ImageBuffer& image);

}  // namespace nac

#pragma once

#include <vector>

#include "nac/image.hpp"

namespace nac {

/// Five procedurally generated grayscale test images (disks, stripes, blocks,
/// rings, clouds), size x size, clean role, samples inside [40, 215].
/// Identical on every platform.
std::vector<LabeledImage> desk_set(int size = 64);

}  // namespace nac

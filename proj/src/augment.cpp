#include "nac/augment.hpp"

namespace nac {
namespace {

ImageBuffer mirror(const ImageBuffer& in) {
  ImageBuffer out = in;
  for (int c = 0; c < in.channels(); ++c) {
    for (int y = 0; y < in.height(); ++y) {
      for (int x = 0; x < in.width(); ++x) {
        out.at(c, y, x) = in.at(c, y, in.width() - 1 - x);
      }
    }
  }
  return out;
}

// Quarter turn counter-clockwise: the top-right corner moves to the top-left.
ImageBuffer rotate90(const ImageBuffer& in) {
  ImageBuffer out(in.role(), in.width(), in.height(), in.channels());
  if (in.noise_level()) out.set_noise_level(*in.noise_level());
  for (int c = 0; c < in.channels(); ++c) {
    for (int y = 0; y < out.height(); ++y) {
      for (int x = 0; x < out.width(); ++x) {
        out.at(c, y, x) = in.at(c, x, in.width() - 1 - y);
      }
    }
  }
  return out;
}

}  // namespace

Dihedral Dihedral::inverse() const {
  if (mirrored()) return *this;
  return Dihedral{(4 - rotation()) % 4};
}

Dihedral Dihedral::compose(Dihedral first, Dihedral second) {
  // R^r2 M^f2 R^r1 M^f1, using M R = R^-1 M.
  const int f1 = first.mirrored() ? 1 : 0;
  const int r1 = first.rotation();
  const int r2 = second.rotation();
  if (!second.mirrored()) return Dihedral{f1 * 4 + (r1 + r2) % 4};
  return Dihedral{(1 - f1) * 4 + ((r2 - r1) % 4 + 4) % 4};
}

ImageBuffer apply(Dihedral t, const ImageBuffer& image) {
  ImageBuffer out = t.mirrored() ? mirror(image) : image;
  for (int r = 0; r < t.rotation(); ++r) out = rotate90(out);
  return out;
}

std::vector<AugmentedImage> augment_dihedral(const ImageBuffer& image) {
  std::vector<AugmentedImage> out;
  out.reserve(Dihedral::kCount);
  for (int id = 0; id < Dihedral::kCount; ++id) {
    out.push_back({Dihedral{id}, apply(Dihedral{id}, image)});
  }
  return out;
}

}  // namespace nac

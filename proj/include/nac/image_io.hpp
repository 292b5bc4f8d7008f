#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nac/image.hpp"

namespace nac {

/// Reads an 8-bit binary PGM (P5), PPM (P6) or PNG as a clean image with
/// samples in [0, 255]. Distinct ErrorKinds for a missing file, unknown
/// format, truncated data and unsupported bit depth.
ImageBuffer load_image(const std::filesystem::path& path);

/// Clamps to [0, 255], rounds half to even and writes 8-bit data in the
/// format named by the extension (.pgm, .ppm, .png). Gray images written as
/// PPM are replicated to three channels; color images written as PGM are
/// converted with BT.601 luma weights. A non-empty `comment` is stored as a
/// header comment line in PGM/PPM output.
void save_image(const ImageBuffer& image, const std::filesystem::path& path,
                std::string_view comment = {});

/// Encoded file bytes, as save_image would write them.
std::vector<std::uint8_t> encode_pnm(const ImageBuffer& image, bool color,
                                     std::string_view comment = {});
std::vector<std::uint8_t> encode_png(const ImageBuffer& image);

/// Clamp to [0, 255] then round half to even.
std::uint8_t quantize(double value);

/// Centered size x size window at offsets floor((dim - size) / 2).
ImageBuffer center_crop(const ImageBuffer& image, int size);

/// BT.601 luma (0.299 R + 0.587 G + 0.114 B); gray images pass through.
ImageBuffer to_grayscale(const ImageBuffer& image);
/// Gray replicated to three channels; color images pass through.
ImageBuffer to_color(const ImageBuffer& image);

enum class ChannelMode { grayscale, color };

struct DatasetEntry {
  std::string id;
  std::filesystem::path path;
};

struct Dataset {
  std::string name;
  std::vector<DatasetEntry> entries;
  ChannelMode mode = ChannelMode::grayscale;
  std::optional<int> crop;

  /// All .pgm/.ppm/.png files of `dir`, ordered by file name, id = stem.
  static Dataset from_directory(const std::filesystem::path& dir, ChannelMode mode,
                                std::optional<int> crop = std::nullopt);

  /// Loads every entry, converting channels and cropping as configured.
  std::vector<LabeledImage> load() const;
};

}  // namespace nac

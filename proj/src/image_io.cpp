#include "nac/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "nac/error.hpp"

namespace nac {
namespace fs = std::filesystem;

namespace {

std::string lower_extension(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    throw Error(ErrorKind::input_not_found, "no such file: " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io_failure, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io_failure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::io_failure, "write failed: " + path.string());
}

// ------------------------------------------------------------------- PNM

class PnmHeaderReader {
 public:
  PnmHeaderReader(const std::vector<std::uint8_t>& bytes, const fs::path& path)
      : bytes_(bytes), path_(path) {}

  // Skips whitespace and '#' comments, then reads a decimal integer.
  int next_int() {
    for (;;) {
      if (pos_ >= bytes_.size()) truncated();
      const char c = static_cast<char>(bytes_[pos_]);
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
    if (!std::isdigit(bytes_[pos_])) {
      throw Error(ErrorKind::unknown_format, "malformed PNM header in " + path_.string());
    }
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_++] - '0');
      if (value > 1'000'000) {
        throw Error(ErrorKind::unknown_format, "PNM header value too large in " + path_.string());
      }
    }
    return static_cast<int>(value);
  }

  // Exactly one whitespace byte separates the header from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size()) truncated();
    return pos_ + 1;
  }

 private:
  [[noreturn]] void truncated() const {
    throw Error(ErrorKind::truncated_file, "truncated PNM header in " + path_.string());
  }

  const std::vector<std::uint8_t>& bytes_;
  const fs::path& path_;
  std::size_t pos_ = 2;
};

ImageBuffer decode_pnm(const std::vector<std::uint8_t>& bytes, const fs::path& path) {
  const int channels = bytes[1] == '5' ? 1 : 3;
  PnmHeaderReader header(bytes, path);
  const int width = header.next_int();
  const int height = header.next_int();
  const int maxval = header.next_int();
  if (width < 1 || height < 1) {
    throw Error(ErrorKind::unknown_format, "PNM with empty raster: " + path.string());
  }
  if (maxval < 1 || maxval > 65535) {
    throw Error(ErrorKind::unknown_format, "invalid PNM maxval in " + path.string());
  }
  if (maxval > 255) {
    throw Error(ErrorKind::unsupported_bit_depth,
                "16-bit PNM is not supported: " + path.string());
  }
  const std::size_t offset = header.raster_offset();
  const std::size_t plane = static_cast<std::size_t>(width) * height;
  if (bytes.size() < offset + plane * channels) {
    throw Error(ErrorKind::truncated_file, "truncated PNM raster in " + path.string());
  }
  ImageBuffer image(Role::clean, height, width, channels);
  const double scale = 255.0 / maxval;
  std::span<double> dst = image.samples();
  for (std::size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < channels; ++c) {
      dst[c * plane + i] = std::min(255.0, bytes[offset + i * channels + c] * scale);
    }
  }
  return image;
}

// ------------------------------------------------------------------- PNG

struct PngSource {
  const std::vector<std::uint8_t>* bytes;
  std::size_t pos;
};

void png_read_from_memory(png_structp png, png_bytep out, png_size_t count) {
  auto* src = static_cast<PngSource*>(png_get_io_ptr(png));
  if (src->pos + count > src->bytes->size()) png_error(png, "truncated");
  std::memcpy(out, src->bytes->data() + src->pos, count);
  src->pos += count;
}

void png_write_to_memory(png_structp png, png_bytep data, png_size_t count) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + count);
}

void png_flush_noop(png_structp) {}

void png_error_handler(png_structp png, png_const_charp message) {
  auto* text = static_cast<std::string*>(png_get_error_ptr(png));
  if (text) *text = message;
  png_longjmp(png, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

ImageBuffer decode_png(const std::vector<std::uint8_t>& bytes, const fs::path& path) {
  std::string message;
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, png_error_handler, png_warning_handler);
  if (!png) throw Error(ErrorKind::io_failure, "libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  PngSource source{&bytes, 0};
  std::vector<png_byte> raster;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0, height = 0;
  int bit_depth = 0, color_type = 0;
  int channels = 0;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(message == "truncated" ? ErrorKind::truncated_file : ErrorKind::io_failure,
                "PNG decode failed (" + message + "): " + path.string());
  }
  png_set_read_fn(png, &source, png_read_from_memory);
  png_read_info(png, info);
  png_get_IHDR(png, info, &width, &height, &bit_depth, &color_type, nullptr, nullptr, nullptr);
  if (bit_depth > 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorKind::unsupported_bit_depth,
                std::to_string(bit_depth) + "-bit PNG is not supported: " + path.string());
  }
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png), png_set_strip_alpha(png);
  png_read_update_info(png, info);
  channels = png_get_channels(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  raster.resize(stride * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = raster.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const int out_channels = channels >= 3 ? 3 : 1;
  ImageBuffer image(Role::clean, static_cast<int>(height), static_cast<int>(width), out_channels);
  const std::size_t plane = static_cast<std::size_t>(width) * height;
  std::span<double> dst = image.samples();
  for (png_uint_32 y = 0; y < height; ++y) {
    for (png_uint_32 x = 0; x < width; ++x) {
      for (int c = 0; c < out_channels; ++c) {
        dst[c * plane + static_cast<std::size_t>(y) * width + x] = rows[y][x * channels + c];
      }
    }
  }
  return image;
}

}  // namespace

std::uint8_t quantize(double value) {
  const double clamped = std::clamp(value, 0.0, 255.0);
  // nearbyint uses the default round-to-nearest-even mode.
  return static_cast<std::uint8_t>(std::nearbyint(clamped));
}

ImageBuffer load_image(const fs::path& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) {
    return decode_pnm(bytes, path);
  }
  static constexpr std::uint8_t kPngMagic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  if (bytes.size() >= 8 && std::equal(kPngMagic, kPngMagic + 8, bytes.begin())) {
    return decode_png(bytes, path);
  }
  throw Error(ErrorKind::unknown_format, "unrecognized image format: " + path.string());
}

std::vector<std::uint8_t> encode_pnm(const ImageBuffer& image, bool color,
                                     std::string_view comment) {
  if (comment.find_first_of("\r\n") != std::string_view::npos) {
    throw Error(ErrorKind::invalid_argument, "PNM comment must be a single line");
  }
  const ImageBuffer src = color ? to_color(image) : to_grayscale(image);
  const std::string note = comment.empty() ? "" : "# " + std::string(comment) + "\n";
  const std::string header = std::string(color ? "P6" : "P5") + "\n" + note +
                             std::to_string(src.width()) + " " + std::to_string(src.height()) +
                             "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  const std::size_t plane = src.plane_size();
  const int channels = src.channels();
  bytes.reserve(bytes.size() + plane * channels);
  for (std::size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < channels; ++c) bytes.push_back(quantize(src.samples()[c * plane + i]));
  }
  return bytes;
}

std::vector<std::uint8_t> encode_png(const ImageBuffer& image) {
  const ImageBuffer src = image.channels() >= 3 ? to_color(image) : to_grayscale(image);
  const int channels = src.channels();
  const std::size_t plane = src.plane_size();
  std::vector<std::uint8_t> out;
  std::vector<png_byte> raster(plane * channels);
  for (std::size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < channels; ++c) raster[i * channels + c] = quantize(src.samples()[c * plane + i]);
  }
  std::vector<png_bytep> rows(src.height());
  for (int y = 0; y < src.height(); ++y) {
    rows[y] = raster.data() + static_cast<std::size_t>(y) * src.width() * channels;
  }

  std::string message;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, png_error_handler,
                                            png_warning_handler);
  if (!png) throw Error(ErrorKind::io_failure, "libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::io_failure, "PNG encode failed: " + message);
  }
  png_set_write_fn(png, &out, png_write_to_memory, png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(src.width()),
               static_cast<png_uint_32>(src.height()), 8,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void save_image(const ImageBuffer& image, const fs::path& path, std::string_view comment) {
  const std::string ext = lower_extension(path);
  std::vector<std::uint8_t> bytes;
  if (ext == ".pgm") {
    bytes = encode_pnm(image, false, comment);
  } else if (ext == ".ppm") {
    bytes = encode_pnm(image, true, comment);
  } else if (ext == ".png") {
    bytes = encode_png(image);
  } else {
    throw Error(ErrorKind::unknown_format, "cannot infer image format from " + path.string());
  }
  write_file(path, bytes);
}

ImageBuffer center_crop(const ImageBuffer& image, int size) {
  if (size < 1 || size > image.height() || size > image.width()) {
    throw Error(ErrorKind::invalid_argument,
                "crop size " + std::to_string(size) + " exceeds image " +
                    std::to_string(image.height()) + "x" + std::to_string(image.width()));
  }
  const int top = (image.height() - size) / 2;
  const int left = (image.width() - size) / 2;
  ImageBuffer out(image.role(), size, size, image.channels());
  for (int c = 0; c < image.channels(); ++c) {
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) out.at(c, y, x) = image.at(c, top + y, left + x);
    }
  }
  return out;
}

ImageBuffer to_grayscale(const ImageBuffer& image) {
  if (image.channels() == 1) return image;
  if (image.channels() != 3) {
    throw Error(ErrorKind::invalid_argument, "grayscale conversion needs 1 or 3 channels");
  }
  ImageBuffer out(image.role(), image.height(), image.width(), 1);
  const std::size_t plane = image.plane_size();
  std::span<const double> s = image.samples();
  for (std::size_t i = 0; i < plane; ++i) {
    out.samples()[i] = 0.299 * s[i] + 0.587 * s[plane + i] + 0.114 * s[2 * plane + i];
  }
  return out;
}

ImageBuffer to_color(const ImageBuffer& image) {
  if (image.channels() == 3) return image;
  if (image.channels() != 1) {
    throw Error(ErrorKind::invalid_argument, "color conversion needs 1 or 3 channels");
  }
  ImageBuffer out(image.role(), image.height(), image.width(), 3);
  const std::size_t plane = image.plane_size();
  for (int c = 0; c < 3; ++c) {
    std::copy(image.samples().begin(), image.samples().end(),
              out.samples().begin() + static_cast<std::ptrdiff_t>(c * plane));
  }
  return out;
}

Dataset Dataset::from_directory(const fs::path& dir, ChannelMode mode, std::optional<int> crop) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw Error(ErrorKind::input_not_found, "no such dataset directory: " + dir.string());
  }
  Dataset d;
  d.name = dir.filename().string();
  d.mode = mode;
  d.crop = crop;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string ext = lower_extension(entry.path());
    if (entry.is_regular_file() && (ext == ".pgm" || ext == ".ppm" || ext == ".png")) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  for (const fs::path& f : files) {
    const std::string id = f.stem().string();
    for (const DatasetEntry& e : d.entries) {
      if (e.id == id) {
        throw Error(ErrorKind::invalid_argument, "duplicate image id '" + id + "' in " + dir.string());
      }
    }
    d.entries.push_back({id, f});
  }
  if (d.entries.empty()) {
    throw Error(ErrorKind::invalid_argument, "dataset directory has no images: " + dir.string());
  }
  return d;
}

std::vector<LabeledImage> Dataset::load() const {
  std::vector<LabeledImage> images;
  images.reserve(entries.size());
  for (const DatasetEntry& e : entries) {
    ImageBuffer img = load_image(e.path);
    img = mode == ChannelMode::grayscale ? to_grayscale(img) : to_color(img);
    if (crop) img = center_crop(img, *crop);
    images.push_back({e.id, std::move(img)});
  }
  return images;
}

}  // namespace nac

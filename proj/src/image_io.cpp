#include "refcanvas/image_io.hpp"

#include "refcanvas/error.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <jpeglib.h>
#include <string>

namespace refcanvas {

namespace {

bool starts_with(std::span<const std::uint8_t> bytes, std::initializer_list<std::uint8_t> magic) {
  if (bytes.size() < magic.size()) return false;
  return std::equal(magic.begin(), magic.end(), bytes.begin());
}

Image decode_png(std::span<const std::uint8_t> bytes) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    std::string msg = png.message;
    throw Error(ErrorCode::input, "PNG decode failed: " + msg);
  }
  png.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, rgb.data(), 0, nullptr)) {
    std::string msg = png.message;
    png_image_free(&png);
    throw Error(ErrorCode::input, "PNG decode failed: " + msg);
  }
  return from_rgb8(png.width, png.height, rgb);
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr info) {
  auto *err = reinterpret_cast<JpegErrorManager *>(info->err);
  (*info->err->format_message)(info, err->message);
  std::longjmp(err->jump, 1);
}

// Counts corrupt-data warnings instead of printing them.
void jpeg_emit_message(j_common_ptr info, int level) {
  if (level < 0) ++info->err->num_warnings;
}

// Plain C control flow only between setjmp and the last libjpeg call.
bool decode_jpeg_raw(std::span<const std::uint8_t> bytes, std::vector<std::uint8_t> &rgb,
                     unsigned &width, unsigned &height, std::string &error) {
  jpeg_decompress_struct info{};
  JpegErrorManager err{};
  info.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  err.base.emit_message = jpeg_emit_message;
  if (setjmp(err.jump)) {
    error = err.message;
    jpeg_destroy_decompress(&info);
    return false;
  }
  jpeg_create_decompress(&info);
  jpeg_mem_src(&info, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&info, TRUE);
  info.out_color_space = JCS_RGB;
  jpeg_start_decompress(&info);
  width = info.output_width;
  height = info.output_height;
  rgb.resize(static_cast<std::size_t>(width) * height * 3);
  while (info.output_scanline < info.output_height) {
    JSAMPROW row = rgb.data() + static_cast<std::size_t>(info.output_scanline) * width * 3;
    jpeg_read_scanlines(&info, &row, 1);
  }
  jpeg_finish_decompress(&info);
  const bool clean = err.base.num_warnings == 0;
  if (!clean) std::snprintf(err.message, sizeof err.message, "corrupt or truncated JPEG data");
  error = err.message;
  jpeg_destroy_decompress(&info);
  return clean;
}

Image decode_jpeg(std::span<const std::uint8_t> bytes) {
  std::vector<std::uint8_t> rgb;
  unsigned width = 0;
  unsigned height = 0;
  std::string error;
  if (!decode_jpeg_raw(bytes, rgb, width, height, error)) {
    throw Error(ErrorCode::input, "JPEG decode failed: " + error);
  }
  return from_rgb8(width, height, rgb);
}

Image decode_ppm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 2;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_uint = [&]() -> std::size_t {
    skip_space();
    std::size_t value = 0;
    bool any = false;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      value = value * 10 + static_cast<std::size_t>(bytes[pos] - '0');
      if (value > 1u << 20) throw Error(ErrorCode::input, "PPM header value too large");
      any = true;
      ++pos;
    }
    if (!any) throw Error(ErrorCode::input, "malformed PPM header");
    return value;
  };
  const std::size_t width = read_uint();
  const std::size_t height = read_uint();
  const std::size_t maxval = read_uint();
  if (maxval != 255) throw Error(ErrorCode::input, "only 8-bit PPM is supported");
  ++pos; // single whitespace before raster
  const std::size_t need = width * height * 3;
  if (width == 0 || height == 0 || bytes.size() < pos + need) {
    throw Error(ErrorCode::input, "truncated PPM raster");
  }
  return from_rgb8(width, height, bytes.subspan(pos, need));
}

} // namespace

Image decode_image(std::span<const std::uint8_t> bytes) {
  if (starts_with(bytes, {0x89, 'P', 'N', 'G'})) return decode_png(bytes);
  if (starts_with(bytes, {0xFF, 0xD8, 0xFF})) return decode_jpeg(bytes);
  if (starts_with(bytes, {'P', '6'})) return decode_ppm(bytes);
  throw Error(ErrorCode::input, "unrecognized image format (expected PNG, JPEG or PPM)");
}

std::vector<std::uint8_t> encode_png(const Image &image) {
  if (image.empty()) throw Error(ErrorCode::input, "cannot encode an empty image");
  const auto rgb = to_rgb8(image);
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width());
  png.height = static_cast<png_uint_32>(image.height());
  png.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, rgb.data(), 0, nullptr)) {
    throw Error(ErrorCode::io, std::string("PNG encode failed: ") + png.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, rgb.data(), 0, nullptr)) {
    throw Error(ErrorCode::io, std::string("PNG encode failed: ") + png.message);
  }
  out.resize(size);
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string(), path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file_atomic(const std::filesystem::path &path, std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot write " + tmp.string(), path.string());
    out.write(reinterpret_cast<const char *>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::io, "short write to " + tmp.string(), path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::io, "cannot rename into " + path.string() + ": " + ec.message());
}

void write_text_atomic(const std::filesystem::path &path, const std::string &text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t *>(text.data()), text.size()));
}

} // namespace refcanvas

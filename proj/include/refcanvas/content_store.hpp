#pragma once

#include "refcanvas/image.hpp"

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace refcanvas {

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(const std::string &text);

/// Content address of an image: the SHA-256 of its encoded bytes.
class ImageRef {
public:
  ImageRef() = default;
  /// Throws ErrorCode::validation unless `digest` is 64 lowercase hex digits.
  explicit ImageRef(std::string digest);

  static ImageRef of(std::span<const std::uint8_t> bytes) { return ImageRef(sha256_hex(bytes)); }

  const std::string &str() const { return digest_; }
  bool empty() const { return digest_.empty(); }
  auto operator<=>(const ImageRef &) const = default;

private:
  std::string digest_;
};

/// Content-addressed blob store. With a root directory, blobs live in
/// `<root>/<digest>`; without one they are kept in memory.
class ImageStore {
public:
  ImageStore() = default;
  explicit ImageStore(std::filesystem::path root);

  ImageStore(const ImageStore &) = delete;
  ImageStore &operator=(const ImageStore &) = delete;

  /// Idempotent: identical bytes always yield the same ref and one stored copy.
  ImageRef put(std::span<const std::uint8_t> bytes);
  std::vector<std::uint8_t> get(const ImageRef &ref) const;
  bool contains(const ImageRef &ref) const;
  /// Decoded pixels, cached per ref.
  Image decode(const ImageRef &ref) const;

  const std::optional<std::filesystem::path> &root() const { return root_; }

private:
  std::optional<std::filesystem::path> root_;
  mutable std::mutex mutex_;
  std::map<ImageRef, std::vector<std::uint8_t>> memory_;
  mutable std::map<ImageRef, Image> decoded_;
};

} // namespace refcanvas

#include "refcanvas/content_store.hpp"

#include "refcanvas/error.hpp"
#include "refcanvas/image_io.hpp"

#include <openssl/evp.h>

#include <algorithm>

namespace refcanvas {

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::io, "SHA-256 computation failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out(length * 2, '0');
  for (unsigned int i = 0; i < length; ++i) {
    out[2 * i] = hex[digest[i] >> 4];
    out[2 * i + 1] = hex[digest[i] & 0xF];
  }
  return out;
}

std::string sha256_hex(const std::string &text) {
  return sha256_hex(std::span(reinterpret_cast<const std::uint8_t *>(text.data()), text.size()));
}

ImageRef::ImageRef(std::string digest) : digest_(std::move(digest)) {
  const bool ok = digest_.size() == 64 && std::all_of(digest_.begin(), digest_.end(), [](char c) {
                    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
                  });
  if (!ok) throw Error(ErrorCode::validation, "malformed image reference '" + digest_ + "'", "image");
}

ImageStore::ImageStore(std::filesystem::path root) : root_(std::move(root)) {
  std::error_code ec;
  std::filesystem::create_directories(*root_, ec);
  if (ec) throw Error(ErrorCode::io, "cannot create image store " + root_->string() + ": " + ec.message());
}

ImageRef ImageStore::put(std::span<const std::uint8_t> bytes) {
  ImageRef ref = ImageRef::of(bytes);
  std::lock_guard lock(mutex_);
  if (root_) {
    const auto path = *root_ / ref.str();
    if (!std::filesystem::exists(path)) write_file_atomic(path, bytes);
  } else if (!memory_.contains(ref)) {
    memory_.emplace(ref, std::vector<std::uint8_t>(bytes.begin(), bytes.end()));
  }
  return ref;
}

std::vector<std::uint8_t> ImageStore::get(const ImageRef &ref) const {
  std::lock_guard lock(mutex_);
  if (root_) {
    const auto path = *root_ / ref.str();
    if (!std::filesystem::exists(path)) {
      throw Error(ErrorCode::not_found, "image " + ref.str() + " is not stored", "image");
    }
    return read_file(path);
  }
  auto it = memory_.find(ref);
  if (it == memory_.end()) throw Error(ErrorCode::not_found, "image " + ref.str() + " is not stored", "image");
  return it->second;
}

bool ImageStore::contains(const ImageRef &ref) const {
  std::lock_guard lock(mutex_);
  if (root_) return std::filesystem::exists(*root_ / ref.str());
  return memory_.contains(ref);
}

Image ImageStore::decode(const ImageRef &ref) const {
  {
    std::lock_guard lock(mutex_);
    if (auto it = decoded_.find(ref); it != decoded_.end()) return it->second;
  }
  Image image = decode_image(get(ref));
  std::lock_guard lock(mutex_);
  decoded_.emplace(ref, image);
  return image;
}

} // namespace refcanvas

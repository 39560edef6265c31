#include "refcanvas/torch_bridge.hpp"

#include "refcanvas/error.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cerrno>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace refcanvas {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

BridgeAssets BridgeAssets::in_directory(const fs::path &dir) {
  BridgeAssets assets;
  assets.encoder = dir / "encoder.pt";
  assets.generator = dir / "generator.pt";
  if (fs::exists(dir / "parser.pt")) assets.parser = dir / "parser.pt";
  return assets;
}

namespace {

void write_all(int fd, const void *data, std::size_t size) {
  const auto *p = static_cast<const char *>(data);
  while (size > 0) {
    const ssize_t n = ::write(fd, p, size);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::generation, std::string("model helper closed its input: ") + std::strerror(errno));
    }
    p += n;
    size -= static_cast<std::size_t>(n);
  }
}

// Reads exactly `size` bytes before `deadline`.
void read_all(int fd, void *data, std::size_t size, Clock::time_point deadline) {
  auto *p = static_cast<char *>(data);
  while (size > 0) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    if (left.count() <= 0) throw Error(ErrorCode::timeout, "model helper did not answer in time");
    pollfd pfd{fd, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (ready < 0 && errno == EINTR) continue;
    if (ready == 0) throw Error(ErrorCode::timeout, "model helper did not answer in time");
    const ssize_t n = ::read(fd, p, size);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw Error(ErrorCode::generation, "model helper exited unexpectedly");
    p += n;
    size -= static_cast<std::size_t>(n);
  }
}

std::string read_line(int fd, Clock::time_point deadline) {
  std::string line;
  char c = 0;
  while (true) {
    read_all(fd, &c, 1, deadline);
    if (c == '\n') return line;
    line.push_back(c);
    if (line.size() > (1u << 20)) throw Error(ErrorCode::generation, "model helper sent an oversized header");
  }
}

template <typename T> std::span<const std::uint8_t> as_bytes(const std::vector<T> &v) {
  return {reinterpret_cast<const std::uint8_t *>(v.data()), v.size() * sizeof(T)};
}

std::vector<float> to_float(std::span<const float> v) { return {v.begin(), v.end()}; }

std::vector<float> floats_from(const std::vector<std::uint8_t> &bytes) {
  std::vector<float> out(bytes.size() / sizeof(float));
  std::memcpy(out.data(), bytes.data(), out.size() * sizeof(float));
  return out;
}

nlohmann::json image_header(const char *op, const Image &image) {
  return {{"op", op}, {"width", image.width()}, {"height", image.height()},
          {"bytes", image.data().size() * sizeof(float)}};
}

} // namespace

TorchBridge::TorchBridge(BridgeAssets assets) : assets_(std::move(assets)) {
  std::lock_guard lock(mutex_);
  start();
}

TorchBridge::~TorchBridge() {
  std::lock_guard lock(mutex_);
  stop();
}

void TorchBridge::start() {
  for (const auto &path : {assets_.encoder, assets_.generator, assets_.script}) {
    if (path.empty() || !fs::exists(path)) {
      throw Error(ErrorCode::backend_unavailable, "missing model asset " + path.string());
    }
  }
  // A dead helper must surface as a write error, not a fatal signal.
  std::signal(SIGPIPE, SIG_IGN);

  int in_pipe[2];
  int out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw Error(ErrorCode::io, "pipe() failed");
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw Error(ErrorCode::io, "pipe() failed");
  }

  std::vector<std::string> args = {assets_.python, "-u", assets_.script.string(),
                                   "--encoder", assets_.encoder.string(),
                                   "--generator", assets_.generator.string()};
  if (!assets_.parser.empty()) {
    args.push_back("--parser");
    args.push_back(assets_.parser.string());
  }
  std::vector<char *> argv;
  for (auto &a : args) argv.push_back(a.data());
  argv.push_back(nullptr);

  const pid_t pid = ::fork();
  if (pid < 0) throw Error(ErrorCode::io, "fork() failed");
  if (pid == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::execvp(argv[0], argv.data());
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];

  try {
    info_ = exchange({{"op", "info"}, {"bytes", 0}}, {}).header;
    if (!info_.value("ok", false)) {
      throw Error(ErrorCode::generation, info_.value("error", std::string("no details")));
    }
  } catch (const Error &e) {
    stop();
    throw Error(ErrorCode::backend_unavailable,
                std::string("model helper failed to start (is PyTorch installed for '") +
                    assets_.python + "'?): " + e.what());
  }
  spdlog::info("model helper ready: {}", info_.dump());
}

void TorchBridge::stop() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
  }
  pid_ = -1;
}

TorchBridge::Reply TorchBridge::exchange(const nlohmann::json &header,
                                         std::span<const std::uint8_t> payload) {
  const auto deadline = Clock::now() + assets_.timeout;
  const std::string line = header.dump() + "\n";
  write_all(to_child_, line.data(), line.size());
  if (!payload.empty()) write_all(to_child_, payload.data(), payload.size());

  Reply reply;
  try {
    reply.header = nlohmann::json::parse(read_line(from_child_, deadline));
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorCode::generation, std::string("model helper sent a malformed header: ") + e.what());
  }
  const auto bytes = reply.header.value("bytes", std::size_t{0});
  reply.payload.resize(bytes);
  if (bytes > 0) read_all(from_child_, reply.payload.data(), bytes, deadline);
  return reply;
}

TorchBridge::Reply TorchBridge::call(nlohmann::json header, std::span<const std::uint8_t> payload) {
  std::lock_guard lock(mutex_);
  header["bytes"] = payload.size();
  if (pid_ < 0) start();
  Reply reply;
  try {
    reply = exchange(header, payload);
  } catch (const Error &) {
    // The stream is out of sync; the next call restarts the helper.
    stop();
    throw;
  }
  if (!reply.header.value("ok", false)) {
    throw Error(ErrorCode::generation,
                "model helper error: " + reply.header.value("error", std::string("unknown")));
  }
  return reply;
}

TorchScriptBackend::TorchScriptBackend(std::shared_ptr<TorchBridge> bridge) : bridge_(std::move(bridge)) {
  const auto &info = bridge_->info();
  try {
    shape_ = {info.at("latent_shape").at(0).get<std::size_t>(),
              info.at("latent_shape").at(1).get<std::size_t>()};
    height_ = info.at("image_size").at(0).get<std::size_t>();
    width_ = info.at("image_size").at(1).get<std::size_t>();
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorCode::backend_unavailable, std::string("model helper info incomplete: ") + e.what());
  }
}

LatentCode TorchScriptBackend::encode(const Image &image) const {
  if (image.empty()) throw Error(ErrorCode::input, "cannot encode an empty image");
  const auto pixels = to_float(image.data());
  auto reply = bridge_->call(image_header("encode", image), as_bytes(pixels));
  const auto values = floats_from(reply.payload);
  if (values.size() != shape_.size()) {
    throw Error(ErrorCode::generation, "encoder returned " + std::to_string(values.size()) +
                                           " values, expected " + std::to_string(shape_.size()));
  }
  try {
    return LatentCode(shape_, std::vector<double>(values.begin(), values.end()));
  } catch (const Error &e) {
    throw Error(ErrorCode::generation, std::string("encoder output rejected: ") + e.what());
  }
}

Image TorchScriptBackend::generate(const LatentCode &latent) const {
  if (latent.shape() != shape_) {
    throw Error(ErrorCode::shape_mismatch, "latent does not match the real backend's shape");
  }
  std::vector<float> values(latent.values().begin(), latent.values().end());
  auto reply = bridge_->call({{"op", "generate"}, {"layers", shape_.layers}, {"width", shape_.width}},
                             as_bytes(values));
  auto pixels = floats_from(reply.payload);
  if (pixels.size() != width_ * height_ * Image::channels) {
    throw Error(ErrorCode::generation, "generator returned an image of unexpected size");
  }
  return clip_unit(Image(width_, height_, std::move(pixels)));
}

std::shared_ptr<TorchScriptBackend> open_real_backend(const BridgeAssets &assets) {
  for (const auto &[what, path] : {std::pair{"encoder", assets.encoder}, {"generator", assets.generator}}) {
    if (path.empty() || !fs::exists(path)) {
      throw Error(ErrorCode::backend_unavailable,
                  std::string("pretrained ") + what + " not found at '" + path.string() +
                      "'. Export the e4e encoder and StyleGAN2 generator to TorchScript as "
                      "encoder.pt and generator.pt and point REFCANVAS_ASSETS_DIR (or "
                      "assets.dir in the config file) at their directory.",
                  "backend");
    }
  }
  return std::make_shared<TorchScriptBackend>(std::make_shared<TorchBridge>(assets));
}

BridgeFaceParser::BridgeFaceParser(std::shared_ptr<TorchBridge> bridge) : bridge_(std::move(bridge)) {
  if (!bridge_->info().value("parser", false)) {
    throw Error(ErrorCode::backend_unavailable, "model helper was started without a face parser");
  }
}

std::vector<std::uint8_t> BridgeFaceParser::parse(const Image &image) const {
  const auto pixels = to_float(image.data());
  auto reply = bridge_->call(image_header("parse", image), as_bytes(pixels));
  if (reply.payload.size() != image.pixel_count()) {
    throw Error(ErrorCode::generation, "face parser returned a label map of unexpected size");
  }
  return std::move(reply.payload);
}

std::vector<std::uint8_t> parser_labels(FaceRegion region) {
  switch (region) {
  case FaceRegion::eyes: return {4, 5};
  case FaceRegion::nose: return {10};
  case FaceRegion::mouth: return {11, 12, 13};
  case FaceRegion::hair: return {17};
  }
  return {};
}

ParserMaskProvider::ParserMaskProvider(std::shared_ptr<const FaceParser> parser, double feather_px)
    : parser_(std::move(parser)), feather_px_(feather_px), fallback_(feather_px) {}

RegionMasks ParserMaskProvider::masks_for(const Image &image) const {
  std::vector<std::uint8_t> labels;
  try {
    labels = parser_->parse(image);
    if (labels.size() != image.pixel_count()) {
      throw Error(ErrorCode::mask, "label map size does not match the image");
    }
  } catch (const std::exception &e) {
    spdlog::warn("face parser failed ({}); using template masks", e.what());
    return fallback_.masks_for(image);
  }
  RegionMasks out;
  std::vector<std::uint8_t> member(labels.size());
  for (FaceRegion region : kFaceRegions) {
    const auto ids = parser_labels(region);
    std::transform(labels.begin(), labels.end(), member.begin(), [&](std::uint8_t label) {
      return static_cast<std::uint8_t>(std::find(ids.begin(), ids.end(), label) != ids.end());
    });
    out.emplace(region, feathered_from_binary(region, image.width(), image.height(), member, feather_px_));
  }
  return out;
}

} // namespace refcanvas

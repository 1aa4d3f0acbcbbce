// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <random>

#include "birthmark/bytes.hpp"
#include "birthmark/crypto.hpp"

namespace birthmark {

// Row-major RGB8 raster. Canonical serialization is a 16-byte header
// ("BMPX", version 1, width u32 LE, height u32 LE, 3 zero pad bytes)
// followed by the pixels; that byte string is what gets hashed.
struct PixelImage {
  static constexpr std::size_t header_size = 16;
  static constexpr std::uint8_t format_version = 1;

  std::uint32_t width = 0;
  std::uint32_t height = 0;
  Bytes pixels;

  PixelImage() = default;
  PixelImage(std::uint32_t w, std::uint32_t h);  // zero-filled
  PixelImage(std::uint32_t w, std::uint32_t h, Bytes px);

  std::size_t index(std::uint32_t x, std::uint32_t y, int channel) const noexcept {
    return (static_cast<std::size_t>(y) * width + x) * 3 + channel;
  }
  std::uint8_t at(std::uint32_t x, std::uint32_t y, int c) const noexcept { return pixels[index(x, y, c)]; }
  std::uint8_t& at(std::uint32_t x, std::uint32_t y, int c) noexcept { return pixels[index(x, y, c)]; }

  std::array<std::uint8_t, header_size> header() const;
  Bytes canonical_bytes() const;
  static PixelImage from_canonical(ByteView bytes);

  friend bool operator==(const PixelImage&, const PixelImage&) = default;
};

// SHA-256 over header || pixels without materializing the canonical buffer.
Hash256 image_hash(const PixelImage& image);

PixelImage read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const PixelImage& image);

// Seeded uniform-noise image; distinct seeds give distinct hashes.
PixelImage random_image(std::uint32_t w, std::uint32_t h, std::uint64_t seed);

}  // namespace birthmark

// SPDX-License-Identifier: Apache-2.0
#include "birthmark/image.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

namespace birthmark {

namespace {
void check_dims(std::uint32_t w, std::uint32_t h, std::size_t n) {
  if (static_cast<std::uint64_t>(w) * h * 3 != n) {
    throw Error(Errc::InvalidValue, "pixel buffer length does not match width*height*3");
  }
}
}  // namespace

PixelImage::PixelImage(std::uint32_t w, std::uint32_t h)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}

PixelImage::PixelImage(std::uint32_t w, std::uint32_t h, Bytes px) : width(w), height(h), pixels(std::move(px)) {
  check_dims(w, h, pixels.size());
}

std::array<std::uint8_t, PixelImage::header_size> PixelImage::header() const {
  std::array<std::uint8_t, header_size> h{'B', 'M', 'P', 'X', format_version};
  for (int i = 0; i < 4; ++i) {
    h[5 + i] = static_cast<std::uint8_t>(width >> (8 * i));
    h[9 + i] = static_cast<std::uint8_t>(height >> (8 * i));
  }
  return h;
}

Bytes PixelImage::canonical_bytes() const {
  auto h = header();
  Bytes out(header_size + pixels.size());
  std::copy(h.begin(), h.end(), out.begin());
  std::copy(pixels.begin(), pixels.end(), out.begin() + header_size);
  return out;
}

PixelImage PixelImage::from_canonical(ByteView bytes) {
  ByteReader r(bytes);
  auto magic = r.raw(4);
  if (!std::equal(magic.begin(), magic.end(), "BMPX")) {
    throw Error(Errc::DecodeError, "missing BMPX magic", 0);
  }
  if (r.u8() != format_version) throw Error(Errc::DecodeError, "unsupported BMPX version", 4);
  std::uint32_t w = r.u32();
  std::uint32_t h = r.u32();
  auto pad = r.raw(3);
  if (pad[0] || pad[1] || pad[2]) throw Error(Errc::DecodeError, "nonzero header padding", 13);
  std::uint64_t n = static_cast<std::uint64_t>(w) * h * 3;
  if (r.remaining() != n) {
    throw Error(Errc::DecodeError, "pixel payload length mismatch", r.offset());
  }
  auto px = r.raw(static_cast<std::size_t>(n));
  return PixelImage(w, h, Bytes(px.begin(), px.end()));
}

Hash256 image_hash(const PixelImage& image) {
  auto h = image.header();
  Sha256 ctx;
  ctx.update(h);
  ctx.update(image.pixels);
  return ctx.finish();
}

PixelImage read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return PixelImage::from_canonical(data);
}

void write_image(const std::filesystem::path& path, const PixelImage& image) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  auto h = image.header();
  out.write(reinterpret_cast<const char*>(h.data()), h.size());
  out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
}

PixelImage random_image(std::uint32_t w, std::uint32_t h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  PixelImage img(w, h);
  std::size_t i = 0;
  for (; i + 8 <= img.pixels.size(); i += 8) {
    auto v = rng();
    std::memcpy(img.pixels.data() + i, &v, 8);
  }
  for (auto v = rng(); i < img.pixels.size(); ++i, v >>= 8) img.pixels[i] = static_cast<std::uint8_t>(v);
  return img;
}

}  // namespace birthmark

#include "plotsteal/png_io.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace plotsteal {

namespace {

void push_u32be(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
}

void push_chunk(std::vector<std::uint8_t>& out, const char type[4],
                const std::vector<std::uint8_t>& payload) {
  push_u32be(out, static_cast<std::uint32_t>(payload.size()));
  const std::size_t crc_start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), payload.begin(), payload.end());
  const auto crc = static_cast<std::uint32_t>(
      crc32(0L, out.data() + crc_start, static_cast<uInt>(4 + payload.size())));
  push_u32be(out, crc);
}

}  // namespace

std::vector<std::uint8_t> encode_png(const PlotRaster& raster) {
  if (raster.channels != 1 && raster.channels != 3)
    throw std::invalid_argument("encode_png: channels must be 1 or 3");
  if (raster.width == 0 || raster.height == 0)
    throw std::invalid_argument("encode_png: empty raster");

  std::vector<std::uint8_t> out;
  static const std::uint8_t signature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  out.insert(out.end(), signature, signature + 8);

  std::vector<std::uint8_t> ihdr;
  push_u32be(ihdr, static_cast<std::uint32_t>(raster.width));
  push_u32be(ihdr, static_cast<std::uint32_t>(raster.height));
  ihdr.push_back(8);                                     // bit depth
  ihdr.push_back(raster.channels == 3 ? 2 : 0);          // color type
  ihdr.push_back(0);                                     // compression
  ihdr.push_back(0);                                     // filter
  ihdr.push_back(0);                                     // interlace
  push_chunk(out, "IHDR", ihdr);

  // Scanlines with filter byte 0.
  const std::size_t stride = raster.width * raster.channels;
  std::vector<std::uint8_t> raw;
  raw.reserve((stride + 1) * raster.height);
  for (std::size_t y = 0; y < raster.height; ++y) {
    raw.push_back(0);
    raw.insert(raw.end(), raster.pixels.begin() + static_cast<std::ptrdiff_t>(y * stride),
               raster.pixels.begin() + static_cast<std::ptrdiff_t>((y + 1) * stride));
  }

  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> compressed(bound);
  const int rc = compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6);
  if (rc != Z_OK) throw std::runtime_error("encode_png: zlib compression failed");
  compressed.resize(bound);
  push_chunk(out, "IDAT", compressed);
  push_chunk(out, "IEND", {});
  return out;
}

void write_png(const PlotRaster& raster, const std::string& path) {
  const auto bytes = encode_png(raster);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("png write failed: " + path);
}

void write_pnm(const PlotRaster& raster, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out << (raster.channels == 3 ? "P6" : "P5") << "\n"
      << raster.width << " " << raster.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(raster.pixels.data()),
            static_cast<std::streamsize>(raster.pixels.size()));
  if (!out) throw std::runtime_error("pnm write failed: " + path);
}

}  // namespace plotsteal

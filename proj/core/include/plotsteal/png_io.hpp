#pragma once

#include <string>
#include <vector>

#include "plotsteal/raster.hpp"

namespace plotsteal {

// Minimal PNG encoder (8-bit gray or RGB, filter 0, fixed zlib level), so
// identical rasters always produce identical file bytes.
std::vector<std::uint8_t> encode_png(const PlotRaster& raster);
void write_png(const PlotRaster& raster, const std::string& path);

// Dependency-free debug formats (P5/P6).
void write_pnm(const PlotRaster& raster, const std::string& path);

}  // namespace plotsteal

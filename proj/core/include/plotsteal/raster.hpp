#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "plotsteal/nn.hpp"
#include "plotsteal/tsne.hpp"

namespace plotsteal {

// 8-bit image, row-major, channel-interleaved. Channel count 1 or 3.
struct PlotRaster {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 1;
  std::vector<std::uint8_t> pixels;

  PlotRaster() = default;
  PlotRaster(std::size_t w, std::size_t h, std::size_t c, std::uint8_t fill = 255)
      : width(w), height(h), channels(c), pixels(w * h * c, fill) {}

  std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c = 0) {
    return pixels[(y * width + x) * channels + c];
  }
  std::uint8_t at(std::size_t x, std::size_t y, std::size_t c = 0) const {
    return pixels[(y * width + x) * channels + c];
  }

  bool operator==(const PlotRaster&) const = default;
};

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

enum class ColorMode { color, grayscale, binary };

std::string to_string(ColorMode m);
ColorMode color_mode_from_string(const std::string& s);

// Ten fixed, visually distinct class colors. All stay below the binary
// threshold after grayscale conversion so markers never vanish.
const std::array<Rgb, 10>& class_palette();

struct RenderConfig {
  std::size_t canvas_width = 300;
  std::size_t canvas_height = 300;
  std::size_t marker_radius = 2;
  ColorMode color_mode = ColorMode::color;
  double margin_fraction = 0.05;
  std::uint8_t binary_threshold = 250;
};

// Scatter plot of a 2-D layout: min-max normalized into the canvas minus
// margins, one filled disc per point in its class color, white background,
// draw order = point index. A degenerate coordinate range maps to the canvas
// center. Rasterization is integer-only after one float->pixel quantization.
PlotRaster render_scatter(const TsneLayout& layout, const RenderConfig& config);

// Fixed-luma grayscale conversion (0.299, 0.587, 0.114), rounded half up.
PlotRaster to_grayscale(const PlotRaster& raster);
// Threshold a grayscale raster: value >= threshold -> 255, else 0. A 3-channel
// input is converted to grayscale first.
PlotRaster to_binary(const PlotRaster& raster, std::uint8_t threshold = 250);

struct LossPlotConfig {
  bool with_axes = true;
  std::size_t canvas_width = 300;
  std::size_t canvas_height = 300;
  Rgb train_color{31, 119, 180};
  Rgb test_color{255, 127, 14};
  std::size_t line_thickness = 1;
  double margin_fraction = 0.05;
  // Tick positions carry the quantitative scale: one x tick per 5 recorded
  // train timestamps (= one epoch), one y tick per 0.5 loss.
  double x_tick_epochs = 1.0;
  double y_tick_loss = 0.5;
};

// Train and test loss polylines on shared axes; y range [0, 1.05 * max loss],
// x range [0, last timestamp]. With axes enabled draws the two axis lines and
// tick marks; no text glyphs.
PlotRaster render_loss(const LossCurve& curve, const LossPlotConfig& config);

// Box-filter downsampling with round-half-up quantization. Throws when the
// target exceeds the source in either dimension.
PlotRaster downsample(const PlotRaster& raster, std::size_t target_width, std::size_t target_height);

}  // namespace plotsteal

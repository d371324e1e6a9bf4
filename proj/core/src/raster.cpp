#include "plotsteal/raster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace plotsteal {

std::string to_string(ColorMode m) {
  switch (m) {
    case ColorMode::color: return "color";
    case ColorMode::grayscale: return "grayscale";
    case ColorMode::binary: return "binary";
  }
  throw std::logic_error("bad ColorMode");
}

ColorMode color_mode_from_string(const std::string& s) {
  if (s == "color") return ColorMode::color;
  if (s == "grayscale") return ColorMode::grayscale;
  if (s == "binary") return ColorMode::binary;
  throw std::invalid_argument("unknown color mode: " + s);
}

const std::array<Rgb, 10>& class_palette() {
  static const std::array<Rgb, 10> palette{{{31, 119, 180},
                                            {255, 127, 14},
                                            {44, 160, 44},
                                            {214, 39, 40},
                                            {148, 103, 189},
                                            {140, 86, 75},
                                            {227, 119, 194},
                                            {127, 127, 127},
                                            {188, 189, 34},
                                            {23, 190, 207}}};
  return palette;
}

namespace {

struct PixelMapper {
  double lo = 0.0, hi = 0.0;
  long margin = 0;
  long span = 0;  // usable pixel span

  // One quantization step: data value -> pixel index.
  long map(double v) const {
    double t = 0.5;
    if (hi > lo) t = (v - lo) / (hi - lo);
    return margin + std::lround(t * static_cast<double>(span));
  }
};

PixelMapper make_mapper(double lo, double hi, std::size_t pixels, double margin_fraction) {
  PixelMapper m;
  m.lo = lo;
  m.hi = hi;
  m.margin = static_cast<long>(std::floor(margin_fraction * static_cast<double>(pixels)));
  m.span = static_cast<long>(pixels) - 1 - 2 * m.margin;
  if (m.span < 1) throw std::invalid_argument("canvas too small for margin");
  return m;
}

void put_pixel(PlotRaster& img, long x, long y, Rgb color) {
  if (x < 0 || y < 0 || x >= static_cast<long>(img.width) || y >= static_cast<long>(img.height))
    return;
  const auto ux = static_cast<std::size_t>(x);
  const auto uy = static_cast<std::size_t>(y);
  if (img.channels == 3) {
    img.at(ux, uy, 0) = color.r;
    img.at(ux, uy, 1) = color.g;
    img.at(ux, uy, 2) = color.b;
  } else {
    img.at(ux, uy, 0) = color.r;
  }
}

void fill_disc(PlotRaster& img, long cx, long cy, long radius, Rgb color) {
  const long r2 = radius * radius;
  for (long dy = -radius; dy <= radius; ++dy)
    for (long dx = -radius; dx <= radius; ++dx)
      if (dx * dx + dy * dy <= r2) put_pixel(img, cx + dx, cy + dy, color);
}

void draw_point(PlotRaster& img, long x, long y, std::size_t thickness, Rgb color) {
  if (thickness <= 1) {
    put_pixel(img, x, y, color);
  } else {
    fill_disc(img, x, y, static_cast<long>(thickness / 2), color);
  }
}

// Bresenham line, hard-edged.
void draw_line(PlotRaster& img, long x0, long y0, long x1, long y1, std::size_t thickness,
               Rgb color) {
  const long dx = std::labs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const long dy = -std::labs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  long err = dx + dy;
  while (true) {
    draw_point(img, x0, y0, thickness, color);
    if (x0 == x1 && y0 == y1) break;
    const long e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const double v = 0.299 * r + 0.587 * g + 0.114 * b;
  return static_cast<std::uint8_t>(std::lround(v));
}

}  // namespace

PlotRaster render_scatter(const TsneLayout& layout, const RenderConfig& config) {
  if (layout.size() == 0) throw std::invalid_argument("render_scatter: empty layout");
  if (config.marker_radius < 1) throw std::invalid_argument("marker radius must be >= 1");
  if (!(config.margin_fraction >= 0.0 && config.margin_fraction < 0.5))
    throw std::invalid_argument("margin fraction must be in [0, 0.5)");

  double xlo = layout.coords.at(0, 0), xhi = xlo;
  double ylo = layout.coords.at(0, 1), yhi = ylo;
  for (std::size_t i = 1; i < layout.size(); ++i) {
    xlo = std::min(xlo, layout.coords.at(i, 0));
    xhi = std::max(xhi, layout.coords.at(i, 0));
    ylo = std::min(ylo, layout.coords.at(i, 1));
    yhi = std::max(yhi, layout.coords.at(i, 1));
  }
  const PixelMapper mx = make_mapper(xlo, xhi, config.canvas_width, config.margin_fraction);
  const PixelMapper my = make_mapper(ylo, yhi, config.canvas_height, config.margin_fraction);

  PlotRaster img(config.canvas_width, config.canvas_height, 3, 255);
  const auto& palette = class_palette();
  const long h1 = static_cast<long>(config.canvas_height) - 1;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const long px = mx.map(layout.coords.at(i, 0));
    const long py = h1 - my.map(layout.coords.at(i, 1));  // y axis points up
    const Rgb color = palette[static_cast<std::size_t>(layout.labels[i]) % palette.size()];
    fill_disc(img, px, py, static_cast<long>(config.marker_radius), color);
  }

  switch (config.color_mode) {
    case ColorMode::color: return img;
    case ColorMode::grayscale: return to_grayscale(img);
    case ColorMode::binary: return to_binary(img, config.binary_threshold);
  }
  return img;
}

PlotRaster to_grayscale(const PlotRaster& raster) {
  if (raster.channels != 3) throw std::invalid_argument("to_grayscale expects 3 channels");
  PlotRaster out(raster.width, raster.height, 1, 255);
  for (std::size_t y = 0; y < raster.height; ++y)
    for (std::size_t x = 0; x < raster.width; ++x)
      out.at(x, y) = luma(raster.at(x, y, 0), raster.at(x, y, 1), raster.at(x, y, 2));
  return out;
}

PlotRaster to_binary(const PlotRaster& raster, std::uint8_t threshold) {
  const PlotRaster* gray = &raster;
  PlotRaster converted;
  if (raster.channels == 3) {
    converted = to_grayscale(raster);
    gray = &converted;
  }
  PlotRaster out(gray->width, gray->height, 1, 255);
  for (std::size_t i = 0; i < gray->pixels.size(); ++i)
    out.pixels[i] = gray->pixels[i] >= threshold ? 255 : 0;
  return out;
}

PlotRaster render_loss(const LossCurve& curve, const LossPlotConfig& config) {
  if (curve.train_points.size() < 2 || curve.test_points.size() < 2)
    throw std::invalid_argument("render_loss: need >= 2 points per curve");
  if (config.train_color == config.test_color)
    throw std::invalid_argument("render_loss: train/test colors must differ");

  double t_hi = 0.0, loss_hi = 0.0;
  for (const auto& p : curve.train_points) {
    t_hi = std::max(t_hi, p.timestamp);
    loss_hi = std::max(loss_hi, p.loss);
  }
  for (const auto& p : curve.test_points) {
    t_hi = std::max(t_hi, p.timestamp);
    loss_hi = std::max(loss_hi, p.loss);
  }
  if (loss_hi <= 0.0) loss_hi = 1.0;  // all-zero curves still get a frame

  const PixelMapper mx = make_mapper(0.0, t_hi, config.canvas_width, config.margin_fraction);
  const PixelMapper my = make_mapper(0.0, loss_hi * 1.05, config.canvas_height, config.margin_fraction);
  const long h1 = static_cast<long>(config.canvas_height) - 1;

  PlotRaster img(config.canvas_width, config.canvas_height, 3, 255);
  const Rgb black{0, 0, 0};

  if (config.with_axes) {
    const long x0 = mx.map(0.0), x1 = mx.margin + mx.span;
    const long y0 = h1 - my.map(0.0), y1 = h1 - (my.margin + my.span);
    draw_line(img, x0, y0, x1, y0, 1, black);  // x axis
    draw_line(img, x0, y0, x0, y1, 1, black);  // y axis
    const long tick = 4;
    // Train losses arrive 5 per epoch, so one x tick per x_tick_epochs epochs.
    for (double tx = 0.0; tx <= t_hi + 1e-9; tx += config.x_tick_epochs) {
      const long px = mx.map(tx);
      draw_line(img, px, y0, px, y0 + tick, 1, black);
    }
    for (double ty = 0.0; ty <= loss_hi * 1.05 + 1e-9; ty += config.y_tick_loss) {
      const long py = h1 - my.map(ty);
      draw_line(img, x0, py, x0 - tick, py, 1, black);
    }
  }

  auto draw_polyline = [&](const std::vector<LossPoint>& points, Rgb color) {
    long prev_x = 0, prev_y = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const long px = mx.map(points[i].timestamp);
      const long py = h1 - my.map(points[i].loss);
      if (i > 0) draw_line(img, prev_x, prev_y, px, py, config.line_thickness, color);
      prev_x = px;
      prev_y = py;
    }
  };
  draw_polyline(curve.train_points, config.train_color);
  draw_polyline(curve.test_points, config.test_color);
  return img;
}

PlotRaster downsample(const PlotRaster& raster, std::size_t target_width, std::size_t target_height) {
  if (target_width > raster.width || target_height > raster.height)
    throw std::invalid_argument("downsample: upscaling requested");
  if (target_width == 0 || target_height == 0)
    throw std::invalid_argument("downsample: zero target size");
  if (target_width == raster.width && target_height == raster.height) return raster;

  PlotRaster out(target_width, target_height, raster.channels, 0);
  const double sx = static_cast<double>(raster.width) / static_cast<double>(target_width);
  const double sy = static_cast<double>(raster.height) / static_cast<double>(target_height);
  for (std::size_t ty = 0; ty < target_height; ++ty) {
    const double y_begin = static_cast<double>(ty) * sy;
    const double y_end = static_cast<double>(ty + 1) * sy;
    for (std::size_t tx = 0; tx < target_width; ++tx) {
      const double x_begin = static_cast<double>(tx) * sx;
      const double x_end = static_cast<double>(tx + 1) * sx;
      for (std::size_t c = 0; c < raster.channels; ++c) {
        double acc = 0.0;
        for (std::size_t y = static_cast<std::size_t>(std::floor(y_begin));
             y < static_cast<std::size_t>(std::ceil(y_end)); ++y) {
          const double wy = std::min(y_end, static_cast<double>(y + 1)) -
                            std::max(y_begin, static_cast<double>(y));
          if (wy <= 0.0) continue;
          for (std::size_t x = static_cast<std::size_t>(std::floor(x_begin));
               x < static_cast<std::size_t>(std::ceil(x_end)); ++x) {
            const double wx = std::min(x_end, static_cast<double>(x + 1)) -
                              std::max(x_begin, static_cast<double>(x));
            if (wx <= 0.0) continue;
            acc += wx * wy * raster.at(x, y, c);
          }
        }
        const double mean = acc / (sx * sy);
        out.at(tx, ty, c) = static_cast<std::uint8_t>(std::floor(mean + 0.5));  // round half up
      }
    }
  }
  return out;
}

}  // namespace plotsteal

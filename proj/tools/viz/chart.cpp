#include "chart.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "networld/util/require.hpp"

namespace networld::viz {
namespace {

// Columns of a 5x7 glyph, least significant bit on top; ASCII 32..126.
const std::uint8_t kFont[95][5] = {
    {0x00, 0x00, 0x00, 0x00, 0x00}, {0x00, 0x00, 0x5f, 0x00, 0x00},
    {0x00, 0x07, 0x00, 0x07, 0x00}, {0x14, 0x7f, 0x14, 0x7f, 0x14},
    {0x24, 0x2a, 0x7f, 0x2a, 0x12}, {0x23, 0x13, 0x08, 0x64, 0x62},
    {0x36, 0x49, 0x55, 0x22, 0x50}, {0x00, 0x05, 0x03, 0x00, 0x00},
    {0x00, 0x1c, 0x22, 0x41, 0x00}, {0x00, 0x41, 0x22, 0x1c, 0x00},
    {0x14, 0x08, 0x3e, 0x08, 0x14}, {0x08, 0x08, 0x3e, 0x08, 0x08},
    {0x00, 0x50, 0x30, 0x00, 0x00}, {0x08, 0x08, 0x08, 0x08, 0x08},
    {0x00, 0x60, 0x60, 0x00, 0x00}, {0x20, 0x10, 0x08, 0x04, 0x02},
    {0x3e, 0x51, 0x49, 0x45, 0x3e}, {0x00, 0x42, 0x7f, 0x40, 0x00},
    {0x42, 0x61, 0x51, 0x49, 0x46}, {0x21, 0x41, 0x45, 0x4b, 0x31},
    {0x18, 0x14, 0x12, 0x7f, 0x10}, {0x27, 0x45, 0x45, 0x45, 0x39},
    {0x3c, 0x4a, 0x49, 0x49, 0x30}, {0x01, 0x71, 0x09, 0x05, 0x03},
    {0x36, 0x49, 0x49, 0x49, 0x36}, {0x06, 0x49, 0x49, 0x29, 0x1e},
    {0x00, 0x36, 0x36, 0x00, 0x00}, {0x00, 0x56, 0x36, 0x00, 0x00},
    {0x08, 0x14, 0x22, 0x41, 0x00}, {0x14, 0x14, 0x14, 0x14, 0x14},
    {0x00, 0x41, 0x22, 0x14, 0x08}, {0x02, 0x01, 0x51, 0x09, 0x06},
    {0x32, 0x49, 0x79, 0x41, 0x3e}, {0x7e, 0x11, 0x11, 0x11, 0x7e},
    {0x7f, 0x49, 0x49, 0x49, 0x36}, {0x3e, 0x41, 0x41, 0x41, 0x22},
    {0x7f, 0x41, 0x41, 0x22, 0x1c}, {0x7f, 0x49, 0x49, 0x49, 0x41},
    {0x7f, 0x09, 0x09, 0x09, 0x01}, {0x3e, 0x41, 0x49, 0x49, 0x7a},
    {0x7f, 0x08, 0x08, 0x08, 0x7f}, {0x00, 0x41, 0x7f, 0x41, 0x00},
    {0x20, 0x40, 0x41, 0x3f, 0x01}, {0x7f, 0x08, 0x14, 0x22, 0x41},
    {0x7f, 0x40, 0x40, 0x40, 0x40}, {0x7f, 0x02, 0x0c, 0x02, 0x7f},
    {0x7f, 0x04, 0x08, 0x10, 0x7f}, {0x3e, 0x41, 0x41, 0x41, 0x3e},
    {0x7f, 0x09, 0x09, 0x09, 0x06}, {0x3e, 0x41, 0x51, 0x21, 0x5e},
    {0x7f, 0x09, 0x19, 0x29, 0x46}, {0x46, 0x49, 0x49, 0x49, 0x31},
    {0x01, 0x01, 0x7f, 0x01, 0x01}, {0x3f, 0x40, 0x40, 0x40, 0x3f},
    {0x1f, 0x20, 0x40, 0x20, 0x1f}, {0x3f, 0x40, 0x38, 0x40, 0x3f},
    {0x63, 0x14, 0x08, 0x14, 0x63}, {0x07, 0x08, 0x70, 0x08, 0x07},
    {0x61, 0x51, 0x49, 0x45, 0x43}, {0x00, 0x7f, 0x41, 0x41, 0x00},
    {0x02, 0x04, 0x08, 0x10, 0x20}, {0x00, 0x41, 0x41, 0x7f, 0x00},
    {0x04, 0x02, 0x01, 0x02, 0x04}, {0x40, 0x40, 0x40, 0x40, 0x40},
    {0x00, 0x01, 0x02, 0x04, 0x00}, {0x20, 0x54, 0x54, 0x54, 0x78},
    {0x7f, 0x48, 0x44, 0x44, 0x38}, {0x38, 0x44, 0x44, 0x44, 0x20},
    {0x38, 0x44, 0x44, 0x48, 0x7f}, {0x38, 0x54, 0x54, 0x54, 0x18},
    {0x08, 0x7e, 0x09, 0x01, 0x02}, {0x0c, 0x52, 0x52, 0x52, 0x3e},
    {0x7f, 0x08, 0x04, 0x04, 0x78}, {0x00, 0x44, 0x7d, 0x40, 0x00},
    {0x20, 0x40, 0x44, 0x3d, 0x00}, {0x7f, 0x10, 0x28, 0x44, 0x00},
    {0x00, 0x41, 0x7f, 0x40, 0x00}, {0x7c, 0x04, 0x18, 0x04, 0x78},
    {0x7c, 0x08, 0x04, 0x04, 0x78}, {0x38, 0x44, 0x44, 0x44, 0x38},
    {0x7c, 0x14, 0x14, 0x14, 0x08}, {0x08, 0x14, 0x14, 0x18, 0x7c},
    {0x7c, 0x08, 0x04, 0x04, 0x08}, {0x48, 0x54, 0x54, 0x54, 0x20},
    {0x04, 0x3f, 0x44, 0x40, 0x20}, {0x3c, 0x40, 0x40, 0x20, 0x7c},
    {0x1c, 0x20, 0x40, 0x20, 0x1c}, {0x3c, 0x40, 0x30, 0x40, 0x3c},
    {0x44, 0x28, 0x10, 0x28, 0x44}, {0x0c, 0x50, 0x50, 0x50, 0x3c},
    {0x44, 0x64, 0x54, 0x4c, 0x44}, {0x00, 0x08, 0x36, 0x41, 0x00},
    {0x00, 0x00, 0x7f, 0x00, 0x00}, {0x00, 0x41, 0x36, 0x08, 0x00},
    {0x08, 0x04, 0x08, 0x10, 0x08},
};

constexpr Rgb kAxis{40, 40, 40};
constexpr Rgb kGrid{225, 225, 225};

struct Ticks {
  double step = 1.0, first = 0.0;
  int count = 0;
};

// Roughly five human-friendly ticks across [lo, hi].
Ticks make_ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 4.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  const double step = mag * (norm < 1.5 ? 1.0 : norm < 3.5 ? 2.0 : norm < 7.5 ? 5.0 : 10.0);
  Ticks t;
  t.step = step;
  t.first = std::ceil(lo / step) * step;
  t.count = static_cast<int>(std::floor((hi - t.first) / step)) + 1;
  return t;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void pad_range(double& lo, double& hi) {
  if (lo == hi) {
    lo -= 1.0;
    hi += 1.0;
    return;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
}

struct Frame {
  int x0, y0, x1, y1;  // plot rectangle, y grows downward
  double xlo, xhi, ylo, yhi;

  int px(double x) const {
    return x0 + static_cast<int>(std::lround((x - xlo) / (xhi - xlo) * (x1 - x0)));
  }
  int py(double y) const {
    return y1 - static_cast<int>(std::lround((y - ylo) / (yhi - ylo) * (y1 - y0)));
  }
};

void draw_frame(Image& img, const Frame& f, const std::string& title, const std::string& x_label,
                const std::string& y_label, bool x_ticks = true) {
  const Ticks ty = make_ticks(f.ylo, f.yhi);
  for (int i = 0; i < ty.count; ++i) {
    const double v = ty.first + i * ty.step;
    const int y = f.py(v);
    draw_line(img, f.x0 + 1, y, f.x1, y, kGrid);
    const std::string lab = tick_label(v);
    draw_text(img, f.x0 - 6 - text_width(lab), y - 3, lab, kAxis);
    draw_line(img, f.x0 - 3, y, f.x0, y, kAxis);
  }
  if (x_ticks) {
    const Ticks tx = make_ticks(f.xlo, f.xhi);
    for (int i = 0; i < tx.count; ++i) {
      const double v = tx.first + i * tx.step;
      const int x = f.px(v);
      draw_line(img, x, f.y1, x, f.y1 + 3, kAxis);
      const std::string lab = tick_label(v);
      draw_text(img, x - text_width(lab) / 2, f.y1 + 6, lab, kAxis);
    }
  }
  draw_line(img, f.x0, f.y0, f.x0, f.y1, kAxis);
  draw_line(img, f.x0, f.y1, f.x1, f.y1, kAxis);
  draw_text(img, (f.x0 + f.x1 - text_width(title)) / 2, 8, title, kAxis);
  draw_text(img, (f.x0 + f.x1 - text_width(x_label)) / 2, f.y1 + 18, x_label, kAxis);
  draw_text(img, 4, 8, y_label, kAxis);
}

}  // namespace

Rgb palette(size_t i) {
  static const Rgb kPalette[] = {{31, 119, 180}, {255, 127, 14}, {44, 160, 44},  {214, 39, 40},
                                 {148, 103, 189}, {140, 86, 75}, {227, 119, 194}, {127, 127, 127}};
  return kPalette[i % (sizeof kPalette / sizeof kPalette[0])];
}

void draw_line(Image& img, int x0, int y0, int x1, int y1, Rgb c) {
  const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    img.set(x0, y0, c.r, c.g, c.b);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
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

void draw_text(Image& img, int x, int y, const std::string& text, Rgb c, int scale) {
  for (const char ch : text) {
    if (ch >= 32 && ch <= 126) {
      const std::uint8_t* glyph = kFont[ch - 32];
      for (int col = 0; col < 5; ++col)
        for (int row = 0; row < 7; ++row)
          if (glyph[col] >> row & 1)
            for (int i = 0; i < scale; ++i)
              for (int j = 0; j < scale; ++j)
                img.set(x + col * scale + i, y + row * scale + j, c.r, c.g, c.b);
    }
    x += 6 * scale;
  }
}

int text_width(const std::string& text, int scale) {
  return text.empty() ? 0 : (static_cast<int>(text.size()) * 6 - 1) * scale;
}

Image render_curves(int width, int height, const std::string& title, const std::string& x_label,
                    const std::string& y_label, const std::vector<Series>& series) {
  util::require(!series.empty(), "nothing to plot");
  double xlo = 0, xhi = 0, ylo = 0, yhi = 0;
  bool first = true;
  for (const auto& s : series) {
    util::require(!s.x.empty() && s.x.size() == s.y.size(), "series '", s.label,
                  "' must pair every x with a y");
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (first) {
        xlo = xhi = s.x[i];
        ylo = yhi = s.y[i];
        first = false;
      }
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i]);
      yhi = std::max(yhi, s.y[i]);
    }
  }
  if (xlo == xhi) {
    xlo -= 1.0;
    xhi += 1.0;
  }
  pad_range(ylo, yhi);

  Image img(width, height);
  const Frame f{64, 24, width - 16, height - 40, xlo, xhi, ylo, yhi};
  draw_frame(img, f, title, x_label, y_label);

  for (size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const Rgb c = palette(k);
    if (s.x.size() == 1) {
      const int x = f.px(s.x[0]), y = f.py(s.y[0]);
      for (int dx = -1; dx <= 1; ++dx)
        for (int dy = -1; dy <= 1; ++dy) img.set(x + dx, y + dy, c.r, c.g, c.b);
    }
    for (size_t i = 0; i + 1 < s.x.size(); ++i)
      draw_line(img, f.px(s.x[i]), f.py(s.y[i]), f.px(s.x[i + 1]), f.py(s.y[i + 1]), c);
    const int ly = f.y0 + 4 + 10 * static_cast<int>(k);
    draw_line(img, f.x1 - 90, ly + 3, f.x1 - 76, ly + 3, c);
    draw_text(img, f.x1 - 72, ly, s.label, kAxis);
  }
  return img;
}

Image render_bars(int width, int height, const std::string& title, const std::string& y_label,
                  const std::vector<Bar>& bars) {
  util::require(!bars.empty(), "nothing to plot");
  double ylo = 0.0, yhi = 0.0;  // the zero baseline always shows
  for (const auto& b : bars) {
    ylo = std::min(ylo, b.value);
    yhi = std::max(yhi, b.value);
  }
  pad_range(ylo, yhi);

  Image img(width, height);
  const Frame f{64, 24, width - 16, height - 40, 0.0, 1.0, ylo, yhi};
  draw_frame(img, f, title, "", y_label, /*x_ticks=*/false);

  const int n = static_cast<int>(bars.size());
  const double slot = 1.0 / n;
  const int base = f.py(0.0);
  for (int k = 0; k < n; ++k) {
    const Rgb c = palette(static_cast<size_t>(k));
    const int xa = f.px(k * slot + 0.2 * slot), xb = f.px(k * slot + 0.8 * slot);
    const int top = f.py(bars[k].value);
    for (int x = xa; x <= xb; ++x)
      draw_line(img, x, std::min(base, top), x, std::max(base, top), c);
    const int mid = (xa + xb) / 2;
    draw_text(img, mid - text_width(bars[k].label) / 2, f.y1 + 6, bars[k].label, kAxis);
    const std::string val = tick_label(bars[k].value);
    const int vy = bars[k].value >= 0 ? top - 10 : top + 4;
    draw_text(img, mid - text_width(val) / 2, vy, val, kAxis);
  }
  draw_line(img, f.x0, base, f.x1, base, kAxis);
  return img;
}

}  // namespace networld::viz

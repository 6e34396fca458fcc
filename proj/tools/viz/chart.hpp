#pragma once

#include <string>
#include <vector>

#include "png.hpp"

namespace networld::viz {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
};

// Cycling series palette.
Rgb palette(size_t i);

void draw_line(Image& img, int x0, int y0, int x1, int y1, Rgb c);
void draw_text(Image& img, int x, int y, const std::string& text, Rgb c, int scale = 1);
int text_width(const std::string& text, int scale = 1);

struct Series {
  std::string label;
  std::vector<double> x, y;  // same length, at least one point
};

// Line chart with axes, ticks, faint gridlines, and a legend.
Image render_curves(int width, int height, const std::string& title, const std::string& x_label,
                    const std::string& y_label, const std::vector<Series>& series);

struct Bar {
  std::string label;
  double value = 0.0;
};

// Bar chart around a zero baseline; negative values hang below it.
Image render_bars(int width, int height, const std::string& title, const std::string& y_label,
                  const std::vector<Bar>& bars);

}  // namespace networld::viz

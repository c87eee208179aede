#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace nmguard::svg {

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
  bool scatter = false;
};

struct Chart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  // Optional horizontal guide lines (e.g. confidence band edges).
  std::vector<double> guides;
};

/// Self-contained SVG line/scatter rendering.
std::string render(const Chart& chart, int width = 640, int height = 420);
void write(const std::filesystem::path& path, const Chart& chart);

}  // namespace nmguard::svg

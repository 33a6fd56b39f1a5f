#pragma once

#include "tcz/controls.hpp"
#include "tcz/signal.hpp"

#include <string>
#include <vector>

namespace tcz {

// Lines of `comment` become "# " lines ahead of the column header.
std::string pulse_csv(const Pulse& p, const std::string& comment = "");
std::string spectrum_csv(const AmplitudeSpectrum& s, const std::string& comment = "");
// t_ns plus one column per named trace, all of the same length.
std::string traces_csv(double dt, const std::vector<std::string>& names, const std::vector<VectorXd>& traces,
                       const std::string& comment = "");

// Creates parent directories; throws std::runtime_error on failure.
void write_file(const std::string& path, const std::string& content);

struct PlotSeries {
  std::string name;
  std::vector<double> x, y;
};
struct PlotSpec {
  std::string title, xlabel, ylabel;
  bool log_y = false;
};
// Static SVG line plot; non-finite (and, on log axes, non-positive) points are skipped.
std::string svg_plot(const PlotSpec& spec, const std::vector<PlotSeries>& series);

}  // namespace tcz

#include "tcz/io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace tcz {

namespace {

void comment_lines(std::ostream& os, const std::string& comment) {
  std::istringstream in(comment);
  for (std::string line; std::getline(in, line);) os << "# " << line << '\n';
}

}  // namespace

std::string pulse_csv(const Pulse& p, const std::string& comment) {
  std::ostringstream os;
  comment_lines(os, comment);
  os << "t_ns,omega01_rad_per_ns,EJ_rad_per_ns,flux_phi0\n" << std::setprecision(15);
  for (Eigen::Index k = 0; k < p.size(); ++k)
    os << p.t(k) << ',' << p.omega01(k) << ',' << p.E_J(k) << ',' << p.flux(k) << '\n';
  return os.str();
}

std::string spectrum_csv(const AmplitudeSpectrum& s, const std::string& comment) {
  std::ostringstream os;
  comment_lines(os, comment);
  os << "freq_GHz,amplitude\n" << std::setprecision(12);
  for (Eigen::Index k = 0; k < s.freq_ghz.size(); ++k) os << s.freq_ghz(k) << ',' << s.amplitude(k) << '\n';
  return os.str();
}

std::string traces_csv(double dt, const std::vector<std::string>& names, const std::vector<VectorXd>& traces,
                       const std::string& comment) {
  if (names.size() != traces.size() || traces.empty()) throw std::invalid_argument("traces_csv: names and traces");
  for (const auto& t : traces)
    if (t.size() != traces.front().size()) throw std::invalid_argument("traces_csv: traces differ in length");
  std::ostringstream os;
  comment_lines(os, comment);
  os << "t_ns";
  for (const auto& n : names) os << ',' << n;
  os << '\n' << std::setprecision(15);
  for (Eigen::Index k = 0; k < traces.front().size(); ++k) {
    os << dt * double(k);
    for (const auto& t : traces) os << ',' << t(k);
    os << '\n';
  }
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

std::string svg_plot(const PlotSpec& spec, const std::vector<PlotSeries>& series) {
  constexpr double W = 640, H = 420, L = 70, R = 150, Tm = 40, B = 50;
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};
  auto ok = [&](double x, double y) { return std::isfinite(x) && std::isfinite(y) && (!spec.log_y || y > 0); };
  auto fy = [&](double y) { return spec.log_y ? std::log10(y) : y; };
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series)
    for (size_t i = 0; i < s.x.size() && i < s.y.size(); ++i)
      if (ok(s.x[i], s.y[i])) {
        x0 = std::min(x0, s.x[i]);
        x1 = std::max(x1, s.x[i]);
        y0 = std::min(y0, fy(s.y[i]));
        y1 = std::max(y1, fy(s.y[i]));
      }
  if (!(x0 <= x1)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  if (spec.log_y) y0 = std::floor(y0), y1 = std::ceil(y1);
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (fy(y) - y0) / (y1 - y0) * (H - Tm - B); };

  std::ostringstream os;
  os << std::setprecision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<rect x=\"" << L << "\" y=\"" << Tm << "\" width=\"" << W - L - R << "\" height=\"" << H - Tm - B
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << (W - R + L) / 2 << "\" y=\"24\" text-anchor=\"middle\">" << spec.title << "</text>\n";
  os << "<text x=\"" << (W - R + L) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << spec.xlabel << "</text>\n";
  os << "<text transform=\"translate(16," << (H - B + Tm) / 2 << ") rotate(-90)\" text-anchor=\"middle\">" << spec.ylabel
     << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double x = x0 + (x1 - x0) * i / 4, X = px(x);
    os << "<text x=\"" << X << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << x << "</text>\n";
  }
  const int ny = spec.log_y ? int(y1 - y0) : 4;
  for (int i = 0; i <= ny; ++i) {
    const double v = y0 + (y1 - y0) * i / std::max(ny, 1);
    const double Y = H - B - (v - y0) / (y1 - y0) * (H - Tm - B);
    os << "<text x=\"" << L - 6 << "\" y=\"" << Y + 4 << "\" text-anchor=\"end\">";
    if (spec.log_y)
      os << "1e" << int(std::lround(v));
    else
      os << v;
    os << "</text>\n";
  }
  for (size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* c = colors[k % 7];
    os << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < s.x.size() && i < s.y.size(); ++i)
      if (ok(s.x[i], s.y[i])) os << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
    os << "\"/>\n";
    const double ly = Tm + 16 + 18 * double(k);
    os << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << W - R + 30 << "\" y2=\"" << ly - 4
       << "\" stroke=\"" << c << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << W - R + 36 << "\" y=\"" << ly << "\">" << s.name << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace tcz

#include "adexsbi/inference/plot.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>
#include <stdexcept>

namespace adexsbi::inference {
namespace {

std::size_t bin_of(int code, std::size_t bins) {
  const auto span = static_cast<std::size_t>(hw::kCodeMax - hw::kCodeMin + 1);
  return std::min(bins - 1, static_cast<std::size_t>(code - hw::kCodeMin) * bins / span);
}

std::ofstream open(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

void write_corner_histograms(const std::filesystem::path& dir, const PosteriorSampleSet& s, std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("write_corner_histograms: bins must be positive");
  std::filesystem::create_directories(dir);
  const std::size_t d = hw::kNumFree;
  auto one = open(dir / "corner_1d.csv");
  one << "parameter,bin,lo,hi,count\n";
  const double width = static_cast<double>(hw::kCodeMax - hw::kCodeMin + 1) / static_cast<double>(bins);
  for (std::size_t k = 0; k < d; ++k) {
    std::vector<std::size_t> h(bins, 0);
    for (const auto& c : s.codes) ++h[bin_of(c[k], bins)];
    for (std::size_t b = 0; b < bins; ++b) {
      one << hw::kParamNames[k] << ',' << b << ',' << b * width << ',' << (b + 1) * width << ',' << h[b] << '\n';
    }
  }
  auto two = open(dir / "corner_2d.csv");
  two << "param_x,param_y,bin_x,bin_y,count\n";
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      std::vector<std::size_t> h(bins * bins, 0);
      for (const auto& c : s.codes) ++h[bin_of(c[i], bins) * bins + bin_of(c[j], bins)];
      for (std::size_t a = 0; a < bins; ++a) {
        for (std::size_t b = 0; b < bins; ++b) {
          if (h[a * bins + b] == 0) continue;
          two << hw::kParamNames[i] << ',' << hw::kParamNames[j] << ',' << a << ',' << b << ',' << h[a * bins + b]
              << '\n';
        }
      }
    }
  }
}

void write_trace_svg(const std::filesystem::path& path, const std::vector<TraceSeries>& series,
                     const std::string& title) {
  constexpr double W = 800, H = 300, M = 40;
  double t0 = std::numeric_limits<double>::infinity(), t1 = -t0, v0 = t0, v1 = -t0;
  for (const auto& s : series) {
    if (!s.trace || s.trace->size() < 2) continue;
    t0 = std::min(t0, s.trace->t0);
    t1 = std::max(t1, s.trace->t_end);
    for (float v : s.trace->voltages) {
      v0 = std::min<double>(v0, v);
      v1 = std::max<double>(v1, v);
    }
  }
  auto out = open(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << M << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
  if (t1 > t0 && v1 >= v0) {
    if (v1 == v0) v1 = v0 + 1e-3;
    auto x = [&](double t) { return M + (t - t0) / (t1 - t0) * (W - 2 * M); };
    auto y = [&](double v) { return H - M - (v - v0) / (v1 - v0) * (H - 2 * M); };
    out << std::fixed << std::setprecision(2);
    std::size_t legend = 0;
    for (const auto& s : series) {
      if (!s.trace || s.trace->size() < 2) continue;
      out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1\" points=\"";
      // Thin to at most ~2000 points; the full data lives in the CSV.
      const std::size_t step = std::max<std::size_t>(1, s.trace->size() / 2000);
      for (std::size_t i = 0; i < s.trace->size(); i += step) {
        out << x(s.trace->time(i)) << ',' << y(s.trace->voltages[i]) << ' ';
      }
      out << "\"/>\n";
      out << "<text x=\"" << W - 2 * M - 100 << "\" y=\"" << 20 + 16 * legend++ << "\" font-family=\"sans-serif\" "
          << "font-size=\"12\" fill=\"" << s.color << "\">" << s.label << "</text>\n";
    }
    out << "<line x1=\"" << M << "\" y1=\"" << H - M << "\" x2=\"" << W - M << "\" y2=\"" << H - M
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << W / 2 << "\" y=\"" << H - 8 << "\" font-family=\"sans-serif\" font-size=\"12\">time ["
        << t0 * 1e3 << ", " << t1 * 1e3 << "] ms</text>\n";
  }
  out << "</svg>\n";
}

void write_marginals_svg(const std::filesystem::path& path, const PosteriorSampleSet& s, std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("write_marginals_svg: bins must be positive");
  constexpr double PW = 220, PH = 140, M = 20;
  const std::size_t cols = 4;
  const std::size_t rows = (hw::kNumFree + cols - 1) / cols;
  auto out = open(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << cols * PW << "\" height=\"" << rows * PH << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" << std::fixed << std::setprecision(2);
  for (std::size_t k = 0; k < hw::kNumFree; ++k) {
    std::vector<std::size_t> h(bins, 0);
    for (const auto& c : s.codes) ++h[bin_of(c[k], bins)];
    const double peak = static_cast<double>(std::max<std::size_t>(1, *std::max_element(h.begin(), h.end())));
    const double ox = static_cast<double>(k % cols) * PW, oy = static_cast<double>(k / cols) * PH;
    const double bw = (PW - 2 * M) / static_cast<double>(bins);
    out << "<text x=\"" << ox + M << "\" y=\"" << oy + 14 << "\" font-family=\"sans-serif\" font-size=\"12\">"
        << hw::kParamNames[k] << "</text>\n";
    for (std::size_t b = 0; b < bins; ++b) {
      const double hgt = static_cast<double>(h[b]) / peak * (PH - 2 * M - 4);
      out << "<rect x=\"" << ox + M + static_cast<double>(b) * bw << "\" y=\"" << oy + PH - M - hgt << "\" width=\""
          << bw << "\" height=\"" << hgt << "\" fill=\"steelblue\"/>\n";
    }
  }
  out << "</svg>\n";
}

}  // namespace adexsbi::inference

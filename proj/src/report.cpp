#include "sticky/report.hpp"

#include "sticky/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#ifndef STICKY_VERSION
#define STICKY_VERSION "unknown"
#endif

namespace sticky {

std::string version_string() { return STICKY_VERSION; }

void write_csv_preamble(std::ostream& out, const nlohmann::json& config) {
  out << "# version: " << version_string() << '\n';
  out << "# config: " << config.dump() << '\n';
}

nlohmann::json with_provenance(nlohmann::json payload, const nlohmann::json& config) {
  payload["version"] = version_string();
  payload["config"] = config;
  return payload;
}

void write_fan_chart_svg(std::ostream& out, const std::string& title, const Eigen::VectorXd& t,
                         const std::vector<Eigen::VectorXd>& series) {
  if (series.empty() || t.size() < 2) throw DomainError("fan chart needs at least one series of two points");
  const Eigen::Index T = t.size();
  const std::vector<double> probs{0.05, 0.25, 0.5, 0.75, 0.95};
  Eigen::MatrixXd q(probs.size(), T);
  std::vector<double> col(series.size());
  for (Eigen::Index k = 0; k < T; ++k) {
    for (std::size_t p = 0; p < series.size(); ++p) col[p] = series[p][k];
    std::sort(col.begin(), col.end());
    for (std::size_t i = 0; i < probs.size(); ++i) {
      double pos = probs[i] * static_cast<double>(col.size() - 1);
      auto lo = static_cast<std::size_t>(std::floor(pos));
      auto hi = std::min(lo + 1, col.size() - 1);
      q(static_cast<Eigen::Index>(i), k) = col[lo] + (pos - static_cast<double>(lo)) * (col[hi] - col[lo]);
    }
  }
  const double W = 640, H = 400, L = 60, R = 20, Tp = 40, B = 40;
  double ymin = q.row(0).minCoeff(), ymax = q.row(probs.size() - 1).maxCoeff();
  if (!(ymax > ymin)) ymax = ymin + 1.0;
  const double t0 = t[0], t1 = t[T - 1];
  auto X = [&](double v) { return L + (v - t0) / (t1 - t0) * (W - L - R); };
  auto Y = [&](double v) { return H - B - (v - ymin) / (ymax - ymin) * (H - Tp - B); };

  out << std::fixed << std::setprecision(2);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
      << title << "</text>\n";
  auto band = [&](int lo, int hi, const char* fill) {
    out << "<polygon fill=\"" << fill << "\" stroke=\"none\" points=\"";
    for (Eigen::Index k = 0; k < T; ++k) out << X(t[k]) << ',' << Y(q(hi, k)) << ' ';
    for (Eigen::Index k = T - 1; k >= 0; --k) out << X(t[k]) << ',' << Y(q(lo, k)) << ' ';
    out << "\"/>\n";
  };
  band(0, 4, "#c6dbef");
  band(1, 3, "#6baed6");
  out << "<polyline fill=\"none\" stroke=\"#08306b\" stroke-width=\"1.5\" points=\"";
  for (Eigen::Index k = 0; k < T; ++k) out << X(t[k]) << ',' << Y(q(2, k)) << ' ';
  out << "\"/>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << Tp << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  out << std::setprecision(3);
  out << "<text x=\"" << L - 4 << "\" y=\"" << H - B << "\" text-anchor=\"end\" font-size=\"10\">" << ymin << "</text>\n";
  out << "<text x=\"" << L - 4 << "\" y=\"" << Tp + 4 << "\" text-anchor=\"end\" font-size=\"10\">" << ymax << "</text>\n";
  out << "<text x=\"" << L << "\" y=\"" << H - B + 14 << "\" font-size=\"10\">" << t0 << "</text>\n";
  out << "<text x=\"" << W - R << "\" y=\"" << H - B + 14 << "\" text-anchor=\"end\" font-size=\"10\">t = " << t1
      << "</text>\n";
  out << "</svg>\n";
}

}  // namespace sticky

#include "abundance/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

#include "abundance/errors.hpp"
#include "abundance/trend.hpp"

namespace abundance::plot {

namespace {

constexpr double kPanelW = 460, kPanelH = 300;
constexpr double kLeft = 70, kRight = 20, kTop = 36, kBottom = 44;
constexpr const char* kNaive = "#7f7f7f";
constexpr const char* kTransfer = "#d62728";
constexpr const char* kTruth = "#1f3fbf";

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

struct Frame {
  double x0, y0;  // panel origin
  double xmin, xmax, ymin, ymax;
  double sx(double x) const { return x0 + kLeft + (x - xmin) / (xmax - xmin) * (kPanelW - kLeft - kRight); }
  double sy(double y) const { return y0 + kTop + (ymax - y) / (ymax - ymin) * (kPanelH - kTop - kBottom); }
};

void pad(double& lo, double& hi) {
  if (!(hi > lo)) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double m = 0.05 * (hi - lo);
  lo -= m;
  hi += m;
}

void axes(std::ostream& o, const Frame& f, const std::string& title, const std::string& xlabel) {
  const double l = f.x0 + kLeft, r = f.x0 + kPanelW - kRight;
  const double t = f.y0 + kTop, b = f.y0 + kPanelH - kBottom;
  o << "<rect x=\"" << px(l) << "\" y=\"" << px(t) << "\" width=\"" << px(r - l) << "\" height=\"" << px(b - t)
    << "\" fill=\"none\" stroke=\"#333\"/>\n";
  o << "<text x=\"" << px((l + r) / 2) << "\" y=\"" << px(f.y0 + 22) << "\" text-anchor=\"middle\">" << title
    << "</text>\n";
  o << "<text x=\"" << px((l + r) / 2) << "\" y=\"" << px(f.y0 + kPanelH - 8) << "\" text-anchor=\"middle\">"
    << xlabel << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double yv = f.ymin + (f.ymax - f.ymin) * i / 4.0;
    const double xv = f.xmin + (f.xmax - f.xmin) * i / 4.0;
    o << "<text x=\"" << px(l - 6) << "\" y=\"" << px(f.sy(yv) + 4) << "\" text-anchor=\"end\">" << num(yv)
      << "</text>\n";
    o << "<text x=\"" << px(f.sx(xv)) << "\" y=\"" << px(b + 16) << "\" text-anchor=\"middle\">" << num(xv)
      << "</text>\n";
  }
}

struct Band {
  std::vector<double> lo, mid, hi;
};

Band band(const Eigen::MatrixXd& draws, int J, int j, std::size_t T) {
  Band b;
  std::vector<double> col;
  for (std::size_t t = 0; t < T; ++t) {
    const auto c = static_cast<Eigen::Index>(t) * J + j;
    col.assign(draws.col(c).data(), draws.col(c).data() + draws.rows());
    std::sort(col.begin(), col.end());
    b.lo.push_back(trend::quantile_sorted(col, 0.025));
    b.mid.push_back(trend::quantile_sorted(col, 0.5));
    b.hi.push_back(trend::quantile_sorted(col, 0.975));
  }
  return b;
}

void draw_band(std::ostream& o, const Frame& f, const std::vector<int>& years, const Band& b, const char* colour) {
  o << "<polygon fill=\"" << colour << "\" fill-opacity=\"0.25\" stroke=\"none\" points=\"";
  for (std::size_t t = 0; t < years.size(); ++t) o << px(f.sx(years[t])) << ',' << px(f.sy(b.hi[t])) << ' ';
  for (std::size_t t = years.size(); t-- > 0;) o << px(f.sx(years[t])) << ',' << px(f.sy(b.lo[t])) << ' ';
  o << "\"/>\n<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
  for (std::size_t t = 0; t < years.size(); ++t) o << px(f.sx(years[t])) << ',' << px(f.sy(b.mid[t])) << ' ';
  o << "\"/>\n";
}

void cross(std::ostream& o, double x, double y) {
  o << "<path d=\"M" << px(x - 4) << ' ' << px(y - 4) << "L" << px(x + 4) << ' ' << px(y + 4) << "M" << px(x - 4)
    << ' ' << px(y + 4) << "L" << px(x + 4) << ' ' << px(y - 4) << "\" stroke=\"" << kTruth
    << "\" stroke-width=\"2\"/>\n";
}

void begin(std::ostream& o, int panels) {
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px(kPanelW * panels) << "\" height=\""
    << px(kPanelH + 24) << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

void legend(std::ostream& o, bool naive, bool transfer, bool truth) {
  double x = 12;
  const double y = kPanelH + 14;
  auto item = [&](const char* colour, const char* label) {
    o << "<rect x=\"" << px(x) << "\" y=\"" << px(y - 9) << "\" width=\"14\" height=\"10\" fill=\"" << colour
      << "\"/>\n<text x=\"" << px(x + 18) << "\" y=\"" << px(y) << "\">" << label << "</text>\n";
    x += 110;
  };
  if (naive) item(kNaive, "naive");
  if (transfer) item(kTransfer, "transfer");
  if (truth) item(kTruth, "truth");
}

void check(const Series& s) {
  if (s.n_classes < 1 || s.years.empty()) throw ValidationError("plot: no years or classes");
  const auto cols = static_cast<Eigen::Index>(s.years.size()) * s.n_classes;
  if (s.naive.size() == 0 && s.transfer.size() == 0) throw ValidationError("plot: nothing to draw");
  if (s.naive.size() != 0 && s.naive.cols() != cols) throw ValidationError("plot: naive draws have the wrong width");
  if (s.transfer.size() != 0 && s.transfer.cols() != cols)
    throw ValidationError("plot: transfer draws have the wrong width");
  if (s.truth && (s.truth->rows() != static_cast<Eigen::Index>(s.years.size()) || s.truth->cols() != s.n_classes))
    throw ValidationError("plot: truth has the wrong shape");
}

std::vector<double> class_u(const Eigen::MatrixXd& draws, int J, int j, std::size_t T) {
  std::vector<double> flat(static_cast<std::size_t>(draws.rows()) * T);
  for (Eigen::Index s = 0; s < draws.rows(); ++s)
    for (std::size_t t = 0; t < T; ++t)
      flat[static_cast<std::size_t>(s) * T + t] = draws(s, static_cast<Eigen::Index>(t) * J + j);
  return trend::mk_posterior(flat, T);
}

}  // namespace

void write_trajectory_svg(std::ostream& o, const Series& s) {
  check(s);
  const std::size_t T = s.years.size();
  begin(o, s.n_classes);
  for (int j = 0; j < s.n_classes; ++j) {
    std::optional<Band> bn, bt;
    if (s.naive.size()) bn = band(s.naive, s.n_classes, j, T);
    if (s.transfer.size()) bt = band(s.transfer, s.n_classes, j, T);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto* b : {bn ? &*bn : nullptr, bt ? &*bt : nullptr}) {
      if (!b) continue;
      lo = std::min(lo, *std::min_element(b->lo.begin(), b->lo.end()));
      hi = std::max(hi, *std::max_element(b->hi.begin(), b->hi.end()));
    }
    if (s.truth) {
      lo = std::min(lo, s.truth->col(j).minCoeff());
      hi = std::max(hi, s.truth->col(j).maxCoeff());
    }
    lo = std::max(0.0, lo);
    pad(lo, hi);
    double xlo = s.years.front(), xhi = s.years.back();
    pad(xlo, xhi);
    const Frame f{kPanelW * j, 0, xlo, xhi, lo, hi};
    axes(o, f, "Size class " + std::to_string(j + 1), "year");
    if (bn) draw_band(o, f, s.years, *bn, kNaive);
    if (bt) draw_band(o, f, s.years, *bt, kTransfer);
    if (s.truth)
      for (std::size_t t = 0; t < T; ++t)
        cross(o, f.sx(s.years[t]), f.sy((*s.truth)(static_cast<Eigen::Index>(t), j)));
  }
  legend(o, s.naive.size() != 0, s.transfer.size() != 0, s.truth.has_value());
  o << "</svg>\n";
}

void write_mann_kendall_svg(std::ostream& o, const Series& s) {
  check(s);
  const std::size_t T = s.years.size();
  constexpr int kBins = 30;
  begin(o, s.n_classes);
  for (int j = 0; j < s.n_classes; ++j) {
    std::vector<double> un, ut;
    if (s.naive.size()) un = class_u(s.naive, s.n_classes, j, T);
    if (s.transfer.size()) ut = class_u(s.transfer, s.n_classes, j, T);
    std::optional<double> u_true;
    if (s.truth) {
      std::vector<double> tv(s.truth->col(j).data(), s.truth->col(j).data() + T);
      u_true = trend::mann_kendall_u(tv);
    }
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto* v : {&un, &ut})
      for (double u : *v) {
        lo = std::min(lo, u);
        hi = std::max(hi, u);
      }
    if (u_true) {
      lo = std::min(lo, *u_true);
      hi = std::max(hi, *u_true);
    }
    pad(lo, hi);
    const double w = (hi - lo) / kBins;
    auto hist = [&](const std::vector<double>& v) {
      std::vector<double> h(kBins, 0.0);
      for (double u : v) h[static_cast<std::size_t>(std::clamp(static_cast<int>((u - lo) / w), 0, kBins - 1))] += 1;
      for (auto& c : h) c /= (static_cast<double>(v.size()) * w);
      return h;
    };
    const auto hn = un.empty() ? std::vector<double>{} : hist(un);
    const auto ht = ut.empty() ? std::vector<double>{} : hist(ut);
    double top = 0.0;
    for (const auto* h : {&hn, &ht})
      for (double c : *h) top = std::max(top, c);
    if (!(top > 0.0)) top = 1.0;
    const Frame f{kPanelW * j, 0, lo, hi, 0.0, top * 1.05};
    axes(o, f, "Size class " + std::to_string(j + 1), "Mann-Kendall U");
    for (const auto& [h, colour] : {std::pair{&hn, kNaive}, std::pair{&ht, kTransfer}}) {
      for (int b = 0; b < static_cast<int>(h->size()); ++b) {
        const double x0 = f.sx(lo + b * w), x1 = f.sx(lo + (b + 1) * w);
        const double y1 = f.sy((*h)[static_cast<std::size_t>(b)]), y0 = f.sy(0.0);
        o << "<rect x=\"" << px(x0) << "\" y=\"" << px(y1) << "\" width=\"" << px(x1 - x0) << "\" height=\""
          << px(y0 - y1) << "\" fill=\"" << colour << "\" fill-opacity=\"0.5\"/>\n";
      }
    }
    if (u_true)
      o << "<line x1=\"" << px(f.sx(*u_true)) << "\" x2=\"" << px(f.sx(*u_true)) << "\" y1=\"" << px(f.sy(0.0))
        << "\" y2=\"" << px(f.sy(top * 1.05)) << "\" stroke=\"" << kTruth << "\" stroke-width=\"2\"/>\n";
  }
  legend(o, s.naive.size() != 0, s.transfer.size() != 0, s.truth.has_value());
  o << "</svg>\n";
}

}  // namespace abundance::plot

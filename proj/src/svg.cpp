#include "tickerwatch/svg.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "tickerwatch/common.hpp"

namespace tickerwatch {
namespace {

std::string num(double v) { return fmt_double(v, 8); }

struct Panel {
  double x0, y0, width, height;  // pixel box
  double lo, hi;                 // data range on y

  double map_y(double v) const { return y0 + height - (v - lo) / (hi - lo) * height; }
};

void panel_frame(std::ostream& out, const Panel& p, const std::string& title) {
  out << "<rect x='" << num(p.x0) << "' y='" << num(p.y0) << "' width='" << num(p.width)
      << "' height='" << num(p.height) << "' fill='none' stroke='#888'/>\n";
  out << "<text x='" << num(p.x0 + 4) << "' y='" << num(p.y0 + 14)
      << "' font-size='12' fill='#333'>" << title << "</text>\n";
}

void dashed_hline(std::ostream& out, const Panel& p, double v) {
  if (v < p.lo || v > p.hi) return;
  double y = p.map_y(v);
  out << "<line x1='" << num(p.x0) << "' y1='" << num(y) << "' x2='" << num(p.x0 + p.width)
      << "' y2='" << num(y) << "' stroke='#555' stroke-dasharray='4,3'/>\n";
}

std::pair<double, double> padded_range(const Eigen::VectorXd& v, double floor_lo, double cap_hi) {
  double lo = std::min(floor_lo, v.minCoeff());
  double hi = std::max(cap_hi, v.maxCoeff());
  double pad = 0.05 * (hi - lo + 1e-12);
  return {lo - pad, hi + pad};
}

}  // namespace

void write_event_study_chart(std::ostream& out, const EventStudyResult& result) {
  const int width = 760, panel_h = 180, gap = 30, margin = 40;
  const int n = static_cast<int>(result.tau_offsets.size());
  const int height = margin * 2 + panel_h * 3 + gap * 2;
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "' font-family='sans-serif'>\n";
  out << "<text x='" << margin << "' y='20' font-size='14'>" << result.event.ticker
      << " event study, event date " << result.event.event_date.to_string() << "</text>\n";

  double plot_w = width - 2.0 * margin;
  double slot = plot_w / n;
  auto x_of = [&](int i) { return margin + slot * (i + 0.5); };
  int zero_pos = -result.tau_offsets.front();

  struct Spec {
    const Eigen::VectorXd* data;
    std::string title;
    double ref;
    bool bars;
  };
  std::vector<Spec> specs = {{&result.ar, "abnormal return", 0.0, true},
                             {&result.car, "cumulative abnormal return", 0.0, false},
                             {&result.avol, "abnormal volume", 1.0, true}};

  for (std::size_t s = 0; s < specs.size(); ++s) {
    Panel p;
    p.x0 = margin;
    p.y0 = margin + static_cast<double>(s) * (panel_h + gap);
    p.width = plot_w;
    p.height = panel_h;
    auto [lo, hi] = padded_range(*specs[s].data, specs[s].ref, specs[s].ref);
    p.lo = lo;
    p.hi = hi;
    panel_frame(out, p, specs[s].title);
    dashed_hline(out, p, specs[s].ref);

    if (specs[s].bars) {
      double base = p.map_y(std::clamp(specs[s].ref, p.lo, p.hi));
      for (int i = 0; i < n; ++i) {
        double v = (*specs[s].data)[i];
        double y = p.map_y(v);
        out << "<rect x='" << num(x_of(i) - slot * 0.35) << "' y='" << num(std::min(y, base))
            << "' width='" << num(slot * 0.7) << "' height='" << num(std::abs(base - y))
            << "' fill='" << (v >= specs[s].ref ? "#2b6cb0" : "#c05621") << "'/>\n";
      }
    } else {
      out << "<polyline fill='none' stroke='#2b6cb0' stroke-width='2' points='";
      for (int i = 0; i < n; ++i) out << num(x_of(i)) << ',' << num(p.map_y((*specs[s].data)[i])) << ' ';
      out << "'/>\n";
    }
    // Event marker at offset zero.
    out << "<line x1='" << num(x_of(zero_pos)) << "' y1='" << num(p.y0) << "' x2='"
        << num(x_of(zero_pos)) << "' y2='" << num(p.y0 + p.height)
        << "' stroke='#c53030' stroke-width='1.5'/>\n";
    for (int i = 0; i < n; i += 5)
      out << "<text x='" << num(x_of(i)) << "' y='" << num(p.y0 + p.height + 14)
          << "' font-size='10' text-anchor='middle'>" << result.tau_offsets[i] << "</text>\n";
  }
  out << "</svg>\n";
}

void write_price_alert_chart(std::ostream& out, const MarketSeries& market,
                             const std::vector<Date>& alert_days) {
  const int width = 900, price_h = 240, volume_h = 140, margin = 40, gap = 30;
  const int height = margin * 2 + price_h + volume_h + gap;
  const int n = static_cast<int>(market.dates.size());
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "' font-family='sans-serif'>\n";
  out << "<text x='" << margin << "' y='20' font-size='14'>" << market.ticker
      << " close price and volume with confirmed alert days</text>\n";

  double plot_w = width - 2.0 * margin;
  auto x_of = [&](int i) { return margin + plot_w * (i + 0.5) / n; };

  Panel price{static_cast<double>(margin), static_cast<double>(margin), plot_w,
              static_cast<double>(price_h), 0, 0};
  std::tie(price.lo, price.hi) = padded_range(market.close, market.close.minCoeff(),
                                              market.close.maxCoeff());
  panel_frame(out, price, "close");
  out << "<polyline fill='none' stroke='#2b6cb0' stroke-width='1.5' points='";
  for (int i = 0; i < n; ++i) out << num(x_of(i)) << ',' << num(price.map_y(market.close[i])) << ' ';
  out << "'/>\n";

  Panel vol{static_cast<double>(margin), static_cast<double>(margin + price_h + gap), plot_w,
            static_cast<double>(volume_h), 0, 0};
  vol.lo = 0.0;
  vol.hi = market.volume.maxCoeff() * 1.05 + 1e-9;
  panel_frame(out, vol, "volume");
  for (int i = 0; i < n; ++i) {
    double y = vol.map_y(market.volume[i]);
    out << "<rect x='" << num(x_of(i) - plot_w / n * 0.4) << "' y='" << num(y) << "' width='"
        << num(plot_w / n * 0.8) << "' height='" << num(vol.y0 + vol.height - y)
        << "' fill='#718096'/>\n";
  }

  for (Date d : alert_days) {
    int i = market.index_of(d);
    if (i < 0) continue;
    for (const Panel* p : {&price, &vol})
      out << "<line x1='" << num(x_of(i)) << "' y1='" << num(p->y0) << "' x2='" << num(x_of(i))
          << "' y2='" << num(p->y0 + p->height) << "' stroke='#2c5282' stroke-width='1'/>\n";
  }
  // Date ticks.
  for (int i = 0; i < n; i += std::max(1, n / 8))
    out << "<text x='" << num(x_of(i)) << "' y='" << num(vol.y0 + vol.height + 14)
        << "' font-size='10' text-anchor='middle'>" << market.dates[i].to_string() << "</text>\n";
  out << "</svg>\n";
}

}  // namespace tickerwatch

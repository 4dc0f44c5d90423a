#include "tickerwatch/event_study.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>

#include "tickerwatch/common.hpp"

namespace tickerwatch {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Midranks (average ranks on ties), 1-based.
Eigen::VectorXd midranks(const Eigen::Ref<const Eigen::VectorXd>& values, bool ascending) {
  Eigen::Index n = values.size();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return ascending ? values[a] < values[b] : values[a] > values[b];
  });
  Eigen::VectorXd ranks(n);
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Eigen::Index t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

int TradingCalendar::index_of(Date d) const {
  auto it = std::lower_bound(days.begin(), days.end(), d);
  if (it == days.end() || *it != d) return -1;
  return static_cast<int>(it - days.begin());
}

int TradingCalendar::next_on_or_after(Date d) const {
  auto it = std::lower_bound(days.begin(), days.end(), d);
  if (it == days.end()) return -1;
  return static_cast<int>(it - days.begin());
}

EventSelection select_events(const std::vector<AlertState>& alerts,
                             const TradingCalendar& calendar, const EventStudyConfig& config) {
  EventSelection selection;
  std::set<Date> seen_alert_dates;
  std::set<int> seen_taus;
  int last_accepted = std::numeric_limits<int>::min() / 2;
  const int lead = config.estimation_len + config.pre_days;  // trading days needed before tau

  for (const AlertState& alert : alerts) {
    if (!alert.stage2_on) continue;
    if (!seen_alert_dates.insert(alert.day).second) continue;  // duplicate entry

    int tau = calendar.next_on_or_after(alert.day);
    if (tau < 0) {
      selection.dropped.push_back({alert.day, "beyond the end of the trading calendar"});
      continue;
    }
    if (!seen_taus.insert(tau).second) {
      selection.dropped.push_back({alert.day, "maps to an already-considered trading day"});
      continue;
    }
    if (tau - lead < 1) {
      selection.dropped.push_back({alert.day, "too close to the series start to fit windows"});
      continue;
    }
    if (tau + config.post_days > calendar.size() - 1) {
      selection.dropped.push_back({alert.day, "too close to the series end to fit windows"});
      continue;
    }
    if (tau - last_accepted < config.min_spacing) {
      selection.dropped.push_back({alert.day, "within " + std::to_string(config.min_spacing) +
                                                  " trading days of the previous event"});
      continue;
    }
    EventSpec event;
    event.ticker = alert.ticker;
    event.alert_date = alert.day;
    event.event_date = calendar.days[tau];
    event.tau = tau;
    selection.events.push_back(std::move(event));
    last_accepted = tau;
  }
  return selection;
}

MarketModelFit fit_market_model(const Eigen::Ref<const Eigen::VectorXd>& stock_returns,
                                const Eigen::Ref<const Eigen::VectorXd>& market_returns) {
  Eigen::Index n = stock_returns.size();
  if (n != market_returns.size() || n < 3)
    throw AnalysisError("market model needs equally sized windows of at least 3 returns");
  double mkt_mean = market_returns.mean();
  Eigen::VectorXd centered = market_returns.array() - mkt_mean;
  double mkt_var = centered.squaredNorm();
  if (mkt_var == 0.0)
    throw AnalysisError("market returns are constant over the estimation window (singular fit)");

  Eigen::MatrixXd design(n, 2);
  design.col(0).setOnes();
  design.col(1) = market_returns;
  Eigen::Vector2d coef = design.householderQr().solve(stock_returns);

  MarketModelFit fit;
  fit.alpha = coef[0];
  fit.beta = coef[1];
  Eigen::VectorXd resid = stock_returns - design * coef;
  fit.resid_var = resid.squaredNorm() / static_cast<double>(n - 2);
  return fit;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> abnormal_returns(
    const MarketModelFit& fit, const Eigen::Ref<const Eigen::VectorXd>& stock_returns,
    const Eigen::Ref<const Eigen::VectorXd>& market_returns) {
  Eigen::VectorXd ar =
      stock_returns.array() - fit.alpha - fit.beta * market_returns.array();
  Eigen::VectorXd car(ar.size());
  double running = 0.0;
  for (Eigen::Index i = 0; i < ar.size(); ++i) {
    running += ar[i];
    car[i] = running;
  }
  return {std::move(ar), std::move(car)};
}

Eigen::VectorXd abnormal_volume(const Eigen::Ref<const Eigen::VectorXd>& event_volumes,
                                const Eigen::Ref<const Eigen::VectorXd>& estimation_volumes) {
  if (estimation_volumes.size() == 0)
    throw AnalysisError("abnormal volume needs a non-empty estimation window");
  double mean = estimation_volumes.mean();
  if (mean <= 0.0) throw AnalysisError("estimation-window mean volume is zero");
  return event_volumes / mean;
}

CorradoStats corrado_statistics(const Eigen::Ref<const Eigen::VectorXd>& sample,
                                bool ascending) {
  Eigen::Index m = sample.size();
  if (m < 2) throw AnalysisError("rank test needs at least 2 observations");
  CorradoStats stats;
  Eigen::VectorXd ranks = midranks(sample, ascending);
  stats.k = ranks / (1.0 + static_cast<double>(m));
  stats.s_k = std::sqrt((stats.k.array() - 0.5).square().sum() / static_cast<double>(m));
  return stats;
}

std::pair<double, double> corrado_rank_test(const Eigen::Ref<const Eigen::VectorXd>& sample,
                                            int index, bool ascending) {
  CorradoStats stats = corrado_statistics(sample, ascending);
  double k = stats.k[index];
  double t = stats.s_k > 0.0 ? (k - 0.5) / stats.s_k : 0.0;
  return {k, t};
}

std::string rank_significance_stars(double t) {
  double a = std::abs(t);
  if (a > 2.5758293035489004) return "***";
  if (a > 1.9599639845400545) return "**";
  if (a > 1.6448536269514722) return "*";
  return "";
}

double EventStudyResult::car_peak_after() const {
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < tau_offsets.size(); ++i)
    if (tau_offsets[i] >= 1) peak = std::max(peak, car[static_cast<Eigen::Index>(i)]);
  return peak;
}

EventStudyResult run_event_study(const MarketSeries& market, const EventSpec& event,
                                 const EventStudyConfig& config) {
  const int tau = event.tau;
  const int est_first = tau - config.estimation_len - config.pre_days;  // first estimation day
  const int win_first = tau - config.pre_days;
  const int win_last = tau + config.post_days;
  if (est_first < 1 || win_last > static_cast<int>(market.dates.size()) - 1)
    throw AnalysisError("event on " + event.event_date.to_string() +
                        " does not fit the estimation and event windows");

  Eigen::VectorXd returns = daily_returns(market);  // returns[i-1] belongs to dates[i]
  auto stock_at = [&](int i) { return returns[i - 1]; };
  auto market_at = [&](int i) {
    double r = market.market_return[i];
    if (std::isnan(r))
      throw InputError("missing index return on " + market.dates[i].to_string());
    return r;
  };

  Eigen::VectorXd est_stock(config.estimation_len), est_market(config.estimation_len);
  for (int i = 0; i < config.estimation_len; ++i) {
    est_stock[i] = stock_at(est_first + i);
    est_market[i] = market_at(est_first + i);
  }
  const int window_len = config.event_window_len();
  Eigen::VectorXd win_stock(window_len), win_market(window_len), win_volume(window_len);
  for (int i = 0; i < window_len; ++i) {
    win_stock[i] = stock_at(win_first + i);
    win_market[i] = market_at(win_first + i);
    win_volume[i] = market.volume[win_first + i];
  }
  Eigen::VectorXd est_volume(config.estimation_len);
  for (int i = 0; i < config.estimation_len; ++i) est_volume[i] = market.volume[est_first + i];

  EventStudyResult result;
  result.event = event;
  result.fit = fit_market_model(est_stock, est_market);
  auto [ar, car] = abnormal_returns(result.fit, win_stock, win_market);
  result.ar = std::move(ar);
  result.car = std::move(car);
  result.avol = abnormal_volume(win_volume, est_volume);
  for (int i = 0; i < window_len; ++i) result.tau_offsets.push_back(i - config.pre_days);

  // Rank sample: estimation-window abnormal returns followed by the event
  // window, so significance is judged against the event's own history.
  auto [est_ar, est_car] = abnormal_returns(result.fit, est_stock, est_market);
  (void)est_car;
  Eigen::VectorXd sample(config.estimation_len + window_len);
  sample << est_ar, result.ar;
  std::vector<int> sample_index(window_len);
  for (int i = 0; i < window_len; ++i) sample_index[i] = config.estimation_len + i;
  if (config.rank_full_sample) {
    Eigen::VectorXd all = rolling_market_model_ar(market, config.estimation_len);
    std::vector<double> usable;
    std::vector<int> usable_pos(all.size(), -1);
    for (Eigen::Index i = 0; i < all.size(); ++i) {
      if (std::isnan(all[i])) continue;
      usable_pos[i] = static_cast<int>(usable.size());
      usable.push_back(all[i]);
    }
    sample = Eigen::Map<Eigen::VectorXd>(usable.data(), static_cast<Eigen::Index>(usable.size()));
    for (int i = 0; i < window_len; ++i) sample_index[i] = usable_pos[win_first + i];
  }
  CorradoStats stats = corrado_statistics(sample, config.rank_ascending);

  result.k.resize(window_len);
  result.t_rank.resize(window_len);
  for (int i = 0; i < window_len; ++i) {
    result.k[i] = stats.k[sample_index[i]];
    result.t_rank[i] = stats.s_k > 0.0 ? (result.k[i] - 0.5) / stats.s_k : 0.0;
    result.stars.push_back(rank_significance_stars(result.t_rank[i]));
  }
  return result;
}

void write_event_study_csv(std::ostream& out, const EventStudyResult& result) {
  out << "tau,AR,CAR,AVol,K,t_rank,stars\n";
  for (std::size_t i = 0; i < result.tau_offsets.size(); ++i) {
    Eigen::Index j = static_cast<Eigen::Index>(i);
    out << result.tau_offsets[i] << ',' << fmt_double(result.ar[j]) << ','
        << fmt_double(result.car[j]) << ',' << fmt_double(result.avol[j]) << ','
        << fmt_double(result.k[j]) << ',' << fmt_double(result.t_rank[j]) << ','
        << result.stars[i] << '\n';
  }
}

Eigen::VectorXd rolling_market_model_ar(const MarketSeries& market, int window) {
  Eigen::Index n = static_cast<Eigen::Index>(market.dates.size());
  Eigen::VectorXd out = Eigen::VectorXd::Constant(n, kNaN);
  if (n < window + 2) return out;
  Eigen::VectorXd returns = daily_returns(market);
  for (Eigen::Index i = window + 1; i < n; ++i) {
    Eigen::VectorXd est_stock(window), est_market(window);
    bool ok = true;
    for (int j = 0; j < window; ++j) {
      Eigen::Index day = i - window + j;  // trailing window [i-window, i-1]
      est_stock[j] = returns[day - 1];
      est_market[j] = market.market_return[day];
      if (std::isnan(est_market[j])) ok = false;
    }
    double today_market = market.market_return[i];
    if (!ok || std::isnan(today_market)) continue;
    Eigen::VectorXd centered = est_market.array() - est_market.mean();
    if (centered.squaredNorm() == 0.0) continue;
    MarketModelFit fit = fit_market_model(est_stock, est_market);
    out[i] = returns[i - 1] - fit.alpha - fit.beta * today_market;
  }
  return out;
}

Eigen::VectorXd rolling_abnormal_volume(const MarketSeries& market, int window) {
  Eigen::Index n = static_cast<Eigen::Index>(market.dates.size());
  Eigen::VectorXd out = Eigen::VectorXd::Constant(n, kNaN);
  for (Eigen::Index i = window; i < n; ++i) {
    double mean = market.volume.segment(i - window, window).mean();
    if (mean > 0.0) out[i] = market.volume[i] / mean;
  }
  return out;
}

Eigen::VectorXd full_sample_ar(const MarketSeries& market) {
  Eigen::Index n = static_cast<Eigen::Index>(market.dates.size());
  Eigen::VectorXd out = Eigen::VectorXd::Constant(n, kNaN);
  Eigen::VectorXd returns = daily_returns(market);
  std::vector<Eigen::Index> usable;
  for (Eigen::Index i = 1; i < n; ++i)
    if (!std::isnan(market.market_return[i])) usable.push_back(i);
  if (usable.size() < 3) return out;
  Eigen::VectorXd stock(usable.size()), mkt(usable.size());
  for (std::size_t j = 0; j < usable.size(); ++j) {
    stock[static_cast<Eigen::Index>(j)] = returns[usable[j] - 1];
    mkt[static_cast<Eigen::Index>(j)] = market.market_return[usable[j]];
  }
  MarketModelFit fit = fit_market_model(stock, mkt);
  for (std::size_t j = 0; j < usable.size(); ++j)
    out[usable[j]] = stock[static_cast<Eigen::Index>(j)] -
                     fit.alpha - fit.beta * mkt[static_cast<Eigen::Index>(j)];
  return out;
}

}  // namespace tickerwatch

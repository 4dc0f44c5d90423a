#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "tickerwatch/alert.hpp"
#include "tickerwatch/dates.hpp"
#include "tickerwatch/ingest.hpp"

namespace tickerwatch {

struct TradingCalendar {
  std::vector<Date> days;  // strictly increasing

  int size() const { return static_cast<int>(days.size()); }
  int index_of(Date d) const;          // -1 when absent
  int next_on_or_after(Date d) const;  // -1 when past the end
};

struct EventStudyConfig {
  int estimation_len = 10;  // trading days fitted by the market model
  int pre_days = 10;        // event window [-pre, +post]
  int post_days = 10;
  int min_spacing = 10;          // trading days between accepted events
  bool rank_ascending = true;    // rank direction for the rank statistic
  bool rank_full_sample = false; // rank within the full sample instead of per event

  int event_window_len() const { return pre_days + post_days + 1; }
};

/// One retained event: the confirmed alert mapped onto the trading calendar.
struct EventSpec {
  std::string ticker;
  Date alert_date{};
  Date event_date{};
  int tau = -1;  // calendar index of event_date
};

struct DroppedEvent {
  Date alert_date{};
  std::string reason;
};

struct EventSelection {
  std::vector<EventSpec> events;
  std::vector<DroppedEvent> dropped;
};

/// Maps confirmed (stage-2) alert days to trading days, shifting non-trading
/// dates to the next trading day, dropping events whose windows do not fit
/// and events closer than min_spacing trading days after an accepted one.
/// Duplicate alert dates collapse.
EventSelection select_events(const std::vector<AlertState>& alerts,
                             const TradingCalendar& calendar, const EventStudyConfig& config);

/// Single-index market model fitted by OLS over the estimation window.
struct MarketModelFit {
  double alpha = 0.0;
  double beta = 0.0;
  double resid_var = 0.0;  // residual sum of squares / (L1 - 2)
};

MarketModelFit fit_market_model(const Eigen::Ref<const Eigen::VectorXd>& stock_returns,
                                const Eigen::Ref<const Eigen::VectorXd>& market_returns);

/// Abnormal and cumulative abnormal returns over a window.
std::pair<Eigen::VectorXd, Eigen::VectorXd> abnormal_returns(
    const MarketModelFit& fit, const Eigen::Ref<const Eigen::VectorXd>& stock_returns,
    const Eigen::Ref<const Eigen::VectorXd>& market_returns);

/// Event-window volume divided by the estimation-window mean volume.
Eigen::VectorXd abnormal_volume(const Eigen::Ref<const Eigen::VectorXd>& event_volumes,
                                const Eigen::Ref<const Eigen::VectorXd>& estimation_volumes);

/// Rank statistics for the non-parametric significance test: each sample
/// observation is mapped to K = rank / (1 + M) with midranks on ties, and
/// s_k is the sample deviation of K around its 1/2 expectation.
struct CorradoStats {
  Eigen::VectorXd k;
  double s_k = 0.0;
};

CorradoStats corrado_statistics(const Eigen::Ref<const Eigen::VectorXd>& sample,
                                bool ascending = true);

/// (K, t_rank) for one observation of the sample; t_rank is 0 when every
/// sample value ties.
std::pair<double, double> corrado_rank_test(const Eigen::Ref<const Eigen::VectorXd>& sample,
                                            int index, bool ascending = true);

/// Two-sided stars against the normal reference: * 10%, ** 5%, *** 1%.
std::string rank_significance_stars(double t);

struct EventStudyResult {
  EventSpec event;
  MarketModelFit fit;
  std::vector<int> tau_offsets;  // -pre .. +post
  Eigen::VectorXd ar;
  Eigen::VectorXd car;
  Eigen::VectorXd avol;
  Eigen::VectorXd k;
  Eigen::VectorXd t_rank;
  std::vector<std::string> stars;

  double car_peak_after() const;  // max CAR over the days after the event
};

/// Full event study for one retained event. Throws when a stock or index
/// return inside the windows is missing, naming the date.
EventStudyResult run_event_study(const MarketSeries& market, const EventSpec& event,
                                 const EventStudyConfig& config);

/// Report rows mirroring the per-event tables: tau,AR,CAR,AVol,K,t_rank,stars.
void write_event_study_csv(std::ostream& out, const EventStudyResult& result);

/// Daily abnormal-return series over the whole sample from a market model
/// re-fitted on a trailing window; the first window+1 entries are NaN.
Eigen::VectorXd rolling_market_model_ar(const MarketSeries& market, int window = 10);

/// Daily abnormal-volume series: volume over the trailing-window mean volume.
Eigen::VectorXd rolling_abnormal_volume(const MarketSeries& market, int window = 10);

/// Alternative dependent construction: one market-model fit on the full
/// sample of returns.
Eigen::VectorXd full_sample_ar(const MarketSeries& market);

}  // namespace tickerwatch

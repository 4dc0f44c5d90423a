#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tickerwatch/dates.hpp"
#include "tickerwatch/ingest.hpp"

namespace tickerwatch {

/// Named daily series on one shared trading-day index; NaN marks missing.
struct SeriesStore {
  std::vector<Date> dates;
  std::map<std::string, Eigen::VectorXd> columns;

  void add(const std::string& name, Eigen::VectorXd values);
  void add_aligned(const std::string& name, const std::vector<Date>& their_dates,
                   const Eigen::VectorXd& values);
  const Eigen::VectorXd& at(const std::string& name) const;
  bool has(const std::string& name) const { return columns.count(name) != 0; }
};

/// diff is applied before lag, so `diff.lag(2)` is the once-differenced
/// series shifted back two days.
struct Transform {
  bool first_difference = false;
  int lag = 0;
};

struct Regressor {
  std::string series;
  Transform transform{};
  std::optional<std::string> interact_with;  // level-by-level product

  std::string display_name() const;
};

struct RegressionSpec {
  std::string name;
  std::string dependent;
  std::vector<Regressor> regressors;
  std::optional<int> hac_lags;  // nullopt = automatic plug-in rule
};

/// Parses the declarative key-value spec document:
///   name = ar_contemporaneous
///   dependent = AR
///   regressor = Vol : diff
///   regressor = AR : lag(1)
///   regressor = interaction(ABN, O_RH)
///   hac_lags = auto
RegressionSpec parse_regression_spec(std::istream& in, const std::string& source_name);
RegressionSpec parse_regression_spec_text(const std::string& text, const std::string& name);
RegressionSpec parse_regression_spec_file(const std::string& path);

struct DesignMatrix {
  Eigen::MatrixXd x;  // first column is the intercept
  Eigen::VectorXd y;
  std::vector<std::string> names;  // per x column, "const" first
  std::vector<Date> rows;          // kept dates
  long rows_dropped = 0;
};

/// Applies transforms, aligns everything on the store index and drops every
/// row with a missing value. Duplicate post-transform names are an error.
DesignMatrix build_design(const SeriesStore& store, const RegressionSpec& spec);

struct RegressionResult {
  std::string spec_name;
  std::vector<std::string> names;
  Eigen::VectorXd coef;
  Eigen::VectorXd se;
  Eigen::VectorXd tstat;
  Eigen::VectorXd pval;
  std::vector<std::string> stars;
  Eigen::MatrixXd vcov;
  Eigen::VectorXd resid;
  long n = 0;
  int k = 0;
  int hac_lags_used = 0;
  double r2 = 0.0;
  double adj_r2 = 0.0;
  double aic = 0.0;
  std::vector<std::string> warnings;
};

/// Plug-in truncation floor(4 (n/100)^(2/9)).
int newey_west_auto_lags(long n);

/// OLS with a Bartlett-kernel long-run covariance; lag 0 reduces exactly to
/// the heteroskedasticity-only sandwich. Throws on rank deficiency, naming
/// the dependent columns.
RegressionResult ols_hac(const DesignMatrix& design, std::optional<int> hac_lags);

/// Coefficient stars per the reporting convention: * 5%, ** 1%, *** 0.1%.
std::string coefficient_stars(double pval);

/// build_design + degenerate-column cleanup (all-zero or constant regressors
/// are dropped with a warning) + ols_hac.
RegressionResult run_regression(const SeriesStore& store, const RegressionSpec& spec);

/// The three standing specifications: contemporaneous abnormal returns,
/// abnormal volume, and the two-lag predictive variant.
std::vector<RegressionSpec> standing_regression_specs();

/// Assembles the per-ticker store consumed by the standing specs: AR and AV
/// from the trailing market-model machinery, raw market columns, the daily
/// branching number and the exogenous series.
SeriesStore build_regression_store(const MarketSeries& market, const ExogenousSeries& exog,
                                   const std::map<Date, double>& abn_by_day,
                                   int rolling_window = 10, bool full_sample_fit = false);

std::vector<RegressionResult> run_paper_regressions(const SeriesStore& store,
                                                    std::optional<int> hac_lags);

/// Report rows: regressor,coef,tstat,pval,stars plus an n/adj_r2/aic footer.
void write_regression_csv(std::ostream& out, const RegressionResult& result);

}  // namespace tickerwatch

#include "tickerwatch/regression.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include "tickerwatch/common.hpp"
#include "tickerwatch/event_study.hpp"

namespace tickerwatch {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double normal_two_sided_pvalue(double t) { return std::erfc(std::abs(t) / std::sqrt(2.0)); }

Eigen::VectorXd apply_transform(const Eigen::VectorXd& series, const Transform& t) {
  Eigen::Index n = series.size();
  Eigen::VectorXd out = series;
  if (t.first_difference) {
    Eigen::VectorXd diff = Eigen::VectorXd::Constant(n, kNaN);
    for (Eigen::Index i = 1; i < n; ++i) diff[i] = out[i] - out[i - 1];
    out = std::move(diff);
  }
  if (t.lag > 0) {
    Eigen::VectorXd lagged = Eigen::VectorXd::Constant(n, kNaN);
    for (Eigen::Index i = t.lag; i < n; ++i) lagged[i] = out[i - t.lag];
    out = std::move(lagged);
  }
  return out;
}

Transform parse_transform(std::string_view text, const std::string& source) {
  Transform t;
  for (const auto& part : split(text, '.')) {
    auto p = trim(part);
    if (p == "level" || p.empty()) continue;
    if (p == "diff") {
      t.first_difference = true;
    } else if (starts_with(p, "lag(") && p.back() == ')') {
      t.lag = static_cast<int>(parse_long(p.substr(4, p.size() - 5), source + " lag"));
      if (t.lag < 1) throw ConfigError(source + ": lag must be >= 1");
    } else {
      throw ConfigError(source + ": unknown transform '" + std::string(p) + "'");
    }
  }
  return t;
}

}  // namespace

void SeriesStore::add(const std::string& name, Eigen::VectorXd values) {
  if (static_cast<std::size_t>(values.size()) != dates.size())
    throw InputError("series '" + name + "' has " + std::to_string(values.size()) +
                     " values for " + std::to_string(dates.size()) + " dates");
  columns[name] = std::move(values);
}

void SeriesStore::add_aligned(const std::string& name, const std::vector<Date>& their_dates,
                              const Eigen::VectorXd& values) {
  std::map<Date, double> by_date;
  for (std::size_t i = 0; i < their_dates.size(); ++i)
    by_date[their_dates[i]] = values[static_cast<Eigen::Index>(i)];
  Eigen::VectorXd aligned = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(dates.size()), kNaN);
  for (std::size_t i = 0; i < dates.size(); ++i) {
    auto it = by_date.find(dates[i]);
    if (it != by_date.end()) aligned[static_cast<Eigen::Index>(i)] = it->second;
  }
  columns[name] = std::move(aligned);
}

const Eigen::VectorXd& SeriesStore::at(const std::string& name) const {
  auto it = columns.find(name);
  if (it == columns.end()) throw InputError("missing series '" + name + "'");
  return it->second;
}

std::string Regressor::display_name() const {
  if (interact_with) return series + "*" + *interact_with;
  std::string name = transform.first_difference ? "d" + series : series;
  if (transform.lag > 0) name += "_l" + std::to_string(transform.lag);
  return name;
}

RegressionSpec parse_regression_spec(std::istream& in, const std::string& source_name) {
  RegressionSpec spec;
  spec.name = source_name;
  std::string line;
  while (std::getline(in, line)) {
    auto text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    auto eq = text.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(source_name + ": expected 'key = value', got '" + std::string(text) + "'");
    std::string key(trim(text.substr(0, eq)));
    std::string value(trim(text.substr(eq + 1)));
    if (key == "name") {
      spec.name = value;
    } else if (key == "dependent") {
      spec.dependent = value;
    } else if (key == "hac_lags") {
      if (value == "auto")
        spec.hac_lags.reset();
      else
        spec.hac_lags = static_cast<int>(parse_long(value, source_name + " hac_lags"));
    } else if (key == "regressor") {
      Regressor reg;
      if (starts_with(value, "interaction(") && value.back() == ')') {
        auto args = split(value.substr(12, value.size() - 13), ',');
        if (args.size() != 2)
          throw ConfigError(source_name + ": interaction needs two series names");
        reg.series = std::string(trim(args[0]));
        reg.interact_with = std::string(trim(args[1]));
      } else {
        auto colon = value.find(':');
        if (colon == std::string::npos) {
          reg.series = std::string(trim(value));
        } else {
          reg.series = std::string(trim(value.substr(0, colon)));
          reg.transform = parse_transform(trim(value.substr(colon + 1)), source_name);
        }
      }
      spec.regressors.push_back(std::move(reg));
    } else {
      throw ConfigError(source_name + ": unknown key '" + key + "'");
    }
  }
  if (spec.dependent.empty()) throw ConfigError(source_name + ": missing 'dependent'");
  if (spec.regressors.empty()) throw ConfigError(source_name + ": no regressors");
  std::set<std::string> seen;
  for (const auto& r : spec.regressors)
    if (!seen.insert(r.display_name()).second)
      throw ConfigError(source_name + ": duplicate regressor '" + r.display_name() + "'");
  return spec;
}

RegressionSpec parse_regression_spec_text(const std::string& text, const std::string& name) {
  std::istringstream in(text);
  return parse_regression_spec(in, name);
}

RegressionSpec parse_regression_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open regression spec '" + path + "'");
  return parse_regression_spec(in, path);
}

DesignMatrix build_design(const SeriesStore& store, const RegressionSpec& spec) {
  Eigen::Index n = static_cast<Eigen::Index>(store.dates.size());
  const Eigen::VectorXd& y_all = store.at(spec.dependent);

  std::vector<Eigen::VectorXd> cols;
  std::vector<std::string> names{"const"};
  for (const auto& reg : spec.regressors) {
    Eigen::VectorXd col;
    if (reg.interact_with) {
      col = store.at(reg.series).cwiseProduct(store.at(*reg.interact_with));
    } else {
      col = apply_transform(store.at(reg.series), reg.transform);
    }
    cols.push_back(std::move(col));
    names.push_back(reg.display_name());
  }

  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < n; ++i) {
    bool ok = !std::isnan(y_all[i]);
    for (const auto& col : cols) ok = ok && !std::isnan(col[i]);
    if (ok) keep.push_back(i);
  }

  DesignMatrix design;
  design.names = std::move(names);
  design.rows_dropped = static_cast<long>(n - static_cast<Eigen::Index>(keep.size()));
  design.x.resize(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(cols.size()) + 1);
  design.y.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t r = 0; r < keep.size(); ++r) {
    Eigen::Index i = keep[r];
    design.rows.push_back(store.dates[static_cast<std::size_t>(i)]);
    design.x(static_cast<Eigen::Index>(r), 0) = 1.0;
    for (std::size_t c = 0; c < cols.size(); ++c)
      design.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c) + 1) = cols[c][i];
    design.y[static_cast<Eigen::Index>(r)] = y_all[i];
  }
  return design;
}

int newey_west_auto_lags(long n) {
  return static_cast<int>(std::floor(4.0 * std::pow(static_cast<double>(n) / 100.0, 2.0 / 9.0)));
}

std::string coefficient_stars(double pval) {
  if (pval < 0.001) return "***";
  if (pval < 0.01) return "**";
  if (pval < 0.05) return "*";
  return "";
}

RegressionResult ols_hac(const DesignMatrix& design, std::optional<int> hac_lags) {
  const Eigen::MatrixXd& x = design.x;
  const Eigen::VectorXd& y = design.y;
  const Eigen::Index n = x.rows(), k = x.cols();
  if (n <= k) throw AnalysisError("not enough observations: n=" + std::to_string(n) +
                                  ", k=" + std::to_string(k));

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < k) {
    auto perm = qr.colsPermutation().indices();
    std::vector<std::string> dependent;
    for (Eigen::Index i = qr.rank(); i < k; ++i) dependent.push_back(design.names[perm[i]]);
    throw AnalysisError("rank-deficient design; dependent columns: " + join(dependent, ", "));
  }

  RegressionResult result;
  result.names = design.names;
  result.coef = qr.solve(y);
  result.resid = y - x * result.coef;
  result.n = n;
  result.k = static_cast<int>(k);
  result.hac_lags_used = hac_lags ? *hac_lags : newey_west_auto_lags(n);
  if (result.hac_lags_used < 0) throw ConfigError("hac_lags must be >= 0");

  Eigen::MatrixXd xtx_inv = (x.transpose() * x).inverse();
  // Long-run covariance of the score with Bartlett weights and the usual
  // n/(n-k) small-sample scaling; zero lags degrade exactly to the
  // heteroskedasticity-only sandwich.
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(k, k);
  Eigen::MatrixXd xu(n, k);
  for (Eigen::Index t = 0; t < n; ++t) xu.row(t) = x.row(t) * result.resid[t];
  meat = xu.transpose() * xu;  // lag 0
  for (int lag = 1; lag <= result.hac_lags_used && lag < n; ++lag) {
    double w = 1.0 - static_cast<double>(lag) / (result.hac_lags_used + 1.0);
    Eigen::MatrixXd gamma =
        xu.bottomRows(n - lag).transpose() * xu.topRows(n - lag);
    meat += w * (gamma + gamma.transpose());
  }
  meat *= static_cast<double>(n) / static_cast<double>(n - k);
  result.vcov = xtx_inv * meat * xtx_inv;

  result.se.resize(k);
  result.tstat.resize(k);
  result.pval.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    result.se[i] = std::sqrt(std::max(0.0, result.vcov(i, i)));
    result.tstat[i] = result.se[i] > 0.0 ? result.coef[i] / result.se[i] : 0.0;
    result.pval[i] = normal_two_sided_pvalue(result.tstat[i]);
    result.stars.push_back(coefficient_stars(result.pval[i]));
  }

  double rss = result.resid.squaredNorm();
  double tss = (y.array() - y.mean()).square().sum();
  result.r2 = tss > 0.0 ? 1.0 - rss / tss : 1.0;
  result.adj_r2 =
      1.0 - (1.0 - result.r2) * static_cast<double>(n - 1) / static_cast<double>(n - k);
  // Gaussian log-likelihood convention with k mean parameters.
  double sigma2 = rss / static_cast<double>(n);
  result.aic = sigma2 > 0.0
                   ? static_cast<double>(n) * (std::log(2.0 * 3.14159265358979323846 * sigma2) + 1.0) +
                         2.0 * static_cast<double>(k)
                   : -std::numeric_limits<double>::infinity();
  return result;
}

RegressionResult run_regression(const SeriesStore& store, const RegressionSpec& spec) {
  DesignMatrix design = build_design(store, spec);
  std::vector<std::string> warnings;

  // Degenerate columns (a dummy that never fires, or its interaction) are
  // removed rather than failing the whole specification.
  std::vector<Eigen::Index> keep_cols{0};
  for (Eigen::Index c = 1; c < design.x.cols(); ++c) {
    double lo = design.x.col(c).minCoeff(), hi = design.x.col(c).maxCoeff();
    if (lo == hi) {
      warnings.push_back("regressor '" + design.names[c] + "' is constant (" + fmt_double(lo) +
                         "); dropped");
      continue;
    }
    keep_cols.push_back(c);
  }
  if (static_cast<Eigen::Index>(keep_cols.size()) != design.x.cols()) {
    DesignMatrix reduced;
    reduced.y = design.y;
    reduced.rows = design.rows;
    reduced.rows_dropped = design.rows_dropped;
    reduced.x.resize(design.x.rows(), static_cast<Eigen::Index>(keep_cols.size()));
    for (std::size_t i = 0; i < keep_cols.size(); ++i) {
      reduced.x.col(static_cast<Eigen::Index>(i)) = design.x.col(keep_cols[i]);
      reduced.names.push_back(design.names[keep_cols[i]]);
    }
    design = std::move(reduced);
  }

  RegressionResult result = ols_hac(design, spec.hac_lags);
  result.spec_name = spec.name;
  result.warnings = std::move(warnings);
  return result;
}

std::vector<RegressionSpec> standing_regression_specs() {
  static const char* kContemporaneousAr =
      "name = ar_contemporaneous\n"
      "dependent = AR\n"
      "regressor = Vol : diff\n"
      "regressor = P_open : diff\n"
      "regressor = AR : lag(1)\n"
      "regressor = Rep : level\n"
      "regressor = SubRank : level\n"
      "regressor = ABN : level\n"
      "regressor = O_RH : level\n"
      "regressor = interaction(ABN, O_RH)\n"
      "hac_lags = auto\n";
  static const char* kAbnormalVolume =
      "name = av_contemporaneous\n"
      "dependent = AV\n"
      "regressor = Vol : diff\n"
      "regressor = P_close : diff\n"
      "regressor = AV : lag(1)\n"
      "regressor = Sub : level\n"
      "regressor = O_RH : level\n"
      "regressor = interaction(Sub, O_RH)\n"
      "hac_lags = auto\n";
  static const char* kPredictiveAr =
      "name = ar_predictive\n"
      "dependent = AR\n"
      "regressor = Vol : diff.lag(1)\n"
      "regressor = Vol : diff.lag(2)\n"
      "regressor = P_open : diff.lag(1)\n"
      "regressor = P_open : diff.lag(2)\n"
      "regressor = rank : lag(1)\n"
      "regressor = rank : lag(2)\n"
      "regressor = Rep : level\n"
      "hac_lags = auto\n";
  return {parse_regression_spec_text(kContemporaneousAr, "ar_contemporaneous"),
          parse_regression_spec_text(kAbnormalVolume, "av_contemporaneous"),
          parse_regression_spec_text(kPredictiveAr, "ar_predictive")};
}

SeriesStore build_regression_store(const MarketSeries& market, const ExogenousSeries& exog,
                                   const std::map<Date, double>& abn_by_day, int rolling_window,
                                   bool full_sample_fit) {
  SeriesStore store;
  store.dates = market.dates;
  store.add("AR", full_sample_fit ? full_sample_ar(market)
                                  : rolling_market_model_ar(market, rolling_window));
  store.add("AV", rolling_abnormal_volume(market, rolling_window));
  store.add("Vol", market.volume);
  store.add("P_open", market.open);
  store.add("P_close", market.close);

  Eigen::VectorXd abn = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(store.dates.size()), kNaN);
  for (std::size_t i = 0; i < store.dates.size(); ++i) {
    auto it = abn_by_day.find(store.dates[i]);
    if (it != abn_by_day.end()) abn[static_cast<Eigen::Index>(i)] = it->second;
  }
  store.add("ABN", std::move(abn));

  store.add_aligned("Rep", exog.dates, exog.outage_reports);
  store.add_aligned("SubRank", exog.dates, exog.subscriber_rank);
  store.add_aligned("Sub", exog.dates, exog.subscribers);
  store.add_aligned("rank", exog.dates, exog.avg_user_rank);
  store.add_aligned("O_RH", exog.dates, exog.outage_flag);
  return store;
}

std::vector<RegressionResult> run_paper_regressions(const SeriesStore& store,
                                                    std::optional<int> hac_lags) {
  std::vector<RegressionResult> results;
  for (RegressionSpec spec : standing_regression_specs()) {
    if (hac_lags) spec.hac_lags = hac_lags;
    results.push_back(run_regression(store, spec));
  }
  return results;
}

void write_regression_csv(std::ostream& out, const RegressionResult& result) {
  out << "regressor,coef,tstat,pval,stars\n";
  for (std::size_t i = 0; i < result.names.size(); ++i) {
    Eigen::Index j = static_cast<Eigen::Index>(i);
    out << result.names[i] << ',' << fmt_double(result.coef[j]) << ','
        << fmt_double(result.tstat[j]) << ',' << fmt_double(result.pval[j]) << ','
        << result.stars[i] << '\n';
  }
  out << "n," << result.n << ",,,\n";
  out << "adj_r2," << fmt_double(result.adj_r2) << ",,,\n";
  out << "aic," << fmt_double(result.aic) << ",,,\n";
}

}  // namespace tickerwatch

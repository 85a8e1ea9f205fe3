#include "core/portfolio.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/common.hpp"
#include "core/log.hpp"

namespace amf::portfolio {

VolRanking trailing_vol(const data::ReturnsPanel& panel, const Date& date,
                        const std::vector<std::string>& stock_ids, int lookback) {
  int idx = panel.calendar().index_of(date);
  if (idx < 0) raise(ErrorKind::InvalidArgument, "trailing_vol: date not in calendar");
  if (idx + 1 < lookback) {
    raise(ErrorKind::InvalidArgument, "trailing_vol: fewer than " + std::to_string(lookback) +
                                          " weeks of history at " + date.to_string());
  }
  int first = idx - lookback + 1;
  int min_obs = static_cast<int>(std::ceil(0.8 * lookback - 1e-9));

  VolRanking out;
  out.date = date;
  for (const auto& id : stock_ids) {
    int col = panel.column_of(id);
    if (col < 0) raise(ErrorKind::Data, "trailing_vol: unknown asset " + id);
    std::vector<double> xs;
    xs.reserve(static_cast<size_t>(lookback));
    for (int w = first; w <= idx; ++w) {
      if (!panel.observed(w, col)) continue;
      xs.push_back(panel.ret(w, col) - panel.risk_free(w));
    }
    if (static_cast<int>(xs.size()) < min_obs) {
      log::warn("trailing_vol: " + id + " has " + std::to_string(xs.size()) + "/" +
                std::to_string(lookback) + " observations at " + date.to_string() +
                "; excluded");
      continue;
    }
    double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    double var = xs.size() > 1 ? ss / static_cast<double>(xs.size() - 1) : 0.0;
    out.stock_ids.push_back(id);
    out.vols.push_back(std::sqrt(var));
  }
  return out;
}

VolPortfolios form_portfolios(const VolRanking& ranking, double fraction) {
  size_t n = ranking.stock_ids.size();
  if (n < 8) {
    raise(ErrorKind::Data, "form_portfolios: need at least 8 ranked stocks, got " +
                               std::to_string(n) + " at " + ranking.date.to_string());
  }
  if (!(fraction > 0.0) || fraction > 0.5) {
    raise(ErrorKind::InvalidArgument, "form_portfolios: fraction must be in (0, 0.5]");
  }
  size_t quota = static_cast<size_t>(std::floor(fraction * static_cast<double>(n)));

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (ranking.vols[a] != ranking.vols[b]) return ranking.vols[a] < ranking.vols[b];
    return ranking.stock_ids[a] < ranking.stock_ids[b];
  });

  VolPortfolios out;
  out.date = ranking.date;
  for (size_t i = 0; i < quota; ++i) out.low_ids.insert(ranking.stock_ids[order[i]]);
  for (size_t i = 0; i < quota; ++i) {
    out.high_ids.insert(ranking.stock_ids[order[n - 1 - i]]);
  }
  return out;
}

double equal_weight_return(const data::ReturnsPanel& panel, int week,
                           const std::vector<std::string>& member_ids) {
  double sum = 0.0;
  int count = 0;
  for (const auto& id : member_ids) {
    int col = panel.column_of(id);
    if (col < 0) raise(ErrorKind::Data, "portfolio member unknown: " + id);
    if (!panel.observed(week, col)) {
      log::warn("portfolio member " + id + " missing at " +
                panel.calendar().at(week).to_string() + "; dropped from that week's mean");
      continue;
    }
    sum += panel.ret(week, col);
    ++count;
  }
  if (count == 0) {
    raise(ErrorKind::Data, "no observed portfolio constituents at " +
                               panel.calendar().at(week).to_string());
  }
  return sum / count;
}

PortfolioSeries portfolio_returns(const data::ReturnsPanel& panel, int first_week,
                                  int last_week,
                                  const std::vector<VolPortfolios>& memberships) {
  int t = last_week - first_week + 1;
  if (t < 1 || static_cast<int>(memberships.size()) != t) {
    raise(ErrorKind::InvalidArgument, "portfolio_returns: memberships must cover every week");
  }
  PortfolioSeries out;
  for (int w = 0; w < t; ++w) {
    const auto& m = memberships[static_cast<size_t>(w)];
    std::vector<std::string> low(m.low_ids.begin(), m.low_ids.end());
    std::vector<std::string> high(m.high_ids.begin(), m.high_ids.end());
    double r0 = panel.risk_free(first_week + w);
    out.dates.push_back(panel.calendar().at(first_week + w));
    out.low_excess.push_back(equal_weight_return(panel, first_week + w, low) - r0);
    out.high_excess.push_back(equal_weight_return(panel, first_week + w, high) - r0);
  }
  return out;
}

std::vector<double> cumulative_capital(const std::vector<double>& returns) {
  std::vector<double> cap;
  cap.reserve(returns.size());
  double value = 1.0;
  for (size_t i = 0; i < returns.size(); ++i) {
    if (std::isnan(returns[i])) {
      raise(ErrorKind::Data, "cumulative_capital: missing return at index " + std::to_string(i));
    }
    if (returns[i] <= -1.0) {
      raise(ErrorKind::Data, "cumulative_capital: return <= -1 wipes out capital at index " +
                                 std::to_string(i));
    }
    value *= 1.0 + returns[i];
    cap.push_back(value);
  }
  return cap;
}

}  // namespace amf::portfolio

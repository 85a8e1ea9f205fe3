#pragma once

#include <set>
#include <string>
#include <vector>

#include "core/panel.hpp"

namespace amf::portfolio {

struct VolRanking {
  Date date;
  std::vector<std::string> stock_ids;
  std::vector<double> vols;  // weekly sd of trailing excess returns
};

struct VolPortfolios {
  Date date;
  std::set<std::string> low_ids;
  std::set<std::string> high_ids;
};

struct PortfolioSeries {
  std::vector<Date> dates;
  std::vector<double> low_excess;
  std::vector<double> high_excess;
};

// Sample sd (n-1 denominator) of trailing `lookback` weekly excess returns
// ending at `date` inclusive. Stocks with < ceil(0.8*lookback) observations
// are dropped with a warning rather than an error.
VolRanking trailing_vol(const data::ReturnsPanel& panel, const Date& date,
                        const std::vector<std::string>& stock_ids, int lookback = 52);

// Bottom / top floor(fraction*n) by volatility; ties by ascending asset_id.
VolPortfolios form_portfolios(const VolRanking& ranking, double fraction = 0.25);

// Equal-weighted return of `member_ids` at one week; missing constituents
// drop out of that week's mean with a warning. Data error when no
// constituent is observed.
double equal_weight_return(const data::ReturnsPanel& panel, int week,
                           const std::vector<std::string>& member_ids);

// Weekly low/high excess series over [first_week, last_week]; memberships[w]
// gives the constituents for week first_week + w (formed from the prior
// week's ranking by the caller).
PortfolioSeries portfolio_returns(const data::ReturnsPanel& panel, int first_week,
                                  int last_week,
                                  const std::vector<VolPortfolios>& memberships);

// cap_t = cap_{t-1} * (1 + ret_t), cap_0 = 1 before the first entry.
// Returns one value per input; error if any return <= -1.
std::vector<double> cumulative_capital(const std::vector<double>& returns);

}  // namespace amf::portfolio

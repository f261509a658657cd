#pragma once

// Tick parsing, cleaning and previous-tick resampling into intraday
// log-return panels.

#include "fcaw/core.hpp"

#include <charconv>
#include <cstdio>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fcaw {

inline constexpr double kSecondsPerDay = 86400.0;

struct TickRecord {
  double timestamp = 0.0;  // seconds since midnight
  double price = 0.0;
};

struct TickSeries {
  std::string asset_id;
  std::string day_id;
  std::vector<TickRecord> ticks;
};

struct RawTickRow {
  std::string timestamp;
  std::string price;
};

struct ParsedTicks {
  TickSeries series;
  std::size_t failures = 0;
};

struct ReturnPanel {
  std::string day_id;
  int interval_seconds = 300;
  Matrix returns;  // M x d, row j is the return vector of interval j
};

struct SessionConfig {
  double open_seconds = 9.5 * 3600.0;
  double close_seconds = 16.0 * 3600.0;
  int trim_minutes = 30;
  int outlier_window_k = 50;
  int interval_seconds = 300;
  // Carry the first retained price back to the first grid point when an
  // asset has not traded yet at that instant.
  bool opening_backfill = true;

  double retained_open() const { return open_seconds + 60.0 * trim_minutes; }
  double retained_close() const { return close_seconds - 60.0 * trim_minutes; }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"')) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  std::string buf(s);
  char* end = nullptr;
  double v = std::strtod(buf.c_str(), &end);
  if (end != buf.c_str() + buf.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace detail

/// Accepts "HH:MM:SS[.fff]" or epoch seconds (reduced modulo one day).
inline std::optional<double> parse_timestamp(std::string_view text) {
  text = detail::trim(text);
  if (text.empty()) return std::nullopt;
  if (text.find(':') != std::string_view::npos) {
    int h = 0, m = 0;
    auto c1 = text.find(':');
    auto c2 = text.find(':', c1 + 1);
    if (c2 == std::string_view::npos) return std::nullopt;
    auto hs = text.substr(0, c1);
    auto ms = text.substr(c1 + 1, c2 - c1 - 1);
    if (std::from_chars(hs.data(), hs.data() + hs.size(), h).ec != std::errc{}) return std::nullopt;
    if (std::from_chars(ms.data(), ms.data() + ms.size(), m).ec != std::errc{}) return std::nullopt;
    auto sec = detail::parse_double(text.substr(c2 + 1));
    if (!sec || h < 0 || h > 23 || m < 0 || m > 59 || *sec < 0.0 || *sec >= 61.0) return std::nullopt;
    return 3600.0 * h + 60.0 * m + *sec;
  }
  auto v = detail::parse_double(text);
  if (!v || *v < 0.0) return std::nullopt;
  return *v >= kSecondsPerDay ? std::fmod(*v, kSecondsPerDay) : *v;
}

inline std::string format_timestamp(double seconds) {
  int whole = static_cast<int>(std::floor(seconds));
  double frac = seconds - whole;
  char buf[48];
  if (frac == 0.0) {
    std::snprintf(buf, sizeof buf, "%02d:%02d:%02d", whole / 3600, (whole / 60) % 60, whole % 60);
  } else {
    std::snprintf(buf, sizeof buf, "%02d:%02d:%09.6f", whole / 3600, (whole / 60) % 60,
                  (whole % 60) + frac);
  }
  return buf;
}

inline void sort_ticks(std::vector<TickRecord>& ticks) {
  std::stable_sort(ticks.begin(), ticks.end(),
                   [](const TickRecord& a, const TickRecord& b) { return a.timestamp < b.timestamp; });
}

inline ParsedTicks parse_ticks(const std::vector<RawTickRow>& rows, std::string day, std::string asset) {
  require(!rows.empty(), ErrorCode::kEmptyDay, "no tick rows for " + asset + " on " + day);
  ParsedTicks out;
  out.series.asset_id = std::move(asset);
  out.series.day_id = std::move(day);
  out.series.ticks.reserve(rows.size());
  for (const auto& row : rows) {
    auto ts = parse_timestamp(row.timestamp);
    auto px = detail::parse_double(row.price);
    if (!ts || !px) {
      ++out.failures;
      continue;
    }
    out.series.ticks.push_back({*ts, *px});
  }
  sort_ticks(out.series.ticks);
  return out;
}

namespace detail {

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Neighborhood of k observations around i, excluding i. Near either end the
// window is shifted so that it still holds k points where possible.
inline std::pair<std::size_t, std::size_t> neighborhood(std::size_t i, std::size_t n, std::size_t k) {
  if (n <= k + 1) return {0, n};
  std::size_t half = k / 2;
  std::size_t start = i > half ? i - half : 0;
  if (start + k + 1 > n) start = n - k - 1;
  return {start, start + k + 1};
}

inline std::vector<bool> flag_outliers(const std::vector<TickRecord>& ticks, std::size_t k) {
  const std::size_t n = ticks.size();
  std::vector<bool> flags(n, false);
  std::vector<double> nb;
  nb.reserve(k + 1);
  for (std::size_t i = 0; i < n; ++i) {
    auto [lo, hi] = neighborhood(i, n, k);
    nb.clear();
    for (std::size_t j = lo; j < hi; ++j) {
      if (j != i) nb.push_back(ticks[j].price);
    }
    if (nb.empty()) continue;
    const double p = ticks[i].price;
    auto [mn, mx] = std::minmax_element(nb.begin(), nb.end());
    if (*mn == *mx) {
      // zero dispersion: any deviation is an isolated spike
      flags[i] = p != *mn;
      continue;
    }
    const double shift = nb.front();
    double sum = 0.0;
    for (double v : nb) sum += v - shift;
    const double mean = sum / static_cast<double>(nb.size());
    double ss = 0.0;
    for (double v : nb) ss += (v - shift - mean) * (v - shift - mean);
    const double sd = nb.size() > 1 ? std::sqrt(ss / static_cast<double>(nb.size() - 1)) : 0.0;
    flags[i] = std::abs(p - shift - mean) > 3.0 * sd;
  }
  return flags;
}

}  // namespace detail

/// Session filter, open/close trim, zero-price removal, median of duplicate
/// timestamps, then neighborhood outlier removal repeated to a fixed point.
inline TickSeries clean_ticks(const TickSeries& series, double session_open, double session_close,
                              int trim_minutes, int outlier_window_k) {
  require(outlier_window_k >= 2, ErrorCode::kInvalidArgument, "outlier_window_k must be >= 2");
  require(session_close > session_open, ErrorCode::kInvalidArgument, "session close before open");
  const double keep_from = session_open + 60.0 * trim_minutes;
  const double keep_to = session_close - 60.0 * trim_minutes;

  std::vector<TickRecord> ticks;
  ticks.reserve(series.ticks.size());
  for (const auto& t : series.ticks) {
    if (t.timestamp < session_open || t.timestamp > session_close) continue;
    if (t.timestamp < keep_from || t.timestamp > keep_to) continue;
    if (!(t.price > 0.0)) continue;
    ticks.push_back(t);
  }
  sort_ticks(ticks);

  std::vector<TickRecord> merged;
  merged.reserve(ticks.size());
  std::vector<double> same;
  for (std::size_t i = 0; i < ticks.size();) {
    std::size_t j = i;
    same.clear();
    while (j < ticks.size() && ticks[j].timestamp == ticks[i].timestamp) same.push_back(ticks[j++].price);
    merged.push_back({ticks[i].timestamp, detail::median_of(same)});
    i = j;
  }

  const auto k = static_cast<std::size_t>(outlier_window_k);
  auto check_count = [&](const std::vector<TickRecord>& v) {
    require(v.size() >= k, ErrorCode::kInsufficientTicks,
            series.asset_id + " " + series.day_id + ": " + std::to_string(v.size()) +
                " ticks survive cleaning, need " + std::to_string(k));
  };
  check_count(merged);
  for (;;) {
    auto flags = detail::flag_outliers(merged, k);
    if (std::none_of(flags.begin(), flags.end(), [](bool f) { return f; })) break;
    std::vector<TickRecord> kept;
    kept.reserve(merged.size());
    for (std::size_t i = 0; i < merged.size(); ++i) {
      if (!flags[i]) kept.push_back(merged[i]);
    }
    merged.swap(kept);
    check_count(merged);
  }

  return TickSeries{series.asset_id, series.day_id, std::move(merged)};
}

inline TickSeries clean_ticks(const TickSeries& series, const SessionConfig& cfg) {
  return clean_ticks(series, cfg.open_seconds, cfg.close_seconds, cfg.trim_minutes, cfg.outlier_window_k);
}

/// Grid points start, start+interval, ... up to and including end when it
/// falls on the grid; only complete intervals are covered.
inline std::vector<double> make_grid(double start, double end, int interval_seconds) {
  require(interval_seconds > 0, ErrorCode::kInvalidArgument, "interval must be positive");
  require(end > start, ErrorCode::kInvalidArgument, "empty grid range");
  const auto intervals = static_cast<std::size_t>(std::floor((end - start) / interval_seconds + 1e-9));
  std::vector<double> grid(intervals + 1);
  for (std::size_t j = 0; j <= intervals; ++j) grid[j] = start + static_cast<double>(j) * interval_seconds;
  return grid;
}

inline std::vector<double> previous_tick_resample(const TickSeries& series, const std::vector<double>& grid) {
  if (grid.empty()) return {};
  const auto& ticks = series.ticks;
  require(!ticks.empty() && ticks.front().timestamp <= grid.front(), ErrorCode::kNoOpeningPrice,
          series.asset_id + " " + series.day_id + ": no tick at or before first grid point");
  std::vector<double> out(grid.size());
  std::size_t pos = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    while (pos + 1 < ticks.size() && ticks[pos + 1].timestamp <= grid[g]) ++pos;
    out[g] = ticks[pos].price;
  }
  return out;
}

inline ReturnPanel build_return_panel(const std::vector<std::vector<double>>& per_asset_prices,
                                      std::string day_id = {}, int interval_seconds = 300) {
  require(!per_asset_prices.empty(), ErrorCode::kGridMismatch, "no assets");
  const std::size_t len = per_asset_prices.front().size();
  require(len >= 2, ErrorCode::kGridMismatch, "need at least two grid prices");
  const auto d = static_cast<Eigen::Index>(per_asset_prices.size());
  const auto m = static_cast<Eigen::Index>(len - 1);
  ReturnPanel panel{std::move(day_id), interval_seconds, Matrix(m, d)};
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto& prices = per_asset_prices[static_cast<std::size_t>(i)];
    require(prices.size() == len, ErrorCode::kGridMismatch, "price sequences differ in length");
    for (Eigen::Index j = 0; j < m; ++j) {
      const double a = prices[static_cast<std::size_t>(j)];
      const double b = prices[static_cast<std::size_t>(j) + 1];
      require(a > 0.0 && b > 0.0, ErrorCode::kInvalidArgument, "non-positive price on grid");
      panel.returns(j, i) = std::log(b) - std::log(a);
    }
  }
  return panel;
}

/// Resamples already-cleaned series (in registry order) onto the retained
/// session grid and differences log prices.
inline ReturnPanel build_day_panel(const std::vector<TickSeries>& cleaned, const SessionConfig& cfg) {
  require(!cleaned.empty(), ErrorCode::kGridMismatch, "no assets for day");
  const auto grid = make_grid(cfg.retained_open(), cfg.retained_close(), cfg.interval_seconds);
  std::vector<std::vector<double>> prices;
  prices.reserve(cleaned.size());
  for (const auto& s : cleaned) {
    if (cfg.opening_backfill && !s.ticks.empty() && s.ticks.front().timestamp > grid.front()) {
      TickSeries padded = s;
      padded.ticks.insert(padded.ticks.begin(), TickRecord{grid.front(), s.ticks.front().price});
      prices.push_back(previous_tick_resample(padded, grid));
    } else {
      prices.push_back(previous_tick_resample(s, grid));
    }
  }
  return build_return_panel(prices, cleaned.front().day_id, cfg.interval_seconds);
}

}  // namespace fcaw

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "io.hpp"

namespace gbwm {

struct MonthKey {
  int year = 0;
  int month = 0;  // 1..12

  friend bool operator==(const MonthKey&, const MonthKey&) = default;
  friend auto operator<=>(const MonthKey& a, const MonthKey& b) {
    if (auto c = a.year <=> b.year; c != 0) return c;
    return a.month <=> b.month;
  }
  MonthKey next() const {
    return month == 12 ? MonthKey{year + 1, 1} : MonthKey{year, month + 1};
  }
  std::string str() const;
};

// Parses "YYYY-MM", "YYYY/MM" or Shiller-style "YYYY.MM" (two-digit month).
MonthKey parse_month(const std::string& text);

// Aligned monthly simple returns for the two assets. Read-only after
// construction; safe to share across threads.
struct ReturnSeries {
  std::vector<MonthKey> months;
  std::vector<double> bond;
  std::vector<double> stock;

  size_t size() const { return months.size(); }

  // Enforces: equal lengths >= 1, consecutive months, all returns > -1.
  void validate() const;
};

struct ColumnSpec {
  // date_col may name a single date column, or "year,month" to point at a
  // split year/month pair (the canonical on-disk layout).
  std::string date_col = "date";
  std::string bond_col = "bond_return";
  std::string stock_col = "stock_return";
};

ReturnSeries load_returns(const std::string& path, const ColumnSpec& cols);

// Canonical layout written by ingest: year,month,bond_return,stock_return.
ReturnSeries load_returns_canonical(const std::string& path);
void save_returns(const ReturnSeries& series, const std::string& path,
                  const MetaList& meta);

// First part: months < boundary. Second: months >= boundary. The boundary
// must fall strictly inside the covered range.
std::pair<ReturnSeries, ReturnSeries> split_train_test(
    const ReturnSeries& series, MonthKey boundary);

}  // namespace gbwm

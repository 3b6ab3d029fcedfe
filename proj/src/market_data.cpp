#include "market_data.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "io.hpp"

namespace gbwm {

std::string MonthKey::str() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d", year, month);
  return buf;
}

MonthKey parse_month(const std::string& text) {
  int y = 0, m = 0;
  char sep = 0;
  if (std::sscanf(text.c_str(), "%d%c%d", &y, &sep, &m) == 3 &&
      (sep == '-' || sep == '.' || sep == '/')) {
    if (m >= 1 && m <= 12 && y >= 1 && y <= 9999) return {y, m};
  }
  throw std::runtime_error("cannot parse month '" + text +
                           "' (expected YYYY-MM)");
}

void ReturnSeries::validate() const {
  if (months.empty()) throw std::runtime_error("return series is empty");
  if (bond.size() != months.size() || stock.size() != months.size()) {
    throw std::runtime_error("return series columns have unequal lengths");
  }
  for (size_t i = 0; i < months.size(); ++i) {
    if (i > 0 && !(months[i] == months[i - 1].next())) {
      throw std::runtime_error("non-consecutive months: " +
                               months[i - 1].str() + " followed by " +
                               months[i].str());
    }
    if (!(bond[i] > -1.0) || !(stock[i] > -1.0)) {
      throw std::runtime_error("return <= -1 at " + months[i].str());
    }
  }
}

static double parse_return(const std::string& cell, size_t lineno) {
  if (cell.empty()) {
    throw std::runtime_error("missing value at row " + std::to_string(lineno));
  }
  char* end = nullptr;
  double v = std::strtod(cell.c_str(), &end);
  if (end == cell.c_str() || *end != '\0') {
    throw std::runtime_error("unparseable number '" + cell + "' at row " +
                             std::to_string(lineno));
  }
  return v;
}

ReturnSeries load_returns(const std::string& path, const ColumnSpec& cols) {
  CsvTable table = read_csv(path);

  size_t year_idx = 0, month_idx = 0, date_idx = 0;
  bool split_date = cols.date_col.find(',') != std::string::npos;
  if (split_date) {
    auto comma = cols.date_col.find(',');
    year_idx = table.column(cols.date_col.substr(0, comma));
    month_idx = table.column(cols.date_col.substr(comma + 1));
  } else {
    date_idx = table.column(cols.date_col);
  }
  size_t bond_idx = table.column(cols.bond_col);
  size_t stock_idx = table.column(cols.stock_col);

  struct Row {
    MonthKey key;
    double bond, stock;
  };
  std::vector<Row> rows;
  rows.reserve(table.rows.size());
  for (size_t r = 0; r < table.rows.size(); ++r) {
    const auto& cells = table.rows[r];
    size_t lineno = table.row_numbers[r];
    size_t need = std::max({split_date ? std::max(year_idx, month_idx)
                                       : date_idx,
                            bond_idx, stock_idx});
    if (cells.size() <= need) {
      throw std::runtime_error("too few columns at row " +
                               std::to_string(lineno));
    }
    MonthKey key;
    if (split_date) {
      key.year = static_cast<int>(parse_return(cells[year_idx], lineno));
      key.month = static_cast<int>(parse_return(cells[month_idx], lineno));
      if (key.month < 1 || key.month > 12) {
        throw std::runtime_error("month out of range at row " +
                                 std::to_string(lineno));
      }
    } else {
      try {
        key = parse_month(cells[date_idx]);
      } catch (const std::exception& e) {
        throw std::runtime_error(std::string(e.what()) + " at row " +
                                 std::to_string(lineno));
      }
    }
    rows.push_back({key, parse_return(cells[bond_idx], lineno),
                    parse_return(cells[stock_idx], lineno)});
  }

  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.key < b.key; });

  ReturnSeries series;
  series.months.reserve(rows.size());
  for (const auto& row : rows) {
    series.months.push_back(row.key);
    series.bond.push_back(row.bond);
    series.stock.push_back(row.stock);
  }
  series.validate();
  return series;
}

ReturnSeries load_returns_canonical(const std::string& path) {
  ColumnSpec cols;
  cols.date_col = "year,month";
  return load_returns(path, cols);
}

void save_returns(const ReturnSeries& series, const std::string& path,
                  const MetaList& meta) {
  CsvWriter w(path, meta);
  w.header({"year", "month", "bond_return", "stock_return"});
  for (size_t i = 0; i < series.size(); ++i) {
    w.row({std::to_string(series.months[i].year),
           std::to_string(series.months[i].month),
           format_double(series.bond[i]), format_double(series.stock[i])});
  }
  w.close();
}

std::pair<ReturnSeries, ReturnSeries> split_train_test(
    const ReturnSeries& series, MonthKey boundary) {
  series.validate();
  if (!(series.months.front() < boundary) ||
      !(boundary <= series.months.back())) {
    throw std::runtime_error("split boundary " + boundary.str() +
                             " outside series range " +
                             series.months.front().str() + ".." +
                             series.months.back().str());
  }
  ReturnSeries a, b;
  for (size_t i = 0; i < series.size(); ++i) {
    ReturnSeries& part = series.months[i] < boundary ? a : b;
    part.months.push_back(series.months[i]);
    part.bond.push_back(series.bond[i]);
    part.stock.push_back(series.stock[i]);
  }
  return {std::move(a), std::move(b)};
}

}  // namespace gbwm

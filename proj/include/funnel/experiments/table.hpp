#ifndef FUNNEL_EXPERIMENTS_TABLE_HPP
#define FUNNEL_EXPERIMENTS_TABLE_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "funnel/core/error.hpp"

namespace funnel::experiments {

using Json = nlohmann::ordered_json;

/// A cell: missing, a real, an integer or text.
using Value = std::variant<std::monostate, double, std::int64_t, std::string>;

/// 17 significant digits: enough to round-trip any double.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Records with a fixed, ordered column set. Cells a row does not mention stay
/// empty; naming an undeclared column is a programming error.
class Table {
 public:
  using Row = std::vector<std::pair<std::string, Value>>;

  Table() = default;
  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add(const Row& row) {
    std::vector<Value> cells(columns_.size());
    for (const auto& [name, value] : row) cells[column(name)] = value;
    rows_.push_back(std::move(cells));
  }

  void set(std::size_t row, const std::string& name, Value v) {
    rows_.at(row).at(column(name)) = std::move(v);
  }

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
      if (columns_[i] == name) return i;
    fail(ErrorKind::domain, "table has no column '" + name + "'");
  }

  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<Value>>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  const Value& at(std::size_t row, const std::string& name) const {
    return rows_.at(row).at(column(name));
  }
  double number(std::size_t row, const std::string& name) const {
    const Value& v = at(row, name);
    if (const auto* d = std::get_if<double>(&v)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    return std::nan("");
  }
  std::string text(std::size_t row, const std::string& name) const {
    const Value& v = at(row, name);
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    return {};
  }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<Value>> rows_;
};

inline std::string csv_cell(const Value& v) {
  struct {
    std::string operator()(std::monostate) const { return {}; }
    std::string operator()(double d) const { return format_double(d); }
    std::string operator()(std::int64_t i) const { return std::to_string(i); }
    std::string operator()(const std::string& s) const {
      if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
      std::string out = "\"";
      for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
      }
      return out + "\"";
    }
  } visit;
  return std::visit(visit, v);
}

/// Header row plus one line per record, LF endings.
inline std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.columns().size(); ++i) {
    if (i) out += ',';
    out += csv_cell(t.columns()[i]);
  }
  out += '\n';
  for (const auto& row : t.rows()) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += csv_cell(row[i]);
    }
    out += '\n';
  }
  return out;
}

// Non-finite reals have no JSON literal; they are written as strings.
inline Json to_json(const Value& v) {
  if (std::holds_alternative<std::monostate>(v)) return nullptr;
  if (const auto* d = std::get_if<double>(&v)) {
    if (!std::isfinite(*d)) return format_double(*d);
    return *d;
  }
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  return std::get<std::string>(v);
}

inline Json to_json(const Table& t) {
  Json records = Json::array();
  for (const auto& row : t.rows()) {
    Json r = Json::object();
    for (std::size_t i = 0; i < row.size(); ++i) r[t.columns()[i]] = to_json(row[i]);
    records.push_back(std::move(r));
  }
  return records;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string short_hash(const std::string& s) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(s)));
  return std::string(buf, 10);
}

}  // namespace funnel::experiments

#endif  // FUNNEL_EXPERIMENTS_TABLE_HPP

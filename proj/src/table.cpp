#include "triform/table.hpp"

#include <fmt/format.h>

#include <cmath>

#include "triform/error.hpp"
#include "triform/store.hpp"

namespace triform::report {
using Json = nlohmann::ordered_json;

Column text_col(std::string name) { return {std::move(name), ColumnType::text, 0}; }
Column int_col(std::string name) { return {std::move(name), ColumnType::integer, 0}; }
Column real_col(std::string name, int decimals) { return {std::move(name), ColumnType::real, decimals}; }

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size())
    throw ContractViolation(fmt::format("table {}: row has {} cells, expected {}", name, row.size(), columns.size()));
  for (std::size_t i = 0; i < row.size(); ++i) {
    const auto& c = columns[i];
    auto& v = row[i];
    if (std::holds_alternative<std::monostate>(v)) continue;
    // Integers are accepted in real columns.
    if (c.type == ColumnType::real && std::holds_alternative<std::int64_t>(v))
      v = static_cast<double>(std::get<std::int64_t>(v));
    const bool ok = (c.type == ColumnType::text && std::holds_alternative<std::string>(v)) ||
                    (c.type == ColumnType::integer && std::holds_alternative<std::int64_t>(v)) ||
                    (c.type == ColumnType::real && std::holds_alternative<double>(v));
    if (!ok) throw ContractViolation(fmt::format("table {}: wrong cell type in column {}", name, c.name));
    if (c.type == ColumnType::real && !std::isfinite(std::get<double>(v)))
      throw ContractViolation(fmt::format("table {}: non-finite value in column {}", name, c.name));
  }
  rows.push_back(std::move(row));
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string format_cell(const Cell& v, const Column& c) {
  if (std::holds_alternative<std::monostate>(v)) return "";
  if (const auto* s = std::get_if<std::string>(&v)) return csv_field(*s);
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  std::string out = fmt::format("{:.{}f}", std::get<double>(v), c.decimals);
  // Avoid "-0.000".
  if (out.find_first_not_of("-0.") == std::string::npos && out.front() == '-') out.erase(0, 1);
  return out;
}

std::string_view type_name(ColumnType t) {
  switch (t) {
    case ColumnType::text: return "text";
    case ColumnType::integer: return "integer";
    case ColumnType::real: return "real";
  }
  return "text";
}

ColumnType parse_type(const std::string& s) {
  if (s == "text") return ColumnType::text;
  if (s == "integer") return ColumnType::integer;
  if (s == "real") return ColumnType::real;
  throw FormatError("unknown column type '" + s + "'");
}

}  // namespace

std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + csv_field(t.columns[i].name);
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + format_cell(row[i], t.columns[i]);
    out += '\n';
  }
  return out;
}

Json to_json(const Table& t) {
  Json j;
  j["name"] = t.name;
  j["source"] = {{"stage", t.source.stage}, {"operation", t.source.operation}, {"seed", t.source.seed}};
  j["columns"] = Json::array();
  for (const auto& c : t.columns) {
    Json col{{"name", c.name}, {"type", std::string(type_name(c.type))}};
    if (c.type == ColumnType::real) col["decimals"] = c.decimals;
    j["columns"].push_back(col);
  }
  j["rows"] = Json::array();
  for (const auto& row : t.rows) {
    Json r = Json::array();
    for (const auto& v : row) {
      if (std::holds_alternative<std::monostate>(v))
        r.push_back(nullptr);
      else if (const auto* s = std::get_if<std::string>(&v))
        r.push_back(*s);
      else if (const auto* i = std::get_if<std::int64_t>(&v))
        r.push_back(*i);
      else
        r.push_back(std::get<double>(v));
    }
    j["rows"].push_back(r);
  }
  return j;
}

Table table_from_json(const Json& j) {
  try {
    Table t;
    t.name = j.at("name").get<std::string>();
    if (j.contains("source")) {
      const auto& s = j.at("source");
      t.source = {s.at("stage").get<std::string>(), s.at("operation").get<std::string>(), s.at("seed").get<std::uint64_t>()};
    }
    for (const auto& c : j.at("columns"))
      t.columns.push_back({c.at("name").get<std::string>(), parse_type(c.at("type").get<std::string>()),
                           c.value("decimals", 3)});
    for (const auto& r : j.at("rows")) {
      std::vector<Cell> row;
      for (std::size_t i = 0; i < r.size(); ++i) {
        const auto& v = r[i];
        if (v.is_null())
          row.emplace_back(std::monostate{});
        else if (v.is_string())
          row.emplace_back(v.get<std::string>());
        else if (i < t.columns.size() && t.columns[i].type == ColumnType::integer)
          row.emplace_back(v.get<std::int64_t>());
        else
          row.emplace_back(v.get<double>());
      }
      t.add_row(std::move(row));
    }
    return t;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("malformed table: ") + e.what());
  }
}

Format parse_format(std::string_view s) {
  if (s == "csv") return Format::csv;
  if (s == "json") return Format::json;
  throw InvalidArgument("unknown format '" + std::string(s) + "', expected csv or json");
}

std::vector<std::filesystem::path> emit_tables(const std::vector<Table>& tables, const std::filesystem::path& dir,
                                               Format format) {
  std::vector<std::filesystem::path> written;
  for (const auto& t : tables) {
    const auto path = dir / (t.name + (format == Format::csv ? ".csv" : ".json"));
    store::atomic_write(path, format == Format::csv ? to_csv(t) : to_json(t).dump(2) + "\n");
    written.push_back(path);
  }
  return written;
}

}  // namespace triform::report

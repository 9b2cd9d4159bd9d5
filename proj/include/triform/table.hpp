#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace triform::report {

enum class ColumnType { text, integer, real };

struct Column {
  std::string name;
  ColumnType type = ColumnType::text;
  int decimals = 3;  // real columns only
};

using Cell = std::variant<std::monostate, std::string, std::int64_t, double>;

// Where a table's numbers come from.
struct Source {
  std::string stage;
  std::string operation;
  std::uint64_t seed = 0;
};

struct Table {
  std::string name;
  std::vector<Column> columns;
  std::vector<std::vector<Cell>> rows;
  Source source;

  // Throws ContractViolation if the row width or a cell type is wrong.
  void add_row(std::vector<Cell> row);
};

Column text_col(std::string name);
Column int_col(std::string name);
Column real_col(std::string name, int decimals = 3);

// Fixed precision per column; empty cells are empty fields. RFC 4180
// quoting for text that needs it.
std::string to_csv(const Table& table);
nlohmann::ordered_json to_json(const Table& table);
Table table_from_json(const nlohmann::ordered_json& j);

enum class Format { csv, json };
Format parse_format(std::string_view s);

// One file per table, <dir>/<name>.<csv|json>. Returns the paths written.
std::vector<std::filesystem::path> emit_tables(const std::vector<Table>& tables, const std::filesystem::path& dir,
                                               Format format);

}  // namespace triform::report

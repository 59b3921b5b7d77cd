#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fpcav {

// Comma-separated table with '#' metadata lines ("# key = value") before the column row.
// Units travel in the "units" metadata entry, one per column.
struct CsvTable {
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<std::string> columns;
    std::vector<std::string> units;
    std::vector<std::vector<std::string>> rows;

    void add_meta(std::string key, std::string value) { meta.emplace_back(std::move(key), std::move(value)); }
    const std::string* find_meta(std::string_view key) const;
    // Index of a column; throws InvalidConfigError when absent.
    size_t column(std::string_view name) const;
    std::vector<double> numeric_column(std::string_view name) const;
};

// Shortest decimal form that reads back to the same double.
std::string format_number(double v);

std::string write_csv(const CsvTable& table);
CsvTable read_csv(std::string_view text);
CsvTable read_csv_file(const std::string& path);

}  // namespace fpcav

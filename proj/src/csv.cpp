#include "fpcav/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "fpcav/core.hpp"
#include "fpcav/units.hpp"

namespace fpcav {
namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        const size_t comma = line.find(',', start);
        out.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += v[i];
    }
    return s;
}

}  // namespace

const std::string* CsvTable::find_meta(std::string_view key) const {
    for (const auto& [k, v] : meta)
        if (k == key) return &v;
    return nullptr;
}

size_t CsvTable::column(std::string_view name) const {
    for (size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return i;
    throw InvalidConfigError("CSV has no column '" + std::string(name) + "'");
}

std::vector<double> CsvTable::numeric_column(std::string_view name) const {
    const size_t c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (size_t r = 0; r < rows.size(); ++r) {
        if (c >= rows[r].size()) throw InvalidConfigError("CSV row " + std::to_string(r + 1) + " is short");
        out.push_back(parse_number(rows[r][c]));
    }
    return out;
}

std::string format_number(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string write_csv(const CsvTable& t) {
    std::ostringstream o;
    for (const auto& [k, v] : t.meta) o << "# " << k << " = " << v << "\n";
    if (!t.units.empty()) o << "# units = " << join(t.units) << "\n";
    o << join(t.columns) << "\n";
    for (const auto& row : t.rows) o << join(row) << "\n";
    return o.str();
}

CsvTable read_csv(std::string_view text) {
    CsvTable t;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto s = trim(line);
        if (s.empty()) continue;
        if (s.front() == '#') {
            const auto body = trim(s.substr(1));
            const auto eq = body.find('=');
            if (eq == std::string_view::npos) continue;
            const std::string key(trim(body.substr(0, eq)));
            const std::string value(trim(body.substr(eq + 1)));
            if (key == "units")
                t.units = split(value);
            else
                t.add_meta(key, value);
            continue;
        }
        auto cells = split(s);
        if (t.columns.empty()) {
            t.columns = std::move(cells);
            continue;
        }
        if (cells.size() != t.columns.size())
            throw InvalidConfigError("CSV line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(t.columns.size()) + " fields, got " +
                                     std::to_string(cells.size()));
        t.rows.push_back(std::move(cells));
    }
    if (t.columns.empty()) throw InvalidConfigError("CSV has no header row");
    if (!t.units.empty() && t.units.size() != t.columns.size())
        throw InvalidConfigError("CSV units line does not match the column count");
    return t;
}

CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfigError("cannot read '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return read_csv(ss.str());
}

}  // namespace fpcav

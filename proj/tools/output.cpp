#include "output.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <unistd.h>

namespace fpcav::cli {

CsvTable make_table(const std::string& command, const RunConfig& cfg, std::vector<std::string> columns,
                    std::vector<std::string> units) {
    if (columns.size() != units.size()) throw Error("internal: column and unit lists differ");
    CsvTable t;
    t.add_meta("tool", kToolName);
    t.add_meta("version", kToolVersion);
    t.add_meta("command", command);
    t.add_meta("config_hash", hash_hex(cfg.hash()));
    t.add_meta("preset", cfg.preset);
    t.add_meta("seed", std::to_string(cfg.seed));
    t.columns = std::move(columns);
    t.units = std::move(units);
    return t;
}

void add_row(CsvTable& table, const std::vector<double>& values) {
    std::vector<std::string> row;
    row.reserve(values.size());
    for (double v : values) row.push_back(format_number(v));
    table.rows.push_back(std::move(row));
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        std::cout.flush();
        return;
    }
    namespace fs = std::filesystem;
    const fs::path target(path);
    const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
    try {
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
            out << text;
            out.flush();
            if (!out) throw Error("write to '" + tmp.string() + "' failed");
        }
        fs::rename(tmp, target);
    } catch (...) {
        std::error_code ec;
        fs::remove(tmp, ec);
        throw;
    }
}

}  // namespace fpcav::cli

/**
 * @file table_io.hpp
 * @brief Column-oriented result tables and their CSV / JSON renderings.
 *
 * Numbers are written in shortest round-trip form, so identical inputs always
 * give byte-identical files.
 */

#pragma once

#include "json.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace sigtrade {

using Cell = std::variant<std::int64_t, double, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add_row(std::vector<Cell> row);
};

std::string format_number(double x);
std::string format_cell(const Cell& c);

void write_csv(std::ostream& out, const Table& table);
/// Array of row objects keyed by column name.
nlohmann::json table_to_json(const Table& table);

} // namespace sigtrade

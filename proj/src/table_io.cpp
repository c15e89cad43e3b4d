#include "sigtrade/table_io.hpp"
#include "sigtrade/common.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <ostream>

namespace sigtrade {

void Table::add_row(std::vector<Cell> row) {
    if (row.size() != columns.size())
        throw DomainError("table row has " + std::to_string(row.size()) + " cells, expected " +
                          std::to_string(columns.size()));
    rows.push_back(std::move(row));
}

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return std::string(buf.data(), ptr);
}

std::string format_cell(const Cell& c) {
    return std::visit([](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::string>) return v;
        else if constexpr (std::is_same_v<T, double>) return format_number(v);
        else return std::to_string(v);
    }, c);
}

void write_csv(std::ostream& out, const Table& table) {
    for (std::size_t i = 0; i < table.columns.size(); ++i)
        out << (i ? "," : "") << table.columns[i];
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_cell(row[i]);
        out << '\n';
    }
}

nlohmann::json table_to_json(const Table& table) {
    auto arr = nlohmann::json::array();
    for (const auto& row : table.rows) {
        nlohmann::json obj = nlohmann::json::object();
        for (std::size_t i = 0; i < row.size(); ++i) {
            std::visit([&](const auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, double>) {
                    if (std::isfinite(v)) obj[table.columns[i]] = v;
                    else obj[table.columns[i]] = format_number(v);
                } else {
                    obj[table.columns[i]] = v;
                }
            }, row[i]);
        }
        arr.push_back(std::move(obj));
    }
    return arr;
}

} // namespace sigtrade

#pragma once
// Tabular output (CSV and JSON) with a matching reader, and JSON-lines path
// records. Reals are written as %.16e, i.e. 17 significant digits, so every
// double survives a write/read cycle bit for bit.

#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "subpois/errors.hpp"
#include "subpois/simulation.hpp"

namespace subpois {

using Cell = std::variant<std::int64_t, double, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add_row(std::vector<Cell> row) {
        if (row.size() != columns.size()) throw ContractError("row width does not match the header");
        rows.push_back(std::move(row));
    }

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return i;
        throw DomainError("no column named '" + name + "'");
    }

    // Numeric value of a cell (integers widen to double).
    double number(std::size_t row, const std::string& name) const {
        const auto& c = rows.at(row).at(column(name));
        if (const auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
        if (const auto* d = std::get_if<double>(&c)) return *d;
        throw DomainError("column '" + name + "' holds text");
    }
};

inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", x);
    return buf;
}

inline std::string format_cell(const Cell& c) {
    if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
    if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
    const auto& s = std::get<std::string>(c);
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
        if (ch == '"') q += '"';
        q += ch;
    }
    return q + '"';
}

// Integer if the whole token is an integer, else a double if strtod consumes
// it, else text.
inline Cell parse_cell(const std::string& tok) {
    if (tok.empty()) return std::string();
    char* end = nullptr;
    errno = 0;
    const long long i = std::strtoll(tok.c_str(), &end, 10);
    if (errno == 0 && end == tok.c_str() + tok.size()) return static_cast<std::int64_t>(i);
    errno = 0;
    const double d = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() + tok.size()) return d;
    return tok;
}

inline void write_csv(std::ostream& os, const Table& t) {
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_cell(row[i]);
        os << '\n';
    }
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

} // namespace detail

inline Table read_csv(std::istream& is) {
    Table t;
    std::string line;
    if (!std::getline(is, line)) throw DomainError("empty CSV input");
    t.columns = detail::split_csv_line(line);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<Cell> row;
        for (const auto& tok : detail::split_csv_line(line)) row.push_back(parse_cell(tok));
        t.add_row(std::move(row));
    }
    return t;
}

// Array of objects keyed by column, in column order. NaN and infinities have
// no JSON literal and are written as strings.
inline nlohmann::ordered_json table_to_json(const Table& t) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& row : t.rows) {
        nlohmann::ordered_json obj = nlohmann::ordered_json::object();
        for (std::size_t i = 0; i < row.size(); ++i) {
            std::visit(
                [&](const auto& v) {
                    using V = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<V, double>) {
                        if (std::isfinite(v)) obj[t.columns[i]] = v;
                        else obj[t.columns[i]] = format_double(v);
                    } else {
                        obj[t.columns[i]] = v;
                    }
                },
                row[i]);
        }
        arr.push_back(std::move(obj));
    }
    return arr;
}

inline void write_json(std::ostream& os, const Table& t) { os << table_to_json(t).dump(2) << '\n'; }

inline Table read_json(std::istream& is) {
    const auto arr = nlohmann::ordered_json::parse(is);
    if (!arr.is_array()) throw DomainError("table JSON must be an array of objects");
    Table t;
    for (const auto& obj : arr) {
        if (t.columns.empty())
            for (const auto& [key, _] : obj.items()) t.columns.push_back(key);
        std::vector<Cell> row;
        for (const auto& col : t.columns) {
            const auto& v = obj.at(col);
            if (v.is_number_integer()) row.emplace_back(v.get<std::int64_t>());
            else if (v.is_number()) row.emplace_back(v.get<double>());
            else {
                const auto s = v.get<std::string>();
                const auto parsed = parse_cell(s);
                if (std::holds_alternative<double>(parsed)) row.push_back(parsed);
                else row.emplace_back(s);
            }
        }
        t.add_row(std::move(row));
    }
    return t;
}

// ---------------------------------------------------------------------------
// Path records: {"t": ..., "events": [[time, size], ...], "seed": ..., "stream": ..., "method": ...}

inline nlohmann::ordered_json path_to_json(const PathRecord& p) {
    auto events = nlohmann::ordered_json::array();
    for (const auto& e : p.events) events.push_back(nlohmann::ordered_json::array({e.time, e.size}));
    return {{"t", p.horizon}, {"events", events}, {"seed", p.seed}, {"stream", p.stream}, {"method", method_name(p.method)}};
}

inline PathRecord path_from_json(const nlohmann::json& j) {
    PathRecord p;
    p.horizon = j.at("t").get<double>();
    for (const auto& e : j.at("events")) p.events.push_back({e.at(0).get<double>(), e.at(1).get<std::uint64_t>()});
    p.seed = j.at("seed").get<std::uint64_t>();
    p.stream = j.value("stream", std::uint64_t{0});
    p.method = parse_method(j.at("method").get<std::string>());
    return p;
}

inline void write_jsonl(std::ostream& os, const std::vector<PathRecord>& paths) {
    for (const auto& p : paths) os << path_to_json(p).dump() << '\n';
}

inline std::vector<PathRecord> read_jsonl(std::istream& is) {
    std::vector<PathRecord> out;
    std::string line;
    while (std::getline(is, line))
        if (!line.empty()) out.push_back(path_from_json(nlohmann::json::parse(line)));
    return out;
}

} // namespace subpois

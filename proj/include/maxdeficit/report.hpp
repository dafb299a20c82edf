#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "maxdeficit/errors.hpp"

namespace maxdeficit {

/// %g formatting with the given number of significant digits, '.' as decimal separator.
inline std::string format_number(double x, int precision = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", std::clamp(precision, 1, 17), x);
    return buf;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row) {
        if (row.size() != header.size()) throw ArgumentError("table row width does not match header");
        rows.push_back(std::move(row));
    }
};

inline void write_csv(std::ostream& os, const Table& t) {
    auto line = [&os](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
        os << '\n';
    };
    line(t.header);
    for (const auto& r : t.rows) line(r);
}

inline void write_text(std::ostream& os, const Table& t) {
    std::vector<std::size_t> width(t.header.size());
    for (std::size_t i = 0; i < width.size(); ++i) width[i] = t.header[i].size();
    for (const auto& r : t.rows)
        for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) os << "  ";
            os << std::string(width[i] - cells[i].size(), ' ') << cells[i];
        }
        os << '\n';
    };
    line(t.header);
    std::size_t total = 0;
    for (auto w : width) total += w;
    os << std::string(total + 2 * (width.empty() ? 0 : width.size() - 1), '-') << '\n';
    for (const auto& r : t.rows) line(r);
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.emplace_back(s.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline double parse_double(std::string_view s) {
    s = trim(s);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw ArgumentError("not a number: '" + std::string(s) + "'");
    }
    return v;
}

inline Table read_csv(std::istream& is) {
    Table t;
    std::string line;
    if (!std::getline(is, line)) throw ArgumentError("empty CSV input");
    t.header = split(trim(line), ',');
    while (std::getline(is, line)) {
        if (trim(line).empty()) continue;
        t.add_row(split(trim(line), ','));
    }
    return t;
}

/// Flat key = value file; '#' starts a comment. Repeated keys accumulate in order.
inline std::multimap<std::string, std::string> read_config(std::istream& is) {
    std::multimap<std::string, std::string> out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) {
            throw ArgumentError("config line " + std::to_string(lineno) + ": expected key = value");
        }
        const auto key = trim(body.substr(0, eq));
        if (key.empty()) throw ArgumentError("config line " + std::to_string(lineno) + ": empty key");
        out.emplace(std::string(key), std::string(trim(body.substr(eq + 1))));
    }
    return out;
}

}  // namespace maxdeficit

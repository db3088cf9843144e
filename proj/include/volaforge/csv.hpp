#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "volaforge/timeseries.hpp"

namespace volaforge::csv {

// Parsing goes through std::from_chars, so it is locale-independent by
// construction (dot decimal separator, no grouping).

inline double parse_double(std::string_view s, const std::string& context) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last)
        throw DataError("CSV: cannot parse number '" + std::string(s) + "' (" + context + ")");
    return v;
}

/// Shortest round-trip decimal representation; deterministic across runs.
inline std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw Error("format_double failed");
    return std::string(buf, ptr);
}

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            std::string field = line.substr(start, i - start);
            if (!field.empty() && field.back() == '\r') field.pop_back();
            out.push_back(std::move(field));
            start = i + 1;
        }
    }
    return out;
}

/// Reads all non-comment lines (leading '#' lines are metadata headers).
inline std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("CSV: cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] == '#') continue;
        if (line.empty() || line == "\r") continue;
        lines.push_back(line);
    }
    return lines;
}

inline bool looks_like_iso_date(std::string_view s) {
    return s.size() == 10 && s[4] == '-' && s[7] == '-';
}

/// Intraday file: header `date,r1,...,rn`, one row per trading day.
inline IntradayPanel read_intraday(const std::string& path, std::string asset_id = "") {
    auto lines = read_lines(path);
    if (lines.size() < 2) throw DataError("CSV: " + path + " has no data rows");
    auto header = split_line(lines.front());
    if (header.size() < 3 || header[0] != "date")
        throw DataError("CSV: " + path + " must have header date,r1,...,rn");
    IntradayPanel panel;
    panel.asset_id = asset_id.empty() ? std::filesystem::path(path).stem().string() : std::move(asset_id);
    const std::size_t n = header.size() - 1;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto fields = split_line(lines[i]);
        if (fields.size() != n + 1)
            throw DataError("CSV: " + path + " row " + std::to_string(i) + " has " +
                            std::to_string(fields.size() - 1) + " returns, expected " +
                            std::to_string(n));
        if (!looks_like_iso_date(fields[0]))
            throw DataError("CSV: " + path + " row " + std::to_string(i) +
                            " has non-ISO date '" + fields[0] + "'");
        panel.dates.push_back(fields[0]);
        std::vector<double> rets(n);
        for (std::size_t j = 0; j < n; ++j)
            rets[j] = parse_double(fields[j + 1], path + " row " + std::to_string(i));
        panel.returns.push_back(std::move(rets));
    }
    panel.validate();
    return panel;
}

/// Daily file: header `date,value`.
inline DailySeries read_daily(const std::string& path, std::string asset_id = "") {
    auto lines = read_lines(path);
    if (lines.size() < 2) throw DataError("CSV: " + path + " has no data rows");
    auto header = split_line(lines.front());
    if (header.size() != 2 || header[0] != "date")
        throw DataError("CSV: " + path + " must have header date,value");
    DailySeries s;
    s.asset_id = asset_id.empty() ? std::filesystem::path(path).stem().string() : std::move(asset_id);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto fields = split_line(lines[i]);
        if (fields.size() != 2)
            throw DataError("CSV: " + path + " row " + std::to_string(i) + " malformed");
        if (!looks_like_iso_date(fields[0]))
            throw DataError("CSV: " + path + " row " + std::to_string(i) +
                            " has non-ISO date '" + fields[0] + "'");
        s.dates.push_back(fields[0]);
        s.values.push_back(parse_double(fields[1], path + " row " + std::to_string(i)));
    }
    s.validate();
    return s;
}

class Writer {
  public:
    explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw DataError("CSV: cannot write " + path);
    }

    void comment(const std::string& text) { out_ << "# " << text << "\n"; }

    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << ',';
            out_ << fields[i];
        }
        out_ << '\n';
    }

  private:
    std::ofstream out_;
};

}  // namespace volaforge::csv

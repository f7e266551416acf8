#pragma once

// Feature matrix CSV: header `device_ip,label,f00,...,f51`, one row per sample.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "iotgan/features.hpp"

namespace iotgan::features {

/// Shortest text that reads back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

inline std::string csv_header() {
    std::string h = "device_ip,label";
    for (std::size_t i = 0; i < vector_dim; ++i) h += "," + column_name(i);
    return h;
}

/// Export order: device address ascending, then extraction time.
inline void sort_for_export(std::vector<FeatureVector>& vectors) {
    std::stable_sort(vectors.begin(), vectors.end(), [](const FeatureVector& a, const FeatureVector& b) {
        if (a.device_ip != b.device_ip) return a.device_ip < b.device_ip;
        return a.ts_micros < b.ts_micros;
    });
}

inline std::string write_feature_csv(std::span<const FeatureVector> vectors) {
    std::string out = csv_header() + "\n";
    for (const auto& v : vectors) {
        out += v.device_ip.to_string();
        out += ',';
        out += to_string(v.label);
        for (double x : v.values) {
            out += ',';
            out += format_double(x);
        }
        out += '\n';
    }
    return out;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

inline double parse_double(const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) throw std::invalid_argument("not a number: '" + s + "'");
    return v;
}

inline std::vector<FeatureVector> read_feature_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("feature CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != csv_header()) throw std::invalid_argument("feature CSV header mismatch");

    std::vector<FeatureVector> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != vector_dim + 2)
            throw std::invalid_argument("feature CSV line " + std::to_string(lineno) + ": expected " +
                                        std::to_string(vector_dim + 2) + " cells");
        FeatureVector fv;
        fv.device_ip = Ipv4::parse(cells[0]);
        fv.label = parse_label(cells[1]);
        for (std::size_t i = 0; i < vector_dim; ++i) fv.values[i] = parse_double(cells[i + 2]);
        rows.push_back(fv);
    }
    return rows;
}

}  // namespace iotgan::features

#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "roughflow/error.hpp"
#include "roughflow/tensor/rough_path.hpp"

namespace roughflow {

/// shortest-safe decimal form that round-trips a double exactly
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/**
 * @brief CSV form of a rough path.
 *
 * Header `t,u_1..u_d,m_11..m_dd`. Row 0 is the start time with zero
 * increments; row k >= 1 holds the increment of the cell ending at t_k.
 */
inline std::string path_to_csv(const CadlagRoughPath& x) {
    const std::size_t d = x.dim();
    std::ostringstream os;
    os << "t";
    for (std::size_t i = 0; i < d; ++i) os << ",u_" << (i + 1);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) os << ",m_" << (i + 1) << (d > 9 ? "_" : "") << (j + 1);
    os << "\n";
    for (std::size_t k = 0; k <= x.cells(); ++k) {
        os << format_double(x.time(k));
        for (std::size_t i = 0; i < d; ++i) os << "," << format_double(k == 0 ? 0.0 : x.cell_level1(k - 1)[i]);
        for (std::size_t q = 0; q < d * d; ++q) os << "," << format_double(k == 0 ? 0.0 : x.cell_level2(k - 1)[q]);
        os << "\n";
    }
    return os.str();
}

inline CadlagRoughPath path_from_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    require(static_cast<bool>(std::getline(is, line)), ErrorKind::io, "path csv: missing header");
    std::size_t cols = 1;
    for (char c : line) cols += (c == ',');
    std::size_t d = 0;
    while (1 + d + d * d < cols) ++d;
    require(d >= 1 && 1 + d + d * d == cols, ErrorKind::io,
            "path csv: header has " + std::to_string(cols) + " columns, expected 1+d+d^2");
    std::vector<double> grid, a, m;
    std::size_t row = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> vals;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            require(!cell.empty() && end == cell.c_str() + cell.size(), ErrorKind::io,
                    "path csv: bad number '" + cell + "' in row " + std::to_string(row + 1));
            vals.push_back(v);
        }
        require(vals.size() == cols, ErrorKind::io, "path csv: row " + std::to_string(row + 1) + " has wrong width");
        grid.push_back(vals[0]);
        if (row > 0) {
            a.insert(a.end(), vals.begin() + 1, vals.begin() + 1 + static_cast<long>(d));
            m.insert(m.end(), vals.begin() + 1 + static_cast<long>(d), vals.end());
        } else {
            for (std::size_t i = 1; i < cols; ++i)
                require(vals[i] == 0.0, ErrorKind::io, "path csv: first row must carry zero increments");
        }
        ++row;
    }
    return CadlagRoughPath(d, std::move(grid), std::move(a), std::move(m));
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    require(static_cast<bool>(f), ErrorKind::io, "cannot open " + path + " for writing");
    f << text;
    require(static_cast<bool>(f), ErrorKind::io, "failed writing " + path);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    require(static_cast<bool>(f), ErrorKind::io, "cannot open " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

}  // namespace roughflow

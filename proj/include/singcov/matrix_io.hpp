#pragma once

#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "benchmark.hpp"  // atomic_write_text
#include "matrix.hpp"

namespace singcov {

/// Interchange format for complex matrices:
///   {"rows": r, "cols": c, "re": [...], "im": [...]}
/// row-major, both arrays of length r*c; "im" may be omitted for real data.
inline ComplexMatrix matrix_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("re"))
        throw io_error("matrix json: expected object with rows, cols, re (and optional im)");
    const Index rows = j.at("rows").get<Index>();
    const Index cols = j.at("cols").get<Index>();
    if (rows < 1 || cols < 1) throw io_error("matrix json: rows and cols must be positive");
    const auto& re = j.at("re");
    if (!re.is_array() || static_cast<Index>(re.size()) != rows * cols)
        throw io_error("matrix json: re must hold rows*cols values");
    const bool has_im = j.contains("im");
    if (has_im && static_cast<Index>(j.at("im").size()) != rows * cols)
        throw io_error("matrix json: im must hold rows*cols values");
    ComplexMatrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index c = 0; c < cols; ++c) {
            const std::size_t idx = static_cast<std::size_t>(i * cols + c);
            m(i, c) = {re.at(idx).get<double>(),
                       has_im ? j.at("im").at(idx).get<double>() : 0.0};
        }
    check_finite(m, "matrix json");
    return m;
}

inline nlohmann::json matrix_to_json(const ComplexMatrix& m) {
    nlohmann::json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    std::vector<double> re, im;
    re.reserve(m.size());
    im.reserve(m.size());
    for (Index i = 0; i < m.rows(); ++i)
        for (Index c = 0; c < m.cols(); ++c) {
            re.push_back(m(i, c).real());
            im.push_back(m(i, c).imag());
        }
    j["re"] = re;
    j["im"] = im;
    return j;
}

/// Real matrices are also accepted as CSV, one row per line; imaginary
/// parts default to zero.
inline ComplexMatrix matrix_from_csv_text(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw io_error("matrix csv: cannot parse '" + cell + "'");
            }
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw io_error("matrix csv: ragged rows");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw io_error("matrix csv: no data rows");
    ComplexMatrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index c = 0; c < m.cols(); ++c) m(i, c) = rows[i][c];
    check_finite(m, "matrix csv");
    return m;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Loads a matrix by extension: .json uses the re/im object format,
/// anything else is parsed as real CSV.
inline ComplexMatrix load_matrix(const std::string& path) {
    const std::string text = read_text_file(path);
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw io_error(path + ": " + e.what());
        }
        return matrix_from_json(j);
    }
    return matrix_from_csv_text(text);
}

inline ComplexVector load_vector(const std::string& path) {
    const ComplexMatrix m = load_matrix(path);
    if (m.cols() == 1) return m.col(0);
    if (m.rows() == 1) return m.row(0).transpose();
    throw io_error(path + ": expected a vector (one row or one column), got " +
                   std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

inline void save_matrix_json(const std::string& path, const ComplexMatrix& m,
                             const nlohmann::json& extra = nlohmann::json::object()) {
    nlohmann::json j = matrix_to_json(m);
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    detail::atomic_write_text(path, j.dump(2) + "\n");
}

}  // namespace singcov

#include "vbglmm/csv.hpp"

#include "vbglmm/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

namespace vbglmm {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.emplace_back(trim(std::string_view(line).substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return cells;
}

double parse_number(const std::string& cell, std::size_t row, const std::string& column) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = first + cell.size();
    if (!cell.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
        throw DataError(DataErrorKind::ParseError, "cannot parse '" + cell + "' as a number at row " +
                                                       std::to_string(row) + ", column '" + column + "'");
    }
    return v;
}

}  // namespace

void CsvSchema::validate() const {
    std::set<std::string> seen;
    auto add = [&](const std::string& name) {
        if (name.empty()) throw ConfigError("empty column name");
        if (!seen.insert(name).second) throw ConfigError("column '" + name + "' is used twice");
    };
    add(cluster_column);
    add(response_column);
    for (const auto& c : fixed_columns) add(c);
    for (const auto& c : random_columns) add(c);
}

Dataset load_csv(std::istream& in, const CsvSchema& schema, Family family) {
    schema.validate();
    std::string line;
    if (!std::getline(in, line) || trim(line).empty())
        throw DataError(DataErrorKind::EmptyFile, "CSV input is empty");

    const std::vector<std::string> header = split(line);
    std::unordered_map<std::string, std::size_t> col;
    for (std::size_t c = 0; c < header.size(); ++c) col.emplace(header[c], c);
    auto index_of = [&](const std::string& name) {
        const auto it = col.find(name);
        if (it == col.end())
            throw DataError(DataErrorKind::MissingColumn, "column '" + name + "' not found in header");
        return it->second;
    };
    const std::size_t cluster_idx = index_of(schema.cluster_column);
    const std::size_t response_idx = index_of(schema.response_column);
    std::vector<std::size_t> fixed_idx, random_idx;
    for (const auto& c : schema.fixed_columns) fixed_idx.push_back(index_of(c));
    for (const auto& c : schema.random_columns) random_idx.push_back(index_of(c));

    std::vector<std::string> clusters;
    std::vector<double> y;
    std::vector<std::vector<double>> xrows, zrows;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const std::vector<std::string> cells = split(line);
        if (cells.size() != header.size()) {
            throw DataError(DataErrorKind::DimensionMismatch,
                            "row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                                " fields, header has " + std::to_string(header.size()));
        }
        clusters.push_back(cells[cluster_idx]);
        y.push_back(parse_number(cells[response_idx], row, schema.response_column));
        std::vector<double> x, z;
        for (std::size_t k = 0; k < fixed_idx.size(); ++k)
            x.push_back(parse_number(cells[fixed_idx[k]], row, schema.fixed_columns[k]));
        for (std::size_t k = 0; k < random_idx.size(); ++k)
            z.push_back(parse_number(cells[random_idx[k]], row, schema.random_columns[k]));
        xrows.push_back(std::move(x));
        zrows.push_back(std::move(z));
    }
    if (y.empty()) throw DataError(DataErrorKind::EmptyFile, "CSV input has a header but no rows");

    const auto n = static_cast<Index>(y.size());
    const auto p = static_cast<Index>(fixed_idx.size());
    const Index u = random_idx.empty() ? 1 : static_cast<Index>(random_idx.size());
    VectorXd yv(n);
    MatrixXd X(n, p + 1), Z(n, u);
    for (Index k = 0; k < n; ++k) {
        const auto sk = static_cast<std::size_t>(k);
        yv[k] = y[sk];
        X(k, 0) = 1.0;
        for (Index c = 0; c < p; ++c) X(k, c + 1) = xrows[sk][static_cast<std::size_t>(c)];
        if (random_idx.empty()) {
            Z(k, 0) = 1.0;
        } else {
            for (Index c = 0; c < u; ++c) Z(k, c) = zrows[sk][static_cast<std::size_t>(c)];
        }
    }
    return group_by_cluster(yv, X, Z, clusters, family);
}

Dataset load_csv(const std::string& path, const CsvSchema& schema, Family family) {
    std::ifstream in(path);
    if (!in) throw DataError(DataErrorKind::EmptyFile, "cannot open '" + path + "'");
    return load_csv(in, schema, family);
}

}  // namespace vbglmm

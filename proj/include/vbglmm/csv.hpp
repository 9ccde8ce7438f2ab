#pragma once

#include "vbglmm/model.hpp"

#include <istream>
#include <string>
#include <vector>

namespace vbglmm {

/// Which CSV columns form the model. Empty random_columns means a random intercept.
struct CsvSchema {
    std::string cluster_column;
    std::string response_column;
    std::vector<std::string> fixed_columns;
    std::vector<std::string> random_columns;

    void validate() const;
};

/// Comma-separated, header row, '.' decimal point, no quoting. Rows are
/// grouped by cluster value in order of first appearance.
Dataset load_csv(std::istream& in, const CsvSchema& schema, Family family);
Dataset load_csv(const std::string& path, const CsvSchema& schema, Family family);

}  // namespace vbglmm

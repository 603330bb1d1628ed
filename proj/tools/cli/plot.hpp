#pragma once

#include <string>
#include <vector>

namespace remove_eval::cli {

struct Series {
    std::string label;
    std::vector<double> values;  ///< NaN entries are skipped
};

/// Line chart of one or more series over bin index 1..n, written as PNG.
void plot_series(const std::string& path, const std::string& title, const std::string& x_label,
                 const std::string& y_label, const std::vector<Series>& series);

}  // namespace remove_eval::cli

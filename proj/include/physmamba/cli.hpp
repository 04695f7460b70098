// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace physmamba::cli {

enum ExitCode : int { kSuccess = 0, kVerificationFailure = 1, kUsageError = 2, kIoError = 3 };

/// Entry point of the physmamba command. Never throws.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Line plot of one or more series as a standalone SVG document.
std::string line_plot_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<Series>& series);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace physmamba::cli

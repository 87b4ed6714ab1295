#pragma once

#include <string>
#include <vector>

namespace fwrobust {

/// Rows of raw cells; numeric cells are formatted by the caller so files are
/// reproducible byte for byte ('.' decimal, LF endings, 17 significant digits
/// via to_precise_string).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// Writes header + rows, comma-separated, one LF per line. Cells containing
/// commas, quotes or newlines are quoted.
void write_csv(const std::string& path, const CsvTable& table);

/// Strict reader for the files this project writes and headered numeric
/// input data: splits on commas with quote handling, requires a header line.
CsvTable read_csv(const std::string& path);

}  // namespace fwrobust

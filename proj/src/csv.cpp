#include "fwrobust/csv.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fwrobust {
namespace {

bool needs_quoting(const std::string& cell) {
    return cell.find_first_of(",\"\n\r") != std::string::npos;
}

void append_cell(std::string& line, const std::string& cell) {
    if (!needs_quoting(cell)) {
        line += cell;
        return;
    }
    line += '"';
    for (char c : cell) {
        if (c == '"') line += '"';
        line += c;
    }
    line += '"';
}

std::string format_line(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) line += ',';
        append_cell(line, cells[i]);
    }
    line += '\n';
    return line;
}

std::vector<std::string> split_line(const std::string& line, std::size_t line_number) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cell += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell += c;
            }
        } else if (c == '"' && cell.empty()) {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(std::move(cell));
            cell.clear();
        } else {
            cell += c;
        }
    }
    if (quoted)
        throw std::runtime_error("csv line " + std::to_string(line_number) +
                                 ": unterminated quote");
    cells.push_back(std::move(cell));
    return cells;
}

// Quoted quotes are doubled, so an odd count means a quote is still open and
// the logical record continues on the next physical line.
bool quote_open(const std::string& record) {
    std::size_t quotes = 0;
    for (char c : record)
        if (c == '"') ++quotes;
    return quotes % 2 == 1;
}

}  // namespace

void write_csv(const std::string& path, const CsvTable& table) {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open '" + path + "' for writing");
    file << format_line(table.header);
    for (const auto& row : table.rows) {
        if (row.size() != table.header.size())
            throw std::invalid_argument("csv row has " + std::to_string(row.size()) +
                                        " cells, header has " +
                                        std::to_string(table.header.size()));
        file << format_line(row);
    }
    if (!file) throw std::runtime_error("write to '" + path + "' failed");
}

CsvTable read_csv(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open '" + path + "'");
    CsvTable table;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(file, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() && table.header.empty()) continue;  // leading blank lines
        if (line.empty()) continue;
        std::string record = std::move(line);
        const std::size_t record_line = line_number;
        while (quote_open(record) && std::getline(file, line)) {
            ++line_number;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            record += '\n';
            record += line;
        }
        std::vector<std::string> cells = split_line(record, record_line);
        if (table.header.empty())
            table.header = std::move(cells);
        else
            table.rows.push_back(std::move(cells));
    }
    if (table.header.empty()) throw std::runtime_error("'" + path + "' has no header line");
    return table;
}

}  // namespace fwrobust

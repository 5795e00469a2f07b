#include "ionbath/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace ionbath {

std::string g17(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

std::size_t Csv::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw std::out_of_range("csv: no column named '" + std::string(name) + "'");
}

double Csv::number(std::size_t row, std::size_t col) const {
    const std::string& cell = rows.at(row).at(col);
    const char* begin = cell.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
        throw std::invalid_argument("csv: cell '" + cell + "' is not a number");
    return v;
}

namespace {

bool needs_quoting(const std::string& cell) {
    return cell.find_first_of(",\"\r\n") != std::string::npos;
}

void write_cell(std::ostream& os, const std::string& cell) {
    if (!needs_quoting(cell)) {
        os << cell;
        return;
    }
    os << '"';
    for (char c : cell) {
        if (c == '"') os << '"';
        os << c;
    }
    os << '"';
}

void write_row(std::ostream& os, const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) os << ',';
        write_cell(os, row[i]);
    }
    os << '\n';
}

std::vector<std::string> parse_row(const std::string& text, std::size_t& pos) {
    std::vector<std::string> row;
    std::string cell;
    bool quoted = false;
    while (pos < text.size()) {
        char c = text[pos];
        if (quoted) {
            if (c == '"') {
                if (pos + 1 < text.size() && text[pos + 1] == '"') {
                    cell += '"';
                    ++pos;
                } else {
                    quoted = false;
                }
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(std::move(cell));
            cell.clear();
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && pos + 1 < text.size() && text[pos + 1] == '\n') ++pos;
            ++pos;
            row.push_back(std::move(cell));
            return row;
        } else {
            cell += c;
        }
        ++pos;
    }
    row.push_back(std::move(cell));
    return row;
}

}  // namespace

Csv read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("csv: cannot open " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    Csv table;
    std::size_t pos = 0;
    if (pos < text.size()) table.header = parse_row(text, pos);
    while (pos < text.size()) {
        std::vector<std::string> row = parse_row(text, pos);
        if (row.size() == 1 && row[0].empty()) continue;  // blank line
        table.rows.push_back(std::move(row));
    }
    return table;
}

void write_csv(const std::filesystem::path& path, const Csv& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::invalid_argument("csv: cannot write " + path.string());
    write_row(out, table.header);
    for (const auto& row : table.rows) write_row(out, row);
    if (!out) throw std::runtime_error("csv: write failed for " + path.string());
}

}  // namespace ionbath

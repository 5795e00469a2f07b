#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ionbath {

// Shortest decimal form that round-trips a double, locale-independent.
std::string g17(double value);

struct Csv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const;         // throws std::out_of_range
    double number(std::size_t row, std::size_t col) const;   // throws std::invalid_argument
};

// RFC-4180-style: comma separators, quoted fields when needed, header row,
// '.' decimal point, LF line ends.
Csv read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const Csv& table);

}  // namespace ionbath

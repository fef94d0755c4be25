// io.hpp: Locale-independent number formatting and CSV readers/writers

#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "skinsim/engine.hpp"

namespace skinsim {

// Shortest decimal that round-trips to the same double; "nan", "inf", "-inf"
// for non-finite values.
std::string format_number(double value);
// Inverse of format_number; throws std::invalid_argument on malformed text.
double parse_number(std::string_view text);

// t,t_over_L then <name>_mean,<name>_se for every scalar observable in
// canonical order. Vector observables are skipped.
void write_series_csv(std::ostream& out, const EnsembleSeries& series);

// Long format t,t_over_L,<key>,mean,se for a vector observable; row k of
// each time uses keys[k].
void write_profile_csv(std::ostream& out, const EnsembleSeries& series, std::string_view observable,
                       std::string_view key, std::span<const double> keys);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    bool has(std::string_view name) const;
    // Throws std::out_of_range for an unknown column.
    std::vector<double> column(std::string_view name) const;
};

// Numeric CSV with one header line; empty cells read as NaN.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

} // namespace skinsim

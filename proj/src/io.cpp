// io.cpp: Number formatting and CSV input/output

#include "skinsim/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace skinsim {

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

double parse_number(std::string_view text) {
    if (text.empty() || text == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (text == "inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
        throw std::invalid_argument("malformed number '" + std::string(text) + "'");
    return v;
}

void write_series_csv(std::ostream& out, const EnsembleSeries& series) {
    std::vector<const std::pair<std::string, SeriesStat>*> scalars;
    for (const auto& obs : series.observables)
        if (obs.second.mean.cols() == 1) scalars.push_back(&obs);
    out << "t,t_over_L";
    for (const auto* s : scalars) out << ',' << s->first << "_mean," << s->first << "_se";
    out << '\n';
    for (std::size_t i = 0; i < series.times.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        out << format_number(series.times[i]) << ',' << format_number(series.times[i] / series.L);
        for (const auto* s : scalars)
            out << ',' << format_number(s->second.mean(row, 0)) << ',' << format_number(s->second.se(row, 0));
        out << '\n';
    }
}

void write_profile_csv(std::ostream& out, const EnsembleSeries& series, std::string_view observable,
                       std::string_view key, std::span<const double> keys) {
    const SeriesStat& s = series.at(observable);
    if (static_cast<std::size_t>(s.mean.cols()) != keys.size())
        throw std::invalid_argument("write_profile_csv: key count does not match observable width");
    out << "t,t_over_L," << key << ",mean,se\n";
    for (std::size_t i = 0; i < series.times.size(); ++i) {
        const std::string t = format_number(series.times[i]) + ',' + format_number(series.times[i] / series.L) + ',';
        for (Eigen::Index k = 0; k < s.mean.cols(); ++k)
            out << t << format_number(keys[static_cast<std::size_t>(k)]) << ','
                << format_number(s.mean(static_cast<Eigen::Index>(i), k)) << ','
                << format_number(s.se(static_cast<Eigen::Index>(i), k)) << '\n';
    }
}

bool CsvTable::has(std::string_view name) const {
    return std::find(header.begin(), header.end(), name) != header.end();
}

std::vector<double> CsvTable::column(std::string_view name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::out_of_range("CSV has no column '" + std::string(name) + "'");
    const auto c = static_cast<std::size_t>(it - header.begin());
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.at(c));
    return out;
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) return cells;
        start = comma + 1;
    }
}

} // namespace

CsvTable read_csv(std::istream& in) {
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    for (auto cell : split(line)) t.header.emplace_back(cell);
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != t.header.size())
            throw std::invalid_argument("CSV line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                                        " cells, header has " + std::to_string(t.header.size()));
        std::vector<double> row;
        row.reserve(cells.size());
        for (auto cell : cells) row.push_back(parse_number(cell));
        t.rows.push_back(std::move(row));
    }
    return t;
}

CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_csv(in);
}

} // namespace skinsim

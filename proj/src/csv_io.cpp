#include "itsc/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "itsc/common.hpp"

namespace itsc::data {

namespace {

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
    double v = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end) {
        throw DataError("csv: row " + std::to_string(row) + ", column " + std::to_string(col) +
                        ": cannot parse \"" + cell + "\" as a number");
    }
    if (!std::isfinite(v)) {
        throw DataError("csv: row " + std::to_string(row) + ", column " + std::to_string(col) +
                        ": non-finite value \"" + cell + "\"");
    }
    return v;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw DataError("csv: cannot format value");
    return std::string(buf, ptr);
}

}  // namespace

Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("csv: cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw DataError("csv: " + path + " is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const auto header = split_row(line);
    if (header.empty() || header[0] != "label") {
        throw DataError("csv: row 1: header must start with \"label\"");
    }
    if (header.size() < 2) throw DataError("csv: row 1: no value columns");

    // Header cells must be exactly c{ch}_t{t} in channel-major order.
    std::size_t channels = 0;
    std::size_t length = 0;
    {
        std::size_t expect_c = 0, expect_t = 0;
        bool length_known = false;
        for (std::size_t i = 1; i < header.size(); ++i) {
            std::size_t c = 0, t = 0;
            const std::string& h = header[i];
            const char* p = h.data();
            const char* e = p + h.size();
            if (p == e || *p != 'c') {
                throw DataError("csv: row 1: bad column name \"" + h + "\"");
            }
            auto r1 = std::from_chars(p + 1, e, c);
            if (r1.ec != std::errc() || r1.ptr == e || *r1.ptr != '_' || r1.ptr + 1 == e ||
                *(r1.ptr + 1) != 't') {
                throw DataError("csv: row 1: bad column name \"" + h + "\"");
            }
            auto r2 = std::from_chars(r1.ptr + 2, e, t);
            if (r2.ec != std::errc() || r2.ptr != e) {
                throw DataError("csv: row 1: bad column name \"" + h + "\"");
            }
            if (c != expect_c || t != expect_t) {
                throw DataError("csv: row 1: column \"" + h + "\" out of order, expected c" +
                                std::to_string(expect_c) + "_t" + std::to_string(expect_t));
            }
            ++expect_t;
            if (length_known && expect_t == length) {
                expect_t = 0;
                ++expect_c;
            } else if (!length_known && i + 1 < header.size() && header[i + 1] == "c1_t0") {
                length = expect_t;
                length_known = true;
                expect_t = 0;
                expect_c = 1;
            }
        }
        if (!length_known) {
            channels = 1;
            length = expect_t;
        } else {
            if (expect_t != 0) {
                throw DataError("csv: row 1: incomplete final channel block");
            }
            channels = expect_c;
        }
    }

    Dataset data;
    data.channel_count = channels;
    data.length = length;

    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_row(line);
        if (cells.size() != header.size()) {
            throw DataError("csv: row " + std::to_string(row) + ": expected " +
                            std::to_string(header.size()) + " cells, got " +
                            std::to_string(cells.size()));
        }
        const double label_value = parse_cell(cells[0], row, 1);
        if (label_value != 0.0 && label_value != 1.0) {
            throw DataError("csv: row " + std::to_string(row) + ": label must be 0 or 1, got " +
                            cells[0]);
        }
        TimeSeriesSample s;
        s.label = label_value == 1.0 ? 1 : 0;
        s.id = "row" + std::to_string(row);
        s.values.resize(channels * length);
        for (std::size_t i = 1; i < cells.size(); ++i) {
            s.values[i - 1] = parse_cell(cells[i], row, i + 1);
        }
        data.samples.push_back(std::move(s));
    }
    if (data.samples.empty()) throw DataError("csv: " + path + " has no data rows");
    validate(data);
    return data;
}

void write_csv(const std::string& path, const Dataset& data) {
    validate(data);
    std::ofstream out(path);
    if (!out) throw DataError("csv: cannot open " + path + " for writing");

    out << "label";
    for (std::size_t c = 0; c < data.channel_count; ++c) {
        for (std::size_t t = 0; t < data.length; ++t) {
            out << ",c" << c << "_t" << t;
        }
    }
    out << '\n';
    for (const auto& s : data.samples) {
        out << s.label;
        for (double v : s.values) out << ',' << format_double(v);
        out << '\n';
    }
    if (!out) throw DataError("csv: write failed for " + path);
}

}  // namespace itsc::data

#pragma once

// CSV artifacts and the per-run result record. Schemas are fixed per
// subcommand: one header line, UTF-8, '.' decimal separator.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ouqv::io {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns)
        : columns_(columns.size()) {
        out_.open(path);
        if (!out_) throw std::runtime_error("csv: cannot open '" + path.string() + "'");
        for (std::size_t q = 0; q < columns.size(); ++q) {
            if (q) out_ << ',';
            out_ << columns[q];
        }
        out_ << '\n';
    }

    // Cells are preformatted strings; use cell() helpers for numbers.
    void row(const std::vector<std::string>& cells) {
        if (cells.size() != columns_)
            throw std::runtime_error("csv: row width does not match header");
        for (std::size_t q = 0; q < cells.size(); ++q) {
            if (q) out_ << ',';
            out_ << cells[q];
        }
        out_ << '\n';
    }

private:
    std::ofstream out_;
    std::size_t columns_;
};

inline std::string cell(double v) { return format_double(v); }
inline std::string cell(std::int64_t v) { return std::to_string(v); }
inline std::string cell(int v) { return std::to_string(v); }
inline std::string cell(const std::string& v) { return v; }

struct MetricRow {
    std::string name;
    double value = 0.0;
    double se = 0.0;
    double reference = 0.0;
    std::string provenance; // mc | quadrature | closed-form
    std::string verdict;    // pass | fail | info
};

struct ResultRecord {
    std::string experiment;
    std::uint64_t config_digest = 0;
    std::vector<MetricRow> rows;

    bool passed() const {
        for (const auto& r : rows)
            if (r.verdict == "fail") return false;
        return true;
    }

    void add(const std::string& name, double value, double se, double reference,
             const std::string& provenance, const std::string& verdict) {
        rows.push_back({name, value, se, reference, provenance, verdict});
    }

    void write_summary(const std::filesystem::path& dir) const {
        CsvWriter w(dir / (experiment + "_summary.csv"),
                    {"experiment", "config_digest", "metric", "value", "se", "reference",
                     "provenance", "verdict"});
        for (const auto& r : rows)
            w.row({experiment, std::to_string(config_digest), r.name, cell(r.value), cell(r.se),
                   cell(r.reference), r.provenance, r.verdict});
    }
};

// Re-parses a summary CSV; used by the round-trip tests.
inline std::vector<MetricRow> read_summary(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("csv: cannot open '" + path.string() + "'");
    std::string line;
    std::getline(in, line); // header
    std::vector<MetricRow> rows;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            cells.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (cells.size() != 8) throw std::runtime_error("csv: malformed summary row");
        MetricRow r;
        r.name = cells[2];
        r.value = std::stod(cells[3]);
        r.se = std::stod(cells[4]);
        r.reference = std::stod(cells[5]);
        r.provenance = cells[6];
        r.verdict = cells[7];
        rows.push_back(std::move(r));
    }
    return rows;
}

} // namespace ouqv::io

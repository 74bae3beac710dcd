#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dromv/empirical.hpp"

namespace dromv {

struct CsvOptions {
    std::vector<int> column_subset;   // 1-based indices into the data columns
    bool percent_to_decimal = false;  // divide numeric cells by 100 (returns files)
};

/// Monthly returns: a date column followed by one numeric column per asset.
struct ReturnsTable {
    std::vector<std::string> dates;
    std::vector<std::string> assets;
    Matrix returns;  // rows align with dates
};

/// Binary-labeled data: a label column (mapped to -1/+1) followed by
/// numeric covariates.
struct LabeledTable {
    std::vector<std::string> covariate_names;
    Vector labels;
    Matrix covariates;
};

namespace detail {

struct RawCsv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline RawCsv read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open: " + path);
    RawCsv raw;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        if (raw.header.empty()) {
            raw.header = std::move(cells);
            std::set<std::string> seen;
            for (const auto& h : raw.header)
                if (!seen.insert(h).second)
                    throw DataError(path + ": duplicate header column '" + h + "'");
        } else {
            if (cells.size() != raw.header.size())
                throw DataError(path + ": row " + std::to_string(lineno) + " has " +
                                std::to_string(cells.size()) + " cells, expected " +
                                std::to_string(raw.header.size()));
            raw.rows.push_back(std::move(cells));
        }
    }
    if (raw.header.empty()) throw DataError(path + ": empty file");
    return raw;
}

inline double parse_cell(const std::string& cell, const std::string& path, int row,
                         const std::string& column) {
    if (cell.empty())
        throw DataError(path + ": blank cell at row " + std::to_string(row) +
                        ", column '" + column + "'");
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(cell, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != cell.size() || !std::isfinite(v))
        throw DataError(path + ": non-numeric cell '" + cell + "' at row " +
                        std::to_string(row) + ", column '" + column + "'");
    return v;
}

inline std::vector<int> resolve_subset(const std::vector<int>& subset, int available,
                                       const std::string& path) {
    std::vector<int> cols;
    if (subset.empty()) {
        for (int i = 1; i <= available; ++i) cols.push_back(i);
    } else {
        for (int c : subset) {
            if (c < 1 || c > available)
                throw DataError(path + ": column subset index " + std::to_string(c) +
                                " out of range (1.." + std::to_string(available) + ")");
            cols.push_back(c);
        }
    }
    return cols;
}

}  // namespace detail

inline ReturnsTable ingest_returns_csv(const std::string& path,
                                       const CsvOptions& options = {}) {
    const auto raw = detail::read_csv(path);
    if (raw.header.size() < 2)
        throw DataError(path + ": need a date column plus at least one asset column");
    const int available = static_cast<int>(raw.header.size()) - 1;
    const auto cols = detail::resolve_subset(options.column_subset, available, path);

    ReturnsTable t;
    for (int c : cols) t.assets.push_back(raw.header[static_cast<std::size_t>(c)]);
    t.returns.resize(static_cast<Eigen::Index>(raw.rows.size()),
                     static_cast<Eigen::Index>(cols.size()));
    for (std::size_t r = 0; r < raw.rows.size(); ++r) {
        const auto& cells = raw.rows[r];
        if (cells[0].empty())
            throw DataError(path + ": blank date at row " + std::to_string(r + 2));
        t.dates.push_back(cells[0]);
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const auto c = static_cast<std::size_t>(cols[j]);
            double v = detail::parse_cell(cells[c], path, static_cast<int>(r + 2),
                                          raw.header[c]);
            if (options.percent_to_decimal) v /= 100.0;
            t.returns(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = v;
        }
    }
    return t;
}

inline LabeledTable ingest_labeled_csv(const std::string& path,
                                       const CsvOptions& options = {}) {
    const auto raw = detail::read_csv(path);
    if (raw.header.size() < 2)
        throw DataError(path + ": need a label column plus at least one covariate");
    const int available = static_cast<int>(raw.header.size()) - 1;
    const auto cols = detail::resolve_subset(options.column_subset, available, path);

    LabeledTable t;
    for (int c : cols) t.covariate_names.push_back(raw.header[static_cast<std::size_t>(c)]);
    t.labels.resize(static_cast<Eigen::Index>(raw.rows.size()));
    t.covariates.resize(static_cast<Eigen::Index>(raw.rows.size()),
                        static_cast<Eigen::Index>(cols.size()));
    for (std::size_t r = 0; r < raw.rows.size(); ++r) {
        const auto& cells = raw.rows[r];
        const std::string& lab = cells[0];
        double y = 0.0;
        if (lab == "M" || lab == "1" || lab == "+1")
            y = 1.0;
        else if (lab == "B" || lab == "0" || lab == "-1")
            y = -1.0;
        else
            throw DataError(path + ": unrecognized label '" + lab + "' at row " +
                            std::to_string(r + 2) + " (expected M/B, 1/0 or +1/-1)");
        t.labels[static_cast<Eigen::Index>(r)] = y;
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const auto c = static_cast<std::size_t>(cols[j]);
            t.covariates(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) =
                detail::parse_cell(cells[c], path, static_cast<int>(r + 2), raw.header[c]);
        }
    }
    return t;
}

/// Rows of the returns table between two date strings, both inclusive.
/// Dates are opaque strings matched exactly; a window that misses the data
/// is a configuration error.
inline EmpiricalDistribution returns_window(const ReturnsTable& t,
                                            const std::string& start,
                                            const std::string& end) {
    Eigen::Index i0 = -1, i1 = -1;
    for (std::size_t i = 0; i < t.dates.size(); ++i) {
        if (t.dates[i] == start) i0 = static_cast<Eigen::Index>(i);
        if (t.dates[i] == end) i1 = static_cast<Eigen::Index>(i);
    }
    if (i0 < 0 || i1 < 0 || i1 < i0)
        throw ConfigError("returns window [" + start + ", " + end +
                          "] not found in the data range " + t.dates.front() + ".." +
                          t.dates.back());
    Matrix m = t.returns.middleRows(i0, i1 - i0 + 1);
    return EmpiricalDistribution(std::move(m));
}

/// Stacks labels and covariates into sample rows [y, z...] for LogisticModel.
inline EmpiricalDistribution labeled_to_distribution(const LabeledTable& t,
                                                     Eigen::Index row_begin,
                                                     Eigen::Index row_end) {
    if (row_begin < 0 || row_end > t.labels.size() || row_begin >= row_end)
        throw ArgumentError("labeled_to_distribution: bad row range");
    Matrix m(row_end - row_begin, 1 + t.covariates.cols());
    for (Eigen::Index i = row_begin; i < row_end; ++i) {
        m(i - row_begin, 0) = t.labels[i];
        m.row(i - row_begin).tail(t.covariates.cols()) = t.covariates.row(i);
    }
    return EmpiricalDistribution(std::move(m));
}

inline EmpiricalDistribution labeled_to_distribution(const LabeledTable& t) {
    return labeled_to_distribution(t, 0, t.labels.size());
}

}  // namespace dromv

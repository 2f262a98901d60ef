#pragma once

// Delimited-text datasets and covariate construction.
//
// Dataset layout: optional '#' comment lines, one header row, then
// `time,y[,extra...]` rows with time indices increasing by exactly 1.

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "garnn/errors.hpp"
#include "garnn/lagnet.hpp"

namespace garnn {

struct Dataset {
    std::vector<long long> time;
    std::vector<double> y;
    std::vector<std::string> extra_names;
    Eigen::MatrixXd extras;  // n x (number of extra columns)
    std::optional<Standardizer> standardizer;

    std::size_t size() const { return y.size(); }
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double parse_number(const std::string& text, std::size_t line_no, std::string_view column) {
    if (text.empty() || text == "NA" || text == "nan")
        throw InvalidInput("line " + std::to_string(line_no) + ": missing value in column '" + std::string(column) + "'");
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size() || errno == ERANGE || !std::isfinite(v))
        throw InvalidInput("line " + std::to_string(line_no) + ": cannot parse '" + text + "' in column '" +
                           std::string(column) + "'");
    return v;
}

}  // namespace detail

inline Dataset parse_series(std::istream& in) {
    Dataset out;
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    std::vector<std::vector<double>> extra_rows;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = detail::trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        auto fields = detail::split_csv(stripped);
        if (header.empty()) {
            header = std::move(fields);
            if (header.size() < 2) throw InvalidInput("line " + std::to_string(line_no) + ": header needs time and y columns");
            out.extra_names.assign(header.begin() + 2, header.end());
            continue;
        }
        if (fields.size() != header.size())
            throw InvalidInput("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                               " fields, found " + std::to_string(fields.size()));
        const double t = detail::parse_number(fields[0], line_no, header[0]);
        if (std::floor(t) != t) throw InvalidInput("line " + std::to_string(line_no) + ": time index must be an integer");
        const auto ti = static_cast<long long>(t);
        if (!out.time.empty() && ti != out.time.back() + 1)
            throw InvalidInput("line " + std::to_string(line_no) + ": gap in time index between " +
                               std::to_string(out.time.back()) + " and " + std::to_string(ti));
        out.time.push_back(ti);
        out.y.push_back(detail::parse_number(fields[1], line_no, header[1]));
        std::vector<double> extra;
        for (std::size_t c = 2; c < fields.size(); ++c) extra.push_back(detail::parse_number(fields[c], line_no, header[c]));
        extra_rows.push_back(std::move(extra));
    }
    if (header.empty()) throw InvalidInput("dataset has no header row");
    if (out.y.empty()) throw InvalidInput("dataset has no observations");
    out.extras.resize(static_cast<Eigen::Index>(out.y.size()), static_cast<Eigen::Index>(out.extra_names.size()));
    for (std::size_t r = 0; r < extra_rows.size(); ++r)
        for (std::size_t c = 0; c < extra_rows[r].size(); ++c)
            out.extras(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = extra_rows[r][c];
    try {
        out.standardizer = standardize(out.y).first;
    } catch (const InvalidInput&) {
        out.standardizer.reset();
    }
    return out;
}

inline Dataset load_series(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open dataset '" + path + "'");
    return parse_series(in);
}

inline void write_series(std::ostream& out, const std::vector<long long>& time, const std::vector<double>& y) {
    out << "time,y\n" << std::setprecision(17);
    for (std::size_t t = 0; t < y.size(); ++t) out << time[t] << ',' << y[t] << '\n';
}

// ---------------------------------------------------------------------------
// Covariates

/// Deterministic regressors. Columns, in order: intercept, then cos/sin for
/// each harmonic period, then the trend t / trend_divisor.
struct CovariateRecipe {
    bool intercept = true;
    std::vector<double> harmonic_periods{12.0, 6.0};
    bool trend = true;
    double trend_divisor = 1000.0;
    /// Evaluate harmonics on t / trend_divisor instead of the raw index.
    bool harmonic_time_scaled = false;

    int column_count() const {
        return (intercept ? 1 : 0) + 2 * static_cast<int>(harmonic_periods.size()) + (trend ? 1 : 0);
    }

    std::vector<std::string> column_names() const {
        std::vector<std::string> names;
        if (intercept) names.emplace_back("intercept");
        for (double period : harmonic_periods) {
            std::ostringstream p;
            p << period;
            names.push_back("cos" + p.str());
            names.push_back("sin" + p.str());
        }
        if (trend) names.emplace_back("trend");
        return names;
    }
};

inline Eigen::MatrixXd build_covariates(const std::vector<long long>& time, const CovariateRecipe& recipe) {
    if (time.empty()) throw InvalidInput("build_covariates: need at least one time point");
    if (!(recipe.trend_divisor > 0.0)) throw InvalidInput("trend divisor must be positive");
    for (double period : recipe.harmonic_periods)
        if (!(period > 0.0)) throw InvalidInput("harmonic periods must be positive");
    Eigen::MatrixXd X(static_cast<Eigen::Index>(time.size()), recipe.column_count());
    for (std::size_t r = 0; r < time.size(); ++r) {
        const auto row = static_cast<Eigen::Index>(r);
        const double t = static_cast<double>(time[r]);
        const double scaled = t / recipe.trend_divisor;
        const double harmonic_t = recipe.harmonic_time_scaled ? scaled : t;
        Eigen::Index c = 0;
        if (recipe.intercept) X(row, c++) = 1.0;
        for (double period : recipe.harmonic_periods) {
            const double angle = 2.0 * std::numbers::pi * harmonic_t / period;
            X(row, c++) = std::cos(angle);
            X(row, c++) = std::sin(angle);
        }
        if (recipe.trend) X(row, c++) = scaled;
    }
    return X;
}

/// Times 1..n.
inline Eigen::MatrixXd build_covariates(std::size_t n, const CovariateRecipe& recipe) {
    std::vector<long long> time(n);
    for (std::size_t t = 0; t < n; ++t) time[t] = static_cast<long long>(t) + 1;
    return build_covariates(time, recipe);
}

}  // namespace garnn

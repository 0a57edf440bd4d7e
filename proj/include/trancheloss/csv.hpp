// Portfolio and results files. Portfolios are CSV with the header
// id,f,p,r,w1[,w2,...,wm]; the factor dimension is inferred from the header.
// Results are one flat CSV schema shared by every pricing method.

#pragma once

#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "trancheloss/errors.hpp"
#include "trancheloss/model.hpp"

namespace trancheloss {

namespace detail {

/// Shortest decimal representation that parses back to the same double.
inline std::string format_double(double value) {
    char buffer[32];
    const auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, end);
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t begin = 0;
    for (;;) {
        const std::size_t comma = line.find(',', begin);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(begin));
            return fields;
        }
        fields.push_back(line.substr(begin, comma - begin));
        begin = comma + 1;
    }
}

inline double parse_double(std::string_view field, std::size_t line_no, std::string_view what) {
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last)
        throw ParseError("portfolio line " + std::to_string(line_no) + ": cannot parse " +
                         std::string(what) + " from '" + std::string(field) + "'");
    return value;
}

} // namespace detail

inline Portfolio read_portfolio_csv(std::istream& in, const ValidateOptions& options = {}) {
    std::string line;
    std::size_t line_no = 0;

    // header determines the factor dimension
    std::size_t factors = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.rfind("\xef\xbb\xbf", 0) == 0)
            line.erase(0, 3);
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        const auto fields = detail::split_fields(line);
        if (fields.size() < 5 || fields[0] != "id" || fields[1] != "f" || fields[2] != "p" ||
            fields[3] != "r")
            throw ParseError("portfolio line " + std::to_string(line_no) +
                             ": expected header id,f,p,r,w1[,w2,...]");
        factors = fields.size() - 4;
        break;
    }
    if (factors == 0)
        throw EmptyPortfolio("portfolio file has no content");

    std::vector<Loan> loans;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        const auto fields = detail::split_fields(line);
        if (fields.size() != factors + 4)
            throw ParseError("portfolio line " + std::to_string(line_no) + ": expected " +
                             std::to_string(factors + 4) + " fields, got " +
                             std::to_string(fields.size()));
        Loan loan;
        loan.id = std::string(fields[0]);
        loan.fraction = detail::parse_double(fields[1], line_no, "f");
        loan.default_prob = detail::parse_double(fields[2], line_no, "p");
        loan.recovery = detail::parse_double(fields[3], line_no, "r");
        loan.loadings.resize(factors);
        for (std::size_t k = 0; k < factors; ++k)
            loan.loadings[k] =
                detail::parse_double(fields[4 + k], line_no, "w" + std::to_string(k + 1));
        loans.push_back(std::move(loan));
    }
    return validate_portfolio(std::move(loans), factors, options);
}

inline Portfolio read_portfolio_file(const std::filesystem::path& path,
                                     const ValidateOptions& options = {}) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open portfolio file '" + path.string() + "'");
    return read_portfolio_csv(in, options);
}

inline void write_portfolio_csv(const Portfolio& portfolio, std::ostream& out) {
    out << "id,f,p,r";
    for (std::size_t k = 1; k <= portfolio.factors; ++k)
        out << ",w" << k;
    out << '\n';
    for (const Loan& loan : portfolio.loans) {
        out << loan.id << ',' << detail::format_double(loan.fraction) << ','
            << detail::format_double(loan.default_prob) << ','
            << detail::format_double(loan.recovery);
        for (double w : loan.loadings)
            out << ',' << detail::format_double(w);
        out << '\n';
    }
}

/// One row of the results CSV. Fields that do not apply to the method that
/// produced the row stay empty in the file.
struct ResultRow {
    double attach = 0.0;
    double detach = 0.0;
    std::string method;
    std::optional<std::size_t> order;
    std::optional<std::size_t> nodes;
    double value = 0.0;
    std::optional<double> std_error;
    std::optional<double> runtime_ms;
    std::optional<std::size_t> floored_points;
};

inline void write_results_csv(std::span<const ResultRow> rows, std::ostream& out) {
    out << "attach,detach,method,order,nodes,value,std_error,runtime_ms,floored_points\n";
    for (const ResultRow& row : rows) {
        out << detail::format_double(row.attach) << ',' << detail::format_double(row.detach) << ','
            << row.method << ',';
        if (row.order)
            out << *row.order;
        out << ',';
        if (row.nodes)
            out << *row.nodes;
        out << ',' << detail::format_double(row.value) << ',';
        if (row.std_error)
            out << detail::format_double(*row.std_error);
        out << ',';
        if (row.runtime_ms)
            out << detail::format_double(*row.runtime_ms);
        out << ',';
        if (row.floored_points)
            out << *row.floored_points;
        out << '\n';
    }
}

} // namespace trancheloss

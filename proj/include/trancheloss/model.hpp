// Domain types: loans, portfolios, tranches, plus validation and the
// built-in experiment presets.

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "trancheloss/errors.hpp"

namespace trancheloss {

/// One obligor. `fraction` is the loan notional as a fraction of the whole
/// portfolio notional; `loadings` are the sensitivities to the systematic
/// factors and must satisfy sum of squares < 1 so the idiosyncratic
/// coefficient sqrt(1 - |w|^2) stays real and positive.
struct Loan {
    std::string id;
    double fraction = 0.0;     // (0, 1]
    double default_prob = 0.0; // (0, 1)
    double recovery = 0.0;     // [0, 1)
    std::vector<double> loadings;
};

/// Fraction of the portfolio notional lost if the loan defaults: f * (1 - r).
inline double effective_exposure(const Loan& loan) {
    return loan.fraction * (1.0 - loan.recovery);
}

/// Validated collection of loans sharing a factor dimension. Immutable after
/// validation; safe to share across threads.
struct Portfolio {
    std::vector<Loan> loans;
    std::size_t factors = 1;

    std::size_t size() const { return loans.size(); }
};

/// |sum of notional fractions - 1| must stay within this bound unless
/// partial-notional portfolios are explicitly allowed.
inline constexpr double fraction_sum_tolerance = 1e-9;

struct ValidateOptions {
    // when set, the notional fractions only need to sum to at most one
    bool allow_partial_notional = false;
};

inline Portfolio validate_portfolio(std::vector<Loan> loans, std::size_t factors,
                                    const ValidateOptions& options = {}) {
    if (loans.empty())
        throw EmptyPortfolio("portfolio has no loans");
    if (factors == 0)
        throw FieldOutOfRange("factor dimension must be positive");

    double fraction_sum = 0.0;
    for (const Loan& loan : loans) {
        if (!(loan.fraction > 0.0 && loan.fraction <= 1.0))
            throw FieldOutOfRange("loan '" + loan.id + "': notional fraction " +
                                  std::to_string(loan.fraction) + " outside (0, 1]");
        if (!(loan.default_prob > 0.0 && loan.default_prob < 1.0))
            throw FieldOutOfRange("loan '" + loan.id + "': default probability " +
                                  std::to_string(loan.default_prob) + " outside (0, 1)");
        if (!(loan.recovery >= 0.0 && loan.recovery < 1.0))
            throw FieldOutOfRange("loan '" + loan.id + "': recovery rate " +
                                  std::to_string(loan.recovery) + " outside [0, 1)");
        if (loan.loadings.size() != factors)
            throw FieldOutOfRange("loan '" + loan.id + "': expected " + std::to_string(factors) +
                                  " factor loadings, got " + std::to_string(loan.loadings.size()));
        double norm2 = 0.0;
        for (double w : loan.loadings) {
            if (!std::isfinite(w))
                throw FieldOutOfRange("loan '" + loan.id + "': non-finite factor loading");
            norm2 += w * w;
        }
        if (!(norm2 < 1.0))
            throw LoadingNormTooLarge("loan '" + loan.id + "': squared loading norm " +
                                      std::to_string(norm2) + " must be strictly below 1");
        fraction_sum += loan.fraction;
    }

    const bool sum_ok = options.allow_partial_notional
                            ? fraction_sum <= 1.0 + fraction_sum_tolerance
                            : std::abs(fraction_sum - 1.0) <= fraction_sum_tolerance;
    if (!sum_ok)
        throw FractionSumMismatch("notional fractions sum to " + std::to_string(fraction_sum) +
                                  (options.allow_partial_notional ? ", above 1" : ", not 1"));

    Portfolio portfolio;
    portfolio.loans = std::move(loans);
    portfolio.factors = factors;
    return portfolio;
}

/// Loss slice between an attachment and a detachment point, both expressed as
/// fractions of the portfolio notional. Construction enforces 0 <= a < b <= 1.
class Tranche {
public:
    Tranche(double attach, double detach) : attach_(attach), detach_(detach) {
        if (!(attach >= 0.0 && attach < detach && detach <= 1.0))
            throw FieldOutOfRange("tranche (" + std::to_string(attach) + ", " +
                                  std::to_string(detach) + ") violates 0 <= a < b <= 1");
    }

    double attach() const { return attach_; }
    double detach() const { return detach_; }
    double width() const { return detach_ - attach_; }

private:
    double attach_;
    double detach_;
};

/// Names accepted by preset_portfolio.
inline std::span<const std::string_view> preset_names() {
    static constexpr std::string_view names[] = {"paper125", "paper25", "paper30", "paper50",
                                                 "paper100"};
    return names;
}

/// Built-in single-factor test portfolios: n equally weighted loans with
/// default probabilities ramping 0.015 -> 0.065 and recovery rates and factor
/// loadings both ramping 0.5 -> 0.4 across the pool. paper125 is the
/// 125-name index-sized pool; the others shrink the same ramp to n names.
inline Portfolio preset_portfolio(std::string_view name) {
    std::size_t n = 0;
    if (name == "paper125")
        n = 125;
    else if (name == "paper25")
        n = 25;
    else if (name == "paper30")
        n = 30;
    else if (name == "paper50")
        n = 50;
    else if (name == "paper100")
        n = 100;
    else
        throw UnknownPreset("unknown preset '" + std::string(name) +
                            "'; run the presets command for the list");

    std::vector<Loan> loans;
    loans.reserve(n);
    for (std::size_t i = 1; i <= n; ++i) {
        const double ramp = static_cast<double>(i - 1) / static_cast<double>(n - 1);
        Loan loan;
        loan.id = "loan_" + std::to_string(i);
        loan.fraction = 1.0 / static_cast<double>(n);
        loan.default_prob = 0.015 + 0.05 * ramp;
        loan.recovery = 0.5 - 0.1 * ramp;
        loan.loadings = {0.5 - 0.1 * ramp};
        loans.push_back(std::move(loan));
    }
    return validate_portfolio(std::move(loans), 1);
}

/// First n loans of a portfolio with the notional fractions rescaled to sum
/// to one again. Used to build small test pools out of the presets.
inline Portfolio truncate_portfolio(const Portfolio& portfolio, std::size_t n) {
    if (n == 0 || n > portfolio.size())
        throw FieldOutOfRange("truncate_portfolio: cannot keep " + std::to_string(n) + " of " +
                              std::to_string(portfolio.size()) + " loans");
    std::vector<Loan> loans(portfolio.loans.begin(),
                            portfolio.loans.begin() + static_cast<std::ptrdiff_t>(n));
    double sum = 0.0;
    for (const Loan& loan : loans)
        sum += loan.fraction;
    for (Loan& loan : loans)
        loan.fraction /= sum;
    return validate_portfolio(std::move(loans), portfolio.factors);
}

} // namespace trancheloss

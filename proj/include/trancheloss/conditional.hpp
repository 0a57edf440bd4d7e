// Everything conditional on a point of the systematic factors: per-loan
// default probabilities, moments and cumulants of the conditional loss, and
// the Hermite-series coefficients of the normalized conditional loss.

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "trancheloss/errors.hpp"
#include "trancheloss/gauss.hpp"
#include "trancheloss/model.hpp"

namespace trancheloss {

/// Highest cumulant / expansion order supported. Hermite series of Bernoulli
/// sums are asymptotic rather than convergent, so pushing the order higher
/// buys noise, not accuracy.
inline constexpr std::size_t max_cumulant_order = 10;

namespace detail {

// binomial(n, k) for n, k < max_cumulant_order
inline constexpr auto binomial_table = [] {
    std::array<std::array<double, max_cumulant_order>, max_cumulant_order> c{};
    for (std::size_t n = 0; n < max_cumulant_order; ++n) {
        c[n][0] = 1.0;
        for (std::size_t k = 1; k <= n; ++k)
            c[n][k] = c[n - 1][k - 1] + ((k <= n - 1) ? c[n - 1][k] : 0.0);
    }
    return c;
}();

inline constexpr auto factorial_table = [] {
    std::array<double, max_cumulant_order + 1> f{};
    f[0] = 1.0;
    for (std::size_t n = 1; n <= max_cumulant_order; ++n)
        f[n] = f[n - 1] * static_cast<double>(n);
    return f;
}();

// Cumulants kappa_1..kappa_{out.size()} of a Bernoulli(p) indicator, from the
// raw-moment recursion kappa_n = p - p * sum_{j<n} C(n-1, j-1) kappa_j (all
// raw moments of an indicator equal p).
inline void bernoulli_cumulants(double p, std::span<double> out) {
    const std::size_t n_max = out.size();
    for (std::size_t n = 1; n <= n_max; ++n) {
        double s = 0.0;
        for (std::size_t j = 1; j < n; ++j)
            s += binomial_table[n - 1][j - 1] * out[j - 1];
        out[n - 1] = p - p * s;
    }
}

// Coefficient rows of He_0..He_n in the monomial basis; row k has k+1 entries.
inline std::vector<std::vector<double>> hermite_coefficient_rows(std::size_t n) {
    std::vector<std::vector<double>> rows(n + 1);
    rows[0] = {1.0};
    if (n == 0)
        return rows;
    rows[1] = {0.0, 1.0};
    for (std::size_t k = 1; k < n; ++k) {
        std::vector<double> next(k + 2, 0.0);
        for (std::size_t j = 0; j <= k; ++j)
            next[j + 1] += rows[k][j]; // x * He_k
        for (std::size_t j = 0; j < k; ++j)
            next[j] -= static_cast<double>(k) * rows[k - 1][j]; // - k * He_{k-1}
        rows[k + 1] = std::move(next);
    }
    return rows;
}

} // namespace detail

/// Probability that the loan defaults given the systematic factors:
/// Phi((Phi^{-1}(p) - w.phi) / sqrt(1 - |w|^2)). Equals p when the loan has
/// no systematic exposure, and integrates back to p over the factor measure.
inline double conditional_default_prob(const Loan& loan, std::span<const double> factors) {
    if (factors.size() != loan.loadings.size())
        throw DimensionMismatch("conditional_default_prob: factor point has dimension " +
                                std::to_string(factors.size()) + ", loan '" + loan.id + "' has " +
                                std::to_string(loan.loadings.size()) + " loadings");
    double dot = 0.0;
    double norm2 = 0.0;
    for (std::size_t k = 0; k < factors.size(); ++k) {
        dot += loan.loadings[k] * factors[k];
        norm2 += loan.loadings[k] * loan.loadings[k];
    }
    const double threshold = std_normal_inv_cdf(loan.default_prob);
    return std_normal_cdf((threshold - dot) / std::sqrt(1.0 - norm2));
}

/// Per-loan terms of a validated portfolio in flat arrays, with the default
/// thresholds precomputed. This is the form the pricing and simulation loops
/// iterate over; it never mutates after construction.
class PortfolioTerms {
public:
    explicit PortfolioTerms(const Portfolio& portfolio)
        : factors_(portfolio.factors),
          count_(portfolio.size()),
          exposure_(count_),
          threshold_(count_),
          idio_(count_),
          idio_inv_(count_),
          loadings_(count_ * portfolio.factors) {
        for (std::size_t i = 0; i < count_; ++i) {
            const Loan& loan = portfolio.loans[i];
            exposure_[i] = effective_exposure(loan);
            threshold_[i] = std_normal_inv_cdf(loan.default_prob);
            double norm2 = 0.0;
            for (std::size_t k = 0; k < factors_; ++k) {
                loadings_[i * factors_ + k] = loan.loadings[k];
                norm2 += loan.loadings[k] * loan.loadings[k];
            }
            idio_[i] = std::sqrt(1.0 - norm2);
            idio_inv_[i] = 1.0 / idio_[i];
        }
    }

    std::size_t size() const { return count_; }
    std::size_t factors() const { return factors_; }
    double exposure(std::size_t i) const { return exposure_[i]; }
    double threshold(std::size_t i) const { return threshold_[i]; }
    double idio_scale(std::size_t i) const { return idio_[i]; }
    std::span<const double> loadings(std::size_t i) const {
        return {loadings_.data() + i * factors_, factors_};
    }

    double default_prob(std::size_t i, std::span<const double> phi) const {
        double dot = 0.0;
        for (std::size_t k = 0; k < factors_; ++k)
            dot += loadings_[i * factors_ + k] * phi[k];
        return std_normal_cdf((threshold_[i] - dot) * idio_inv_[i]);
    }

    // mean and variance of the conditional loss at phi
    std::pair<double, double> mean_variance(std::span<const double> phi) const {
        double mean = 0.0;
        double variance = 0.0;
        for (std::size_t i = 0; i < count_; ++i) {
            const double p = default_prob(i, phi);
            mean += exposure_[i] * p;
            variance += exposure_[i] * exposure_[i] * p * (1.0 - p);
        }
        return {mean, variance};
    }

    // cumulants kappa_1..kappa_{out.size()} of the conditional loss at phi;
    // cumulants add across the conditionally independent loans, each loan
    // contributing e^j kappa_j of its Bernoulli indicator
    void cumulants(std::span<const double> phi, std::span<double> out) const {
        if (out.size() > max_cumulant_order)
            throw OrderTooLarge("cumulants: order " + std::to_string(out.size()) + " exceeds " +
                                std::to_string(max_cumulant_order));
        std::array<double, max_cumulant_order> bern{};
        for (double& k : out)
            k = 0.0;
        for (std::size_t i = 0; i < count_; ++i) {
            const double p = default_prob(i, phi);
            detail::bernoulli_cumulants(p, std::span<double>(bern.data(), out.size()));
            double e_pow = 1.0;
            for (std::size_t j = 0; j < out.size(); ++j) {
                e_pow *= exposure_[i];
                out[j] += e_pow * bern[j];
            }
        }
    }

private:
    std::size_t factors_;
    std::size_t count_;
    std::vector<double> exposure_;
    std::vector<double> threshold_;
    std::vector<double> idio_;
    std::vector<double> idio_inv_;
    std::vector<double> loadings_;
};

inline std::pair<double, double> conditional_mean_variance(const Portfolio& portfolio,
                                                           std::span<const double> phi) {
    if (phi.size() != portfolio.factors)
        throw DimensionMismatch("conditional_mean_variance: factor point dimension mismatch");
    return PortfolioTerms(portfolio).mean_variance(phi);
}

/// Cumulants kappa_1..kappa_n_max of the conditional loss at phi.
inline std::vector<double> conditional_cumulants(const Portfolio& portfolio,
                                                 std::span<const double> phi, std::size_t n_max) {
    if (n_max < 1 || n_max > max_cumulant_order)
        throw OrderTooLarge("conditional_cumulants: order " + std::to_string(n_max) +
                            " outside [1, " + std::to_string(max_cumulant_order) + "]");
    if (phi.size() != portfolio.factors)
        throw DimensionMismatch("conditional_cumulants: factor point dimension mismatch");
    std::vector<double> kappa(n_max);
    PortfolioTerms(portfolio).cumulants(phi, kappa);
    return kappa;
}

/// Coefficients c_0..c_N of the Hermite expansion of the normalized loss
/// (L - kappa_1) / sqrt(kappa_2), from its cumulants kappa_1..kappa_N:
/// c_n = E[He_n(normalized L)] / n!. Normalization makes c_0 = 1 and
/// c_1 = c_2 = 0 identically; c_3 = skewness/6, c_4 = excess kurtosis/24.
inline std::vector<double> charlier_coefficients(std::span<const double> cumulants) {
    const std::size_t n = cumulants.size();
    if (n < 2)
        throw DegenerateVariance("charlier_coefficients: need kappa_1 and kappa_2");
    if (n > max_cumulant_order)
        throw OrderTooLarge("charlier_coefficients: order " + std::to_string(n) + " exceeds " +
                            std::to_string(max_cumulant_order));
    const double variance = cumulants[1];
    if (!(variance > 0.0))
        throw DegenerateVariance("charlier_coefficients: conditional variance " +
                                 std::to_string(variance) + " is not positive");

    // cumulants of the normalized loss: the first two are 0 and 1 by
    // construction, the rest scale by sigma^-j
    const double sigma = std::sqrt(variance);
    std::vector<double> scaled(n + 1, 0.0); // scaled[j] = normalized kappa_j
    scaled[2] = 1.0;
    double sigma_pow = sigma * sigma;
    for (std::size_t j = 3; j <= n; ++j) {
        sigma_pow *= sigma;
        scaled[j] = cumulants[j - 1] / sigma_pow;
    }

    // central moments of the normalized loss from its cumulants
    std::vector<double> moments(n + 1, 0.0);
    moments[0] = 1.0;
    for (std::size_t j = 1; j <= n; ++j) {
        double s = 0.0;
        for (std::size_t k = 1; k <= j; ++k)
            s += detail::binomial_table[j - 1][k - 1] * scaled[k] * moments[j - k];
        moments[j] = s;
    }

    // c_k = E[He_k] / k! via the monomial coefficients of He_k
    const auto rows = detail::hermite_coefficient_rows(n);
    std::vector<double> c(n + 1, 0.0);
    for (std::size_t k = 0; k <= n; ++k) {
        double expectation = 0.0;
        for (std::size_t j = 0; j <= k; ++j)
            expectation += rows[k][j] * moments[j];
        c[k] = expectation / detail::factorial_table[k];
    }
    return c;
}

/// Mean, variance, cumulants and Hermite coefficients of the conditional loss
/// at one factor point. Throws DegenerateVariance when the conditional loss
/// is (numerically) deterministic; pricing handles that case separately.
struct ConditionalLossStats {
    double mean = 0.0;
    double variance = 0.0;
    std::vector<double> cumulants; // kappa_1..kappa_N
    std::vector<double> charlier;  // c_0..c_N
};

inline ConditionalLossStats conditional_loss_stats(const Portfolio& portfolio,
                                                   std::span<const double> phi,
                                                   std::size_t n_max) {
    ConditionalLossStats stats;
    stats.cumulants = conditional_cumulants(portfolio, phi, n_max);
    stats.mean = stats.cumulants[0];
    stats.variance = stats.cumulants.size() > 1 ? stats.cumulants[1] : 0.0;
    stats.charlier = charlier_coefficients(stats.cumulants);
    return stats;
}

} // namespace trancheloss

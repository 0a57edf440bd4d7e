// Semi-analytic expected tranche loss: the inner integral over the
// conditional loss is in closed form (plain Gaussian, or Gaussian times a
// Hermite-polynomial correction series), the outer integral over the
// systematic factors is Gauss-Hermite quadrature.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "trancheloss/conditional.hpp"
#include "trancheloss/errors.hpp"
#include "trancheloss/gauss.hpp"
#include "trancheloss/model.hpp"

namespace trancheloss {

struct PricerConfig {
    /// Expansion order N of the inner density; 1 means the plain Gaussian
    /// (central-limit) density, higher orders add Hermite correction terms
    /// built from the conditional cumulants up to order N.
    std::size_t expansion_order = 5;
    /// Gauss-Hermite nodes per systematic factor.
    std::size_t nodes_per_factor = 64;
    /// Conditional standard deviations at or below this floor are treated as
    /// zero and the tranche profile of the conditional mean is used instead.
    double sigma_floor = 1e-12;
};

namespace detail {

inline void validate(const PricerConfig& cfg) {
    if (cfg.expansion_order < 1 || cfg.expansion_order > max_cumulant_order)
        throw InvalidConfig("expansion order " + std::to_string(cfg.expansion_order) +
                            " outside [1, " + std::to_string(max_cumulant_order) + "]");
    if (cfg.nodes_per_factor < 1 || cfg.nodes_per_factor > max_quadrature_order)
        throw InvalidConfig("nodes per factor " + std::to_string(cfg.nodes_per_factor) +
                            " outside [1, " + std::to_string(max_quadrature_order) + "]");
    if (!(cfg.sigma_floor > 0.0 && cfg.sigma_floor <= 1e-6))
        throw InvalidConfig("sigma floor must lie in (0, 1e-6]");
}

} // namespace detail

/// Expected tranche loss plus method diagnostics.
struct PriceResult {
    double value = 0.0;        // clamped to [0, 1]
    std::string method;        // "gaussian", "hermite-N", "mc", "exact"
    double raw_value = 0.0;    // quadrature result before clamping
    std::size_t grid_points = 0;
    std::size_t floored_points = 0; // factor points hit by the sigma floor
    double runtime_ms = 0.0;
};

/// Fraction of the tranche consumed by portfolio loss x:
/// min(b - a, max(x - a, 0)) / (b - a). Clamps outside [0, 1] inputs.
inline double tranche_profile(const Tranche& t, double x) {
    return std::min(t.width(), std::max(x - t.attach(), 0.0)) / t.width();
}

namespace detail {

// E[max(X - h, 0)] for X ~ N(mean, sd^2), sd > 0
inline double normal_call(double mean, double sd, double h) {
    const double d = (mean - h) / sd;
    return (mean - h) * std_normal_cdf(d) + sd * std_normal_pdf(d);
}

// E[max(X - h, 0)] when X has density
//   sum_j c_j He_j((x - mean)/sd) phi((x - mean)/sd) / sd.
// With z = (h - mean)/sd, the tail integrals reduce through
//   int_z^inf He_j(u) phi(u) du = He_{j-1}(z) phi(z)          (j >= 1)
//   u He_j(u) = He_{j+1}(u) + j He_{j-1}(u)
// so every term is a compact combination of He values at z.
inline double hermite_call(double mean, double sd, std::span<const double> c, double h) {
    const double z = (h - mean) / sd;
    const double pdf = std_normal_pdf(z);
    const double tail = std_normal_cdf(-z);

    // j = 0 term is the plain Gaussian call
    double call = c[0] * ((mean - h) * tail + sd * pdf);
    if (c.size() <= 1)
        return call;

    // He_0..He_N at z
    const std::size_t n = c.size() - 1;
    std::vector<double> he(n + 1);
    he[0] = 1.0;
    he[1] = z;
    for (std::size_t j = 1; j < n; ++j)
        he[j + 1] = z * he[j] - static_cast<double>(j) * he[j - 1];

    for (std::size_t j = 1; j <= n; ++j) {
        const double tail_j = he[j - 1] * pdf; // int_z^inf He_j phi
        const double first_moment_j =          // int_z^inf u He_j phi
            he[j] * pdf + static_cast<double>(j) * (j == 1 ? tail : he[j - 2] * pdf);
        call += c[j] * ((mean - h) * tail_j + sd * first_moment_j);
    }
    return call;
}

} // namespace detail

/// Expected tranche loss when the conditional loss is N(mean, sd^2), via the
/// call-spread decomposition Tl_{a,b}(x) = (max(x-a,0) - max(x-b,0))/(b-a).
/// Falls back to the tranche profile of the mean when sd is at or below the
/// floor (the conditional loss is then effectively deterministic).
inline double inner_gaussian(const Tranche& t, double mean, double sd,
                             double sigma_floor = 1e-12) {
    if (sd <= sigma_floor)
        return tranche_profile(t, mean);
    return (detail::normal_call(mean, sd, t.attach()) - detail::normal_call(mean, sd, t.detach())) /
           t.width();
}

/// Expected tranche loss under the Hermite-corrected density with
/// coefficients c_0..c_N. The corrected density can dip below zero, so the
/// value may fall slightly outside [0, 1]; aggregation clamps only the final
/// quadrature total.
inline double inner_hermite(const Tranche& t, double mean, double sd, std::span<const double> c,
                            double sigma_floor = 1e-12) {
    if (c.empty())
        throw InvalidConfig("inner_hermite: coefficient list is empty");
    if (sd <= sigma_floor)
        throw DegenerateVariance("inner_hermite: sd " + std::to_string(sd) +
                                 " at or below the floor; use the tranche profile instead");
    return (detail::hermite_call(mean, sd, c, t.attach()) -
            detail::hermite_call(mean, sd, c, t.detach())) /
           t.width();
}

namespace detail {

// Runs body(begin, end) over [0, count) split across threads when the work
// is big enough. Exceptions from workers are rethrown on the calling thread.
template <class Body>
void parallel_for(std::size_t count, std::size_t serial_cutoff, const Body& body) {
    const unsigned hw = std::thread::hardware_concurrency();
    if (hw <= 1 || count <= serial_cutoff) {
        body(0, count);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(hw, (count + serial_cutoff - 1) / serial_cutoff);
    const std::size_t stride = (count + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * stride;
        const std::size_t end = std::min(count, begin + stride);
        if (begin >= end)
            break;
        pool.emplace_back([&, begin, end] {
            try {
                body(begin, end);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
            }
        });
    }
    for (std::thread& th : pool)
        th.join();
    if (failure)
        std::rethrow_exception(failure);
}

} // namespace detail

/// Prices several tranches over one shared factor grid; the conditional
/// statistics at each grid point are computed once and reused across the
/// tranches. Per-point work runs in parallel, the quadrature reduction is
/// serial in grid order, so results are deterministic for a fixed config.
inline std::vector<PriceResult> price_tranches(const Portfolio& portfolio,
                                               std::span<const Tranche> tranches,
                                               const PricerConfig& cfg = {}) {
    detail::validate(cfg);
    const auto start = std::chrono::steady_clock::now();

    const QuadratureRule rule = gauss_hermite_rule(cfg.nodes_per_factor);
    const FactorGrid grid = tensor_grid(rule, portfolio.factors);
    const PortfolioTerms terms(portfolio);
    const std::size_t order = cfg.expansion_order;
    const std::size_t coeff_count = order + 1;

    std::vector<detail::NeumaierSum> totals(tranches.size());
    std::size_t floored = 0;

    const std::size_t chunk_size = 16384;
    std::vector<double> means(std::min(chunk_size, grid.size()));
    std::vector<double> sds(means.size());
    std::vector<std::uint8_t> is_floored(means.size());
    std::vector<double> coeffs(order >= 2 ? means.size() * coeff_count : 0);

    for (std::size_t chunk_begin = 0; chunk_begin < grid.size(); chunk_begin += chunk_size) {
        const std::size_t chunk = std::min(chunk_size, grid.size() - chunk_begin);

        detail::parallel_for(chunk, 2048, [&](std::size_t begin, std::size_t end) {
            std::vector<double> kappa(order);
            for (std::size_t local = begin; local < end; ++local) {
                const auto phi = grid.point(chunk_begin + local);
                if (order == 1) {
                    const auto [mean, variance] = terms.mean_variance(phi);
                    means[local] = mean;
                    sds[local] = std::sqrt(std::max(variance, 0.0));
                } else {
                    terms.cumulants(phi, kappa);
                    means[local] = kappa[0];
                    sds[local] = std::sqrt(std::max(kappa[1], 0.0));
                }
                is_floored[local] = sds[local] <= cfg.sigma_floor;
                if (order >= 2 && !is_floored[local]) {
                    const auto c = charlier_coefficients(kappa);
                    std::copy(c.begin(), c.end(), coeffs.begin() + local * coeff_count);
                }
            }
        });

        for (std::size_t local = 0; local < chunk; ++local) {
            const double weight = grid.weights[chunk_begin + local];
            if (is_floored[local])
                ++floored;
            for (std::size_t t = 0; t < tranches.size(); ++t) {
                double inner;
                if (is_floored[local])
                    inner = tranche_profile(tranches[t], means[local]);
                else if (order == 1)
                    inner = inner_gaussian(tranches[t], means[local], sds[local], cfg.sigma_floor);
                else
                    inner = inner_hermite(
                        tranches[t], means[local], sds[local],
                        std::span<const double>(coeffs.data() + local * coeff_count, coeff_count),
                        cfg.sigma_floor);
                totals[t].add(weight * inner);
            }
        }
    }

    const auto elapsed = std::chrono::duration<double, std::milli>(
        std::chrono::steady_clock::now() - start);
    std::vector<PriceResult> results(tranches.size());
    for (std::size_t t = 0; t < tranches.size(); ++t) {
        PriceResult& res = results[t];
        res.raw_value = totals[t].total();
        res.value = std::clamp(res.raw_value, 0.0, 1.0);
        res.method = order == 1 ? "gaussian" : "hermite-" + std::to_string(order);
        res.grid_points = grid.size();
        res.floored_points = floored;
        res.runtime_ms = elapsed.count();
    }
    return results;
}

/// Expected loss of one tranche.
inline PriceResult price_tranche(const Portfolio& portfolio, const Tranche& tranche,
                                 const PricerConfig& cfg = {}) {
    return price_tranches(portfolio, std::span<const Tranche>(&tranche, 1), cfg)[0];
}

/// Expected losses of the base tranches (0, d) for a strictly increasing list
/// of detachment points, sharing the conditional statistics across tranches.
inline std::vector<PriceResult> price_base_curve(const Portfolio& portfolio,
                                                 std::span<const double> detachments,
                                                 const PricerConfig& cfg = {}) {
    if (detachments.empty())
        throw NonMonotoneDetachments("detachment list is empty");
    std::vector<Tranche> tranches;
    tranches.reserve(detachments.size());
    for (std::size_t i = 0; i < detachments.size(); ++i) {
        if (i > 0 && !(detachments[i] > detachments[i - 1]))
            throw NonMonotoneDetachments("detachments must be strictly increasing, got " +
                                         std::to_string(detachments[i - 1]) + " before " +
                                         std::to_string(detachments[i]));
        tranches.emplace_back(0.0, detachments[i]);
    }
    return price_tranches(portfolio, tranches, cfg);
}

} // namespace trancheloss

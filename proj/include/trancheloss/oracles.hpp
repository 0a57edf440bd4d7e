// Ground-truth engines used to validate the semi-analytic pricer: a seeded
// Monte Carlo simulation of the full default model and an exact subset
// enumeration for small portfolios.

#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "trancheloss/conditional.hpp"
#include "trancheloss/errors.hpp"
#include "trancheloss/gauss.hpp"
#include "trancheloss/model.hpp"
#include "trancheloss/pricer.hpp"

namespace trancheloss {

/// Largest portfolio the 2^n enumeration routines accept.
inline constexpr std::size_t max_enumeration_loans = 20;

struct McConfig {
    std::uint64_t samples = 1'000'000;
    std::uint64_t seed = 0;
    /// Pair every path with its mirrored path (all normals negated). The
    /// estimate then averages pair means and the standard error is computed
    /// over pairs.
    bool antithetic = false;
};

struct McResult {
    double estimate = 0.0;
    double std_error = 0.0;
    std::uint64_t samples = 0;
};

namespace detail {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// xoshiro256++ with splitmix64 state setup. Stream s of a given seed is an
// independent substream; the Monte Carlo engine assigns one stream per fixed-
// size batch of paths, which makes results independent of the worker count.
class Xoshiro256pp {
public:
    Xoshiro256pp(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
        for (std::uint64_t& word : state_)
            word = splitmix64_next(x);
    }

    std::uint64_t operator()() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // uniform on the open interval (0, 1); never returns an endpoint
    double uniform01() {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1p-53;
    }

    double normal() { return std_normal_inv_cdf(uniform01()); }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<std::uint64_t, 4> state_{};
};

} // namespace detail

/// Monte Carlo estimate of the expected tranche loss. Each path draws the m
/// systematic factors and then one idiosyncratic normal per loan, in loan
/// order, all via the inverse cdf; loan i defaults when its latent variable
/// falls below Phi^{-1}(p_i). Paths are simulated in fixed batches of 16384,
/// each batch on its own RNG substream, and batch results are combined in
/// batch order, so the estimate is bit-identical for a fixed seed regardless
/// of how many threads run.
inline McResult mc_price(const Portfolio& portfolio, const Tranche& tranche,
                         const McConfig& cfg = {}) {
    if (cfg.samples < 1)
        throw InvalidConfig("mc_price: sample count must be positive");

    const PortfolioTerms terms(portfolio);
    const std::size_t n = terms.size();
    const std::size_t m = terms.factors();

    // one unit = one path, or one antithetic pair counting as two samples
    const std::uint64_t units =
        cfg.antithetic ? (cfg.samples + 1) / 2 : cfg.samples;
    constexpr std::uint64_t batch_size = 16384;
    const std::uint64_t batches = (units + batch_size - 1) / batch_size;

    std::vector<double> batch_sum(batches, 0.0);
    std::vector<double> batch_sum_sq(batches, 0.0);

    std::atomic<std::uint64_t> next_batch{0};
    auto worker = [&] {
        std::vector<double> phi(m);
        for (;;) {
            const std::uint64_t b = next_batch.fetch_add(1, std::memory_order_relaxed);
            if (b >= batches)
                return;
            detail::Xoshiro256pp rng(cfg.seed, b);
            const std::uint64_t unit_count =
                std::min<std::uint64_t>(batch_size, units - b * batch_size);
            double sum = 0.0;
            double sum_sq = 0.0;
            for (std::uint64_t u = 0; u < unit_count; ++u) {
                for (std::size_t k = 0; k < m; ++k)
                    phi[k] = rng.normal();
                double loss = 0.0;
                double mirrored_loss = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const auto loadings = terms.loadings(i);
                    double latent = 0.0;
                    for (std::size_t k = 0; k < m; ++k)
                        latent += loadings[k] * phi[k];
                    latent += terms.idio_scale(i) * rng.normal();
                    if (latent < terms.threshold(i))
                        loss += terms.exposure(i);
                    if (cfg.antithetic && -latent < terms.threshold(i))
                        mirrored_loss += terms.exposure(i);
                }
                double value = tranche_profile(tranche, loss);
                if (cfg.antithetic)
                    value = 0.5 * (value + tranche_profile(tranche, mirrored_loss));
                sum += value;
                sum_sq += value * value;
            }
            batch_sum[b] = sum;
            batch_sum_sq[b] = sum_sq;
        }
    };

    const std::size_t workers = std::min<std::size_t>(
        std::max(1u, std::thread::hardware_concurrency()), batches);
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back(worker);
        for (std::thread& th : pool)
            th.join();
    }

    detail::NeumaierSum sum;
    detail::NeumaierSum sum_sq;
    for (std::uint64_t b = 0; b < batches; ++b) {
        sum.add(batch_sum[b]);
        sum_sq.add(batch_sum_sq[b]);
    }

    McResult result;
    const double count = static_cast<double>(units);
    result.estimate = sum.total() / count;
    result.samples = cfg.antithetic ? units * 2 : units;
    if (units > 1) {
        const double variance =
            std::max(0.0, (sum_sq.total() - count * result.estimate * result.estimate) /
                              (count - 1.0));
        result.std_error = std::sqrt(variance / count);
    }
    return result;
}

namespace detail {

// subset tables over the first n loans: value[s] for every bitmask s, built
// by doubling so each entry is derived from its parent in one operation
// (error stays O(n eps) per entry instead of accumulating over the walk)
inline void subset_losses(std::span<const double> exposure, std::vector<double>& loss) {
    const std::size_t n = exposure.size();
    loss.assign(std::size_t{1} << n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t block = std::size_t{1} << i;
        for (std::size_t s = 0; s < block; ++s)
            loss[s | block] = loss[s] + exposure[i];
    }
}

inline void subset_probabilities(std::span<const double> prob, std::vector<double>& out) {
    const std::size_t n = prob.size();
    out.assign(std::size_t{1} << n, 0.0);
    out[0] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t block = std::size_t{1} << i;
        for (std::size_t s = 0; s < block; ++s) {
            out[s | block] = out[s] * prob[i];
            out[s] *= 1.0 - prob[i];
        }
    }
}

} // namespace detail

/// Exact expected tranche loss for small portfolios: full enumeration of the
/// 2^n conditional default patterns at every factor grid point, integrated
/// with the same Gauss-Hermite grid the pricer uses. Exact up to the outer
/// quadrature error.
inline double exact_price(const Portfolio& portfolio, const Tranche& tranche,
                          std::size_t nodes_per_factor = 64) {
    const std::size_t n = portfolio.size();
    if (n > max_enumeration_loans)
        throw PortfolioTooLarge("exact_price: " + std::to_string(n) + " loans exceed the 2^n cap of " +
                                std::to_string(max_enumeration_loans));

    const QuadratureRule rule = gauss_hermite_rule(nodes_per_factor);
    const FactorGrid grid = tensor_grid(rule, portfolio.factors);
    const PortfolioTerms terms(portfolio);

    std::vector<double> exposures(n);
    for (std::size_t i = 0; i < n; ++i)
        exposures[i] = terms.exposure(i);
    std::vector<double> loss;
    detail::subset_losses(exposures, loss);

    std::vector<double> cond_prob(n);
    std::vector<double> subset_prob;
    detail::NeumaierSum total;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const auto phi = grid.point(j);
        for (std::size_t i = 0; i < n; ++i)
            cond_prob[i] = terms.default_prob(i, phi);
        detail::subset_probabilities(cond_prob, subset_prob);
        detail::NeumaierSum inner;
        for (std::size_t s = 0; s < subset_prob.size(); ++s)
            inner.add(subset_prob[s] * tranche_profile(tranche, loss[s]));
        total.add(grid.weights[j] * inner.total());
    }
    return std::clamp(total.total(), 0.0, 1.0);
}

/// One atom of a discrete loss distribution.
struct LossAtom {
    double loss = 0.0;
    double prob = 0.0;
};

/// Exact probability mass function of the conditional portfolio loss at one
/// factor point, by 2^n enumeration. Atoms are sorted by loss and exact
/// duplicates are merged; probabilities sum to one up to roundoff.
inline std::vector<LossAtom> conditional_loss_pmf(const Portfolio& portfolio,
                                                  std::span<const double> phi) {
    const std::size_t n = portfolio.size();
    if (n > max_enumeration_loans)
        throw PortfolioTooLarge("conditional_loss_pmf: " + std::to_string(n) +
                                " loans exceed the 2^n cap of " +
                                std::to_string(max_enumeration_loans));
    if (phi.size() != portfolio.factors)
        throw DimensionMismatch("conditional_loss_pmf: factor point dimension mismatch");

    const PortfolioTerms terms(portfolio);
    std::vector<double> exposures(n);
    std::vector<double> cond_prob(n);
    for (std::size_t i = 0; i < n; ++i) {
        exposures[i] = terms.exposure(i);
        cond_prob[i] = terms.default_prob(i, phi);
    }
    std::vector<double> loss;
    std::vector<double> prob;
    detail::subset_losses(exposures, loss);
    detail::subset_probabilities(cond_prob, prob);

    std::vector<LossAtom> atoms(loss.size());
    for (std::size_t s = 0; s < loss.size(); ++s)
        atoms[s] = {loss[s], prob[s]};
    std::sort(atoms.begin(), atoms.end(),
              [](const LossAtom& a, const LossAtom& b) { return a.loss < b.loss; });

    std::vector<LossAtom> merged;
    merged.reserve(atoms.size());
    for (const LossAtom& atom : atoms) {
        if (atom.prob == 0.0)
            continue; // patterns ruled out by a saturated conditional probability
        if (!merged.empty() && merged.back().loss == atom.loss)
            merged.back().prob += atom.prob;
        else
            merged.push_back(atom);
    }
    return merged;
}

} // namespace trancheloss

// Gaussian special functions, probabilists' Hermite polynomials and
// Gauss-Hermite quadrature normalized to the standard normal weight.

#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "trancheloss/errors.hpp"

namespace trancheloss {

inline constexpr double inv_sqrt_2pi = 0.3989422804014326779399461;

/// Highest Hermite order the evaluation routines accept.
inline constexpr std::size_t max_hermite_order = 50;

/// Highest node count gauss_hermite_rule accepts.
inline constexpr std::size_t max_quadrature_order = 256;

/// Largest tensor grid tensor_grid will materialize.
inline constexpr std::size_t max_grid_points = 10'000'000;

/// Density of the standard normal distribution.
inline double std_normal_pdf(double x) {
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

/// Cumulative distribution function of the standard normal distribution,
/// Phi(x) = erfc(-x / sqrt(2)) / 2. Accurate to a few ulp over the whole
/// axis; saturates to 0 and 1 in the far tails instead of raising.
inline double std_normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

/// Inverse of std_normal_cdf on the open interval (0,1), via the PPND16
/// rational approximations of Wichura's algorithm AS 241 (relative accuracy
/// about 1e-15 over the full domain).
inline double std_normal_inv_cdf(double u) {
    if (!(u > 0.0 && u < 1.0))
        throw DomainError("std_normal_inv_cdf: argument " + std::to_string(u) +
                          " outside the open interval (0,1)");

    const double q = u - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        const double num =
            (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                  6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
                1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
              1.3314166789178437745e+2) * r + 3.3871328727963666080e+0);
        const double den =
            (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                  3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
                5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
              4.2313330701600911252e+1) * r + 1.0);
        return q * num / den;
    }

    double r = (q < 0.0) ? u : 1.0 - u;
    r = std::sqrt(-std::log(r));
    double x;
    if (r <= 5.0) {
        r -= 1.6;
        const double num =
            (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
                3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
              4.63033784615654529590e+0) * r + 1.42343711074968357734e+0);
        const double den =
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
              2.05319162663775882187e+0) * r + 1.0);
        x = num / den;
    } else {
        r -= 5.0;
        const double num =
            (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
              5.46378491116411436990e+0) * r + 6.65790464350110377720e+0);
        const double den =
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
        x = num / den;
    }
    return (q < 0.0) ? -x : x;
}

/// Probabilists' Hermite polynomial He_n(x), defined by the three-term
/// recurrence He_0 = 1, He_1 = x, He_{n+1}(x) = x He_n(x) - n He_{n-1}(x).
inline double hermite_poly(std::size_t n, double x) {
    if (n > max_hermite_order)
        throw OrderTooLarge("hermite_poly: order " + std::to_string(n) + " exceeds " +
                            std::to_string(max_hermite_order));
    if (n == 0)
        return 1.0;
    double prev = 1.0;
    double cur = x;
    for (std::size_t k = 1; k < n; ++k) {
        const double next = x * cur - static_cast<double>(k) * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

/// Quadrature rule against the standard normal density: sum_j w_j f(x_j)
/// approximates E[f(Z)] for Z ~ N(0,1). Weights are positive and sum to one;
/// nodes are symmetric about zero.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t order() const { return nodes.size(); }
};

namespace detail {

// Orthonormal probabilists' Hermite sequence p_k = He_k / sqrt(k!), evaluated
// through the recurrence sqrt(k+1) p_{k+1} = x p_k - sqrt(k) p_{k-1}. Values
// stay within double range for every order this library accepts.
class OrthonormalHermite {
public:
    explicit OrthonormalHermite(std::size_t n) : sq_(n + 1) {
        for (std::size_t i = 0; i <= n; ++i)
            sq_[i] = std::sqrt(static_cast<double>(i));
    }

    // p_n(x) and p_{n-1}(x)
    std::pair<double, double> eval(std::size_t n, double x) const {
        double prev = 0.0;
        double cur = 1.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double next = (x * cur - sq_[j] * prev) / sq_[j + 1];
            prev = cur;
            cur = next;
        }
        return {cur, prev};
    }

    // derivative identity: p_n'(x) = sqrt(n) p_{n-1}(x)
    double sqrt_index(std::size_t n) const { return sq_[n]; }

    // 1 / sum_{k=0}^{n-1} p_k(x)^2, the Gaussian quadrature weight at node x
    double christoffel_weight(std::size_t n, double x) const {
        double prev = 0.0;
        double cur = 1.0;
        double sum = 1.0;
        for (std::size_t j = 0; j + 1 < n; ++j) {
            const double next = (x * cur - sq_[j] * prev) / sq_[j + 1];
            prev = cur;
            cur = next;
            sum += cur * cur;
        }
        return 1.0 / sum;
    }

private:
    std::vector<double> sq_;
};

// One root of p_n inside (lo, hi), where the bracket endpoints carry opposite
// signs. Newton steps from the interval midpoint, falling back to bisection
// whenever an iterate would leave the bracket.
inline double hermite_root(const OrthonormalHermite& basis, std::size_t n, double lo, double hi) {
    const double f_lo = basis.eval(n, lo).first;
    double x = 0.5 * (lo + hi);
    for (int iter = 0; iter < 100; ++iter) {
        const auto [p, p_prev] = basis.eval(n, x);
        if (p == 0.0)
            break;
        if ((p > 0.0) == (f_lo > 0.0))
            lo = x;
        else
            hi = x;
        const double deriv = basis.sqrt_index(n) * p_prev;
        double next = (deriv != 0.0) ? x - p / deriv : 0.5 * (lo + hi);
        if (!(next > lo && next < hi))
            next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 4e-16 * (1.0 + std::abs(x))) {
            x = next;
            break;
        }
        x = next;
    }
    return x;
}

} // namespace detail

/// Gauss-Hermite rule with k nodes, normalized for the standard normal
/// density: exact for E[x^j] with j <= 2k-1. Nodes are computed by walking
/// the interlacing property up from order one (each root of He_{d} lies
/// strictly between consecutive roots of He_{d-1}); weights come from the
/// Christoffel function of the orthonormal basis.
inline QuadratureRule gauss_hermite_rule(std::size_t k) {
    if (k < 1 || k > max_quadrature_order)
        throw OrderOutOfRange("gauss_hermite_rule: node count " + std::to_string(k) +
                              " outside [1, " + std::to_string(max_quadrature_order) + "]");

    const detail::OrthonormalHermite basis(k);
    std::vector<double> roots{0.0};
    for (std::size_t deg = 2; deg <= k; ++deg) {
        // every root of He_deg lies strictly inside (-bound, bound)
        const double bound = std::sqrt(2.0 * (2.0 * static_cast<double>(deg) + 1.0));
        std::vector<double> next(deg);
        for (std::size_t i = 0; i < deg; ++i) {
            const double lo = (i == 0) ? -bound : roots[i - 1];
            const double hi = (i == deg - 1) ? bound : roots[i];
            next[i] = detail::hermite_root(basis, deg, lo, hi);
        }
        roots = std::move(next);
    }

    QuadratureRule rule;
    rule.nodes = std::move(roots);
    rule.weights.resize(k);
    for (std::size_t i = 0; i < k; ++i)
        rule.weights[i] = basis.christoffel_weight(k, rule.nodes[i]);

    // enforce the exact symmetry of the rule and renormalize the total mass
    for (std::size_t i = 0; i < (k + 1) / 2; ++i) {
        const std::size_t j = k - 1 - i;
        const double node = 0.5 * (rule.nodes[i] - rule.nodes[j]);
        const double weight = 0.5 * (rule.weights[i] + rule.weights[j]);
        rule.nodes[i] = node;
        rule.nodes[j] = -node;
        rule.weights[i] = weight;
        rule.weights[j] = weight;
    }
    double total = 0.0;
    for (double w : rule.weights)
        total += w;
    for (double& w : rule.weights)
        w /= total;
    return rule;
}

/// Tensor-product grid over m independent standard normal factors. Points are
/// stored row-major (point j occupies [j*dim, (j+1)*dim)); weights multiply
/// across dimensions and sum to one.
struct FactorGrid {
    std::size_t dim = 0;
    std::vector<double> points;
    std::vector<double> weights;

    std::size_t size() const { return weights.size(); }

    std::span<const double> point(std::size_t j) const {
        return {points.data() + j * dim, dim};
    }
};

inline FactorGrid tensor_grid(const QuadratureRule& rule, std::size_t m) {
    if (m == 0)
        throw InvalidConfig("tensor_grid: factor dimension must be positive");
    const std::size_t k = rule.order();
    std::size_t count = 1;
    for (std::size_t d = 0; d < m; ++d) {
        if (count > max_grid_points / k)
            throw GridTooLarge("tensor_grid: " + std::to_string(k) + "^" + std::to_string(m) +
                               " points exceed the cap of " + std::to_string(max_grid_points));
        count *= k;
    }

    FactorGrid grid;
    grid.dim = m;
    grid.points.resize(count * m);
    grid.weights.assign(count, 1.0);
    std::vector<std::size_t> index(m, 0);
    for (std::size_t j = 0; j < count; ++j) {
        double w = 1.0;
        for (std::size_t d = 0; d < m; ++d) {
            grid.points[j * m + d] = rule.nodes[index[d]];
            w *= rule.weights[index[d]];
        }
        grid.weights[j] = w;
        for (std::size_t d = m; d-- > 0;) {
            if (++index[d] < k)
                break;
            index[d] = 0;
        }
    }
    return grid;
}

namespace detail {

// Kahan-Neumaier compensated accumulator; used wherever a long sum feeds a
// tolerance tighter than the naive summation error.
class NeumaierSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }

    double total() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

} // namespace detail

} // namespace trancheloss

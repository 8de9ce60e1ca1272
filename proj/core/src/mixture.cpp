#include "landscape/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace landscape {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // log(2*pi)/2
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log of the Mills-ratio series S(z) = 1 - 1/z^2 + 3/z^4 - 15/z^6 + ...
// for the upper tail Q(z) ~ phi(z)/z * S(z), z large. Terms are added while
// they shrink, which bounds the truncation error by the first dropped term.
double log_mills_series(double z) {
    const double inv_z2 = 1.0 / (z * z);
    double term = 1.0;
    double sum = 1.0;
    double odd = 1.0;  // (2n - 1)!!
    for (int n = 1; n <= 30; ++n) {
        odd *= 2 * n - 1;
        const double next = ((n % 2 == 0) ? 1.0 : -1.0) * odd * std::pow(inv_z2, n);
        if (std::abs(next) >= std::abs(term) || std::abs(next) < 1e-18) {
            if (std::abs(next) < 1e-18) sum += next;
            break;
        }
        sum += next;
        term = next;
    }
    return std::log(sum);
}

}  // namespace

void GaussianMixture::validate() const {
    const std::size_t k = components();
    if (k == 0 || means.size() != k || stddevs.size() != k) {
        throw std::invalid_argument("GaussianMixture: component arrays must be non-empty and equal length");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
            throw std::invalid_argument("GaussianMixture: weights must be finite and >= 0");
        }
        if (!std::isfinite(means[i])) {
            throw std::invalid_argument("GaussianMixture: means must be finite");
        }
        if (!(stddevs[i] > 0.0) || !std::isfinite(stddevs[i])) {
            throw std::invalid_argument("GaussianMixture: stddevs must be finite and > 0");
        }
        sum += weights[i];
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument("GaussianMixture: weights must sum to 1");
    }
}

double log_std_normal_pdf(double x) {
    return -0.5 * x * x - kHalfLog2Pi;
}

double log_std_normal_cdf(double x) {
    if (x < -8.0) {
        // Phi(x) = Q(-x) ~ phi(x)/(-x) * S(-x)
        const double z = -x;
        return log_std_normal_pdf(z) - std::log(z) + log_mills_series(z);
    }
    if (x <= 0.0) {
        return std::log(0.5 * std::erfc(-x * kInvSqrt2));
    }
    // Upper half: go through the complement so values like Phi(10) keep the
    // tiny -log mass instead of rounding to exactly 0.
    const double tail = 0.5 * std::erfc(x * kInvSqrt2);
    return std::log1p(-tail);
}

double log_std_normal_sf(double x) {
    return log_std_normal_cdf(-x);
}

double std_normal_interval_logprob(double lo, double hi) {
    if (!(lo < hi)) return kNegInf;
    if (lo >= 0.0) {
        // Both endpoints in the upper tail: P = Q(lo) - Q(hi).
        const double la = log_std_normal_sf(lo);
        const double lb = log_std_normal_sf(hi);
        const double d = lb - la;  // <= 0
        if (d >= 0.0) return kNegInf;
        return la + std::log1p(-std::exp(d));
    }
    if (hi <= 0.0) {
        const double la = log_std_normal_cdf(hi);
        const double lb = log_std_normal_cdf(lo);
        const double d = lb - la;
        if (d >= 0.0) return kNegInf;
        return la + std::log1p(-std::exp(d));
    }
    // Interval straddles zero: erf terms have the same sign, no cancellation.
    const double p = 0.5 * (std::erf(hi * kInvSqrt2) + std::erf(-lo * kInvSqrt2));
    return std::log(p);
}

double log_sum_exp(std::span<const double> values) {
    double mx = kNegInf;
    for (double v : values) mx = std::max(mx, v);
    if (!std::isfinite(mx)) return mx;  // all -inf (or a nan propagates)
    double sum = 0.0;
    for (double v : values) sum += std::exp(v - mx);
    return mx + std::log(sum);
}

namespace {

template <typename PerComponent>
double mixture_lse(const GaussianMixture& gm, PerComponent&& term) {
    const std::size_t k = gm.components();
    double mx = kNegInf;
    double vals_small[8];
    std::vector<double> vals_big;
    double* vals = vals_small;
    if (k > 8) {
        vals_big.resize(k);
        vals = vals_big.data();
    }
    for (std::size_t i = 0; i < k; ++i) {
        const double lw = gm.weights[i] > 0.0 ? std::log(gm.weights[i]) : kNegInf;
        vals[i] = lw == kNegInf ? kNegInf : lw + term(i);
        mx = std::max(mx, vals[i]);
    }
    if (!std::isfinite(mx)) return kNegInf;
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) sum += std::exp(vals[i] - mx);
    return mx + std::log(sum);
}

}  // namespace

double mixture_log_pdf(const GaussianMixture& gm, double w) {
    return mixture_lse(gm, [&](std::size_t i) {
        const double z = (w - gm.means[i]) / gm.stddevs[i];
        return -std::log(gm.stddevs[i]) + log_std_normal_pdf(z);
    });
}

double mixture_log_cdf(const GaussianMixture& gm, double b) {
    return mixture_lse(gm, [&](std::size_t i) {
        return log_std_normal_cdf((b - gm.means[i]) / gm.stddevs[i]);
    });
}

double mixture_log_sf(const GaussianMixture& gm, double b) {
    return mixture_lse(gm, [&](std::size_t i) {
        return log_std_normal_cdf((gm.means[i] - b) / gm.stddevs[i]);
    });
}

double log_bin_prob(const GaussianMixture& gm, std::int64_t w) {
    const double wd = static_cast<double>(w);
    return mixture_lse(gm, [&](std::size_t i) {
        const double lo = (wd - 0.5 - gm.means[i]) / gm.stddevs[i];
        const double hi = (wd + 0.5 - gm.means[i]) / gm.stddevs[i];
        return std_normal_interval_logprob(lo, hi);
    });
}

double quantized_win_logprob(const GaussianMixture& gm, std::int64_t w) {
    return std::max(log_bin_prob(gm, w), std::log(kProbFloor));
}

double quantized_lose_logprob(const GaussianMixture& gm, std::int64_t b) {
    return std::max(mixture_log_sf(gm, static_cast<double>(b) - 0.5), std::log(kProbFloor));
}

double expected_cost(const GaussianMixture& gm, double b) {
    if (b < 0.0) throw std::invalid_argument("expected_cost: bid must be >= 0");
    if (b == 0.0) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < gm.components(); ++i) {
        const double mu = gm.means[i];
        const double sd = gm.stddevs[i];
        const double a = (0.0 - mu) / sd;
        const double c = (b - mu) / sd;
        // integral_0^b w phi((w-mu)/sd)/sd dw
        //   = mu [Phi(c) - Phi(a)] - sd [phi(c) - phi(a)]
        const double cdf_diff = std::exp(std_normal_interval_logprob(a, c));
        const double pdf_diff = std::exp(log_std_normal_pdf(c)) - std::exp(log_std_normal_pdf(a));
        total += gm.weights[i] * (mu * cdf_diff - sd * pdf_diff);
    }
    return std::max(total, 0.0);
}

double expected_utility(const GaussianMixture& gm, double b, double u) {
    return (1.0 - std::exp(mixture_log_sf(gm, b))) * u;
}

double mixture_mean(const GaussianMixture& gm) {
    double m = 0.0;
    for (std::size_t i = 0; i < gm.components(); ++i) m += gm.weights[i] * gm.means[i];
    return m;
}

double mixture_quantile(const GaussianMixture& gm, double q) {
    if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("mixture_quantile: q must be in (0, 1)");
    double lo = gm.means[0];
    double hi = gm.means[0];
    for (std::size_t i = 0; i < gm.components(); ++i) {
        lo = std::min(lo, gm.means[i] - 12.0 * gm.stddevs[i]);
        hi = std::max(hi, gm.means[i] + 12.0 * gm.stddevs[i]);
    }
    for (int it = 0; it < 200 && hi - lo > 1e-9 * (1.0 + std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (std::exp(mixture_log_cdf(gm, mid)) < q) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace landscape

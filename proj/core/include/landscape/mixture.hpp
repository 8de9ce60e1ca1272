#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace landscape {

/// Shared probability floor applied before taking logs when scoring records,
/// so a single extreme observation cannot drive an average to -inf.
inline constexpr double kProbFloor = 1e-12;

/// Lower/upper clamp for predicted standard deviations. Guards against the
/// mixture-likelihood singularity where a component collapses onto one point.
inline constexpr double kSigmaMin = 1e-3;
inline constexpr double kSigmaMax = 1e6;

/// Gaussian mixture over prices. K = 1 covers plain and heteroscedastic
/// censored regression; the mixture network emits general K.
struct GaussianMixture {
    std::vector<double> weights;
    std::vector<double> means;
    std::vector<double> stddevs;

    std::size_t components() const { return weights.size(); }

    /// Throws std::invalid_argument when weights do not form a distribution
    /// or stddevs are not strictly positive finite.
    void validate() const;
};

// ---------------------------------------------------------------------------
// Standard normal primitives (all log-space, stable over the whole real line)

double log_std_normal_pdf(double x);

/// log Phi(x). Full double accuracy for x >= -8; asymptotic Mills-ratio
/// series below that, absolute log-space error <= 1e-6. Finite for all
/// finite x.
double log_std_normal_cdf(double x);

/// log (1 - Phi(x)).
double log_std_normal_sf(double x);

/// log P(lo < Z <= hi) without cancellation, valid in both deep tails.
double std_normal_interval_logprob(double lo, double hi);

double log_sum_exp(std::span<const double> values);

// ---------------------------------------------------------------------------
// Mixture operations

/// log sum_k pi_k/sigma_k phi((w - mu_k)/sigma_k)
double mixture_log_pdf(const GaussianMixture& gm, double w);

/// log P(W <= b)
double mixture_log_cdf(const GaussianMixture& gm, double b);

/// log P(W > b) = log sum_k pi_k (1 - Phi((b - mu_k)/sigma_k))
double mixture_log_sf(const GaussianMixture& gm, double b);

/// Raw quantized bin log-probability: log P(W in (w-0.5, w+0.5]).
double log_bin_prob(const GaussianMixture& gm, std::int64_t w);

/// Bin probability for a won auction, floored at kProbFloor.
double quantized_win_logprob(const GaussianMixture& gm, std::int64_t w);

/// Quantized losing probability P(W_bin >= b) = P(W >= b - 0.5), floored.
double quantized_lose_logprob(const GaussianMixture& gm, std::int64_t b);

/// E[cost | bid b] = integral_0^b w p(w) dw, via the truncated-Gaussian
/// closed form per component. Throws std::invalid_argument for b < 0.
double expected_cost(const GaussianMixture& gm, double b);

/// E[utility | bid b] = P(W <= b) * u.
double expected_utility(const GaussianMixture& gm, double b, double u);

/// Mean of the mixture, sum_k pi_k mu_k.
double mixture_mean(const GaussianMixture& gm);

/// q-quantile by bisection on the mixture cdf, q in (0, 1).
double mixture_quantile(const GaussianMixture& gm, double q);

}  // namespace landscape

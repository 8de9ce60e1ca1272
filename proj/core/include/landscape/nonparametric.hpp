#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "landscape/featurize.hpp"

namespace landscape {

/// Product-limit winning-price estimate: a discrete pmf over the observed
/// event prices plus an explicit mass bucket for "winning price beyond the
/// maximum bid". pmf and tail sum to one.
struct KMEstimate {
    std::vector<std::int64_t> prices;  // sorted distinct event prices
    std::vector<double> pmf;
    double tail_mass = 0.0;
    std::int64_t max_bid = 0;

    void validate() const;  // throws std::invalid_argument
};

/// Featureless uniform baseline: with probability p_win the winning price is
/// uniform on [0, z_max], the remaining 1-p_win sits beyond z_max.
struct RSModel {
    double p_win = 0.0;
    std::int64_t z_max = 1;
};

/// Kaplan-Meier fit over censored observations. Won auctions contribute an
/// event at their winning price, lost auctions a censoring at their bid
/// (the winning price is known to exceed it). Ties at one price keep both
/// events and censorings in the risk set for that price. All-censored input
/// yields tail_mass = 1. Throws std::invalid_argument on empty data.
KMEstimate km_fit(std::span<const Observation> data);

double km_logprob_win(const KMEstimate& est, std::int64_t w);
double km_logprob_lose(const KMEstimate& est, std::int64_t b);

/// Precomputed suffix sums for repeated km_logprob_lose queries.
class KMSurvival {
public:
    explicit KMSurvival(const KMEstimate& est);
    double logprob_win(std::int64_t w) const;
    double logprob_lose(std::int64_t b) const;

private:
    std::vector<std::int64_t> prices_;
    std::vector<double> pmf_;
    std::vector<double> at_or_above_;  // pmf suffix sums + tail
    double tail_mass_ = 0.0;
};

/// p_win = train win rate, z_max = max bid in train. Throws DataError when
/// the training data is empty or every bid is zero.
RSModel rs_fit(std::span<const Observation> train);
double rs_logprob_win(const RSModel& model, std::int64_t w);
double rs_logprob_lose(const RSModel& model, std::int64_t b);

/// Single Gaussian minimizing KL(est || N(mu, sigma)) where the Gaussian is
/// quantized onto the estimate's support and its survival beyond max_bid
/// stands against the tail bucket. Coarse grid search over
/// mu in [0, 2 max_bid], sigma in [1, 2 max_bid], then local refinement to
/// 1e-3 in both coordinates.
struct GaussianFit {
    double mu = 0.0;
    double sigma = 1.0;
    double cross_entropy = 0.0;
};

GaussianFit fit_gaussian_to_km(const KMEstimate& est);

}  // namespace landscape

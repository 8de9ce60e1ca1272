#include "landscape/nonparametric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "landscape/common.hpp"
#include "landscape/mixture.hpp"

namespace landscape {

void KMEstimate::validate() const {
    if (prices.size() != pmf.size()) throw std::invalid_argument("KMEstimate: prices/pmf length mismatch");
    if (!std::is_sorted(prices.begin(), prices.end())) throw std::invalid_argument("KMEstimate: prices not sorted");
    double sum = tail_mass;
    if (tail_mass < 0.0) throw std::invalid_argument("KMEstimate: negative tail mass");
    for (std::size_t i = 0; i < pmf.size(); ++i) {
        if (pmf[i] < 0.0) throw std::invalid_argument("KMEstimate: negative pmf");
        if (prices[i] > max_bid) throw std::invalid_argument("KMEstimate: price beyond max bid");
        sum += pmf[i];
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("KMEstimate: pmf + tail must sum to 1");
}

KMEstimate km_fit(std::span<const Observation> data) {
    if (data.empty()) throw std::invalid_argument("km_fit: empty data");

    std::vector<std::int64_t> events;    // winning prices of won auctions
    std::vector<std::int64_t> censored;  // bids of lost auctions
    std::int64_t max_bid = 0;
    for (const Observation& o : data) {
        max_bid = std::max(max_bid, o.bid_price);
        if (o.won) {
            events.push_back(*o.winning_price);
        } else {
            censored.push_back(o.bid_price);
        }
    }
    std::sort(events.begin(), events.end());
    std::sort(censored.begin(), censored.end());

    KMEstimate est;
    est.max_bid = max_bid;
    if (events.empty()) {
        est.tail_mass = 1.0;
        return est;
    }

    const auto at_risk = [&](std::int64_t v) -> std::uint64_t {
        // Everyone whose (event or censoring) time is >= v. Counting censored
        // records with bid == v keeps the event-before-censoring convention.
        const std::uint64_t won =
            events.end() - std::lower_bound(events.begin(), events.end(), v);
        const std::uint64_t lost =
            censored.end() - std::lower_bound(censored.begin(), censored.end(), v);
        return won + lost;
    };

    // Survival as an exact fraction remaining/n while no censoring removal
    // has intervened; the telescoping product then reproduces empirical
    // frequencies exactly on fully-uncensored data. The first censoring
    // switches to plain floating-point products.
    const std::uint64_t n_total = data.size();
    bool exact = true;
    std::uint64_t exact_remaining = n_total;  // numerator of S = remaining/n
    double survival = 1.0;

    std::size_t i = 0;
    while (i < events.size()) {
        const std::int64_t v = events[i];
        std::size_t j = i;
        while (j < events.size() && events[j] == v) ++j;
        const std::uint64_t d = j - i;
        const std::uint64_t n_v = at_risk(v);

        if (exact && n_v != exact_remaining) {
            // Censoring removed risk-set members since the previous event.
            survival = static_cast<double>(exact_remaining) / static_cast<double>(n_total);
            exact = false;
        }

        double prev;
        double cur;
        if (exact) {
            prev = static_cast<double>(exact_remaining) / static_cast<double>(n_total);
            exact_remaining -= d;
            cur = static_cast<double>(exact_remaining) / static_cast<double>(n_total);
            // pmf as a single exact division d/n
            est.prices.push_back(v);
            est.pmf.push_back(static_cast<double>(d) / static_cast<double>(n_total));
            survival = cur;
        } else {
            prev = survival;
            cur = survival * (1.0 - static_cast<double>(d) / static_cast<double>(n_v));
            est.prices.push_back(v);
            est.pmf.push_back(std::max(prev - cur, 0.0));
            survival = cur;
        }
        i = j;
    }
    est.tail_mass = std::max(survival, 0.0);
    return est;
}

double km_logprob_win(const KMEstimate& est, std::int64_t w) {
    const auto it = std::lower_bound(est.prices.begin(), est.prices.end(), w);
    double p = 0.0;
    if (it != est.prices.end() && *it == w) {
        p = est.pmf[static_cast<std::size_t>(it - est.prices.begin())];
    }
    return std::log(std::max(p, kProbFloor));
}

double km_logprob_lose(const KMEstimate& est, std::int64_t b) {
    double p = est.tail_mass;
    const auto it = std::lower_bound(est.prices.begin(), est.prices.end(), b);
    for (auto k = static_cast<std::size_t>(it - est.prices.begin()); k < est.pmf.size(); ++k) {
        p += est.pmf[k];
    }
    return std::log(std::max(p, kProbFloor));
}

KMSurvival::KMSurvival(const KMEstimate& est)
    : prices_(est.prices), pmf_(est.pmf), tail_mass_(est.tail_mass) {
    at_or_above_.assign(prices_.size() + 1, tail_mass_);
    for (std::size_t i = prices_.size(); i-- > 0;) {
        at_or_above_[i] = at_or_above_[i + 1] + pmf_[i];
    }
}

double KMSurvival::logprob_win(std::int64_t w) const {
    const auto it = std::lower_bound(prices_.begin(), prices_.end(), w);
    double p = 0.0;
    if (it != prices_.end() && *it == w) p = pmf_[static_cast<std::size_t>(it - prices_.begin())];
    return std::log(std::max(p, kProbFloor));
}

double KMSurvival::logprob_lose(std::int64_t b) const {
    const auto it = std::lower_bound(prices_.begin(), prices_.end(), b);
    return std::log(std::max(at_or_above_[static_cast<std::size_t>(it - prices_.begin())], kProbFloor));
}

RSModel rs_fit(std::span<const Observation> train) {
    if (train.empty()) throw DataError("rs_fit: empty training data");
    RSModel m;
    std::int64_t z = 0;
    std::size_t wins = 0;
    for (const Observation& o : train) {
        z = std::max(z, o.bid_price);
        wins += o.won ? 1 : 0;
    }
    if (z == 0) throw DataError("rs_fit: max bid price is zero");
    m.p_win = static_cast<double>(wins) / static_cast<double>(train.size());
    m.z_max = z;
    return m;
}

double rs_logprob_win(const RSModel& model, std::int64_t w) {
    const double z = static_cast<double>(model.z_max);
    double p = 0.0;
    if (w >= 0 && w <= model.z_max) p = model.p_win / z;
    return std::log(std::max(p, kProbFloor));
}

double rs_logprob_lose(const RSModel& model, std::int64_t b) {
    const double z = static_cast<double>(model.z_max);
    double p;
    if (b <= 0) {
        p = 1.0;
    } else if (b >= model.z_max) {
        p = 1.0 - model.p_win;
    } else {
        p = (1.0 - model.p_win) + model.p_win * (z - static_cast<double>(b)) / z;
    }
    return std::log(std::max(p, kProbFloor));
}

// ---------------------------------------------------------------------------
// Gaussian KL fit

namespace {

/// Cross-entropy of the estimate against a quantized N(mu, sigma):
/// -[sum_v pmf(v) log q(v) + tail log q_tail], where q_tail is the Gaussian
/// survival past max_bid. Minimizing this over (mu, sigma) minimizes the KL
/// divergence since the estimate's entropy is constant.
double km_gaussian_cross_entropy(const KMEstimate& est, double mu, double sigma) {
    const GaussianMixture g{{1.0}, {mu}, {sigma}};
    double ce = 0.0;
    for (std::size_t i = 0; i < est.prices.size(); ++i) {
        if (est.pmf[i] <= 0.0) continue;
        ce -= est.pmf[i] * log_bin_prob(g, est.prices[i]);
    }
    if (est.tail_mass > 0.0) {
        ce -= est.tail_mass * mixture_log_sf(g, static_cast<double>(est.max_bid) + 0.5);
    }
    return ce;
}

}  // namespace

GaussianFit fit_gaussian_to_km(const KMEstimate& est) {
    est.validate();
    GaussianFit fit;

    // Degenerate estimate: all mass on one support point.
    if (est.prices.size() == 1 && est.tail_mass <= 1e-12) {
        fit.mu = static_cast<double>(est.prices[0]);
        fit.sigma = kSigmaMin;
        fit.cross_entropy = km_gaussian_cross_entropy(est, fit.mu, fit.sigma);
        return fit;
    }

    const double hi = 2.0 * std::max<double>(static_cast<double>(est.max_bid), 1.0);
    double best_mu = 0.0;
    double best_sigma = 1.0;
    double best_ce = std::numeric_limits<double>::infinity();

    const auto consider = [&](double mu, double sigma) {
        const double ce = km_gaussian_cross_entropy(est, mu, sigma);
        if (ce < best_ce) {
            best_ce = ce;
            best_mu = mu;
            best_sigma = sigma;
        }
    };

    constexpr int kCoarse = 41;
    for (int a = 0; a < kCoarse; ++a) {
        const double mu = hi * static_cast<double>(a) / (kCoarse - 1);
        for (int b = 0; b < kCoarse; ++b) {
            const double sigma = 1.0 + (hi - 1.0) * static_cast<double>(b) / (kCoarse - 1);
            consider(mu, sigma);
        }
    }

    double span_mu = hi / (kCoarse - 1);
    double span_sigma = (hi - 1.0) / (kCoarse - 1);
    while (span_mu > 1e-3 || span_sigma > 1e-3) {
        const double center_mu = best_mu;
        const double center_sigma = best_sigma;
        for (int a = -4; a <= 4; ++a) {
            for (int b = -4; b <= 4; ++b) {
                const double mu = center_mu + span_mu * static_cast<double>(a) / 4.0;
                const double sigma = std::max(center_sigma + span_sigma * static_cast<double>(b) / 4.0, kSigmaMin);
                consider(mu, sigma);
            }
        }
        span_mu *= 0.25;
        span_sigma *= 0.25;
    }

    fit.mu = best_mu;
    fit.sigma = best_sigma;
    fit.cross_entropy = best_ce;
    return fit;
}

}  // namespace landscape

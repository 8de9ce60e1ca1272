#include "landscape/simulator.hpp"

#include <cmath>
#include <doctest.h>
#include <map>

#include "landscape/common.hpp"
#include "landscape/evaluate.hpp"
#include "landscape/nonparametric.hpp"
#include "support/oracles.hpp"

using namespace landscape;
namespace oracle = landscape::test;

TEST_CASE("generate is deterministic and censoring-consistent") {
    SimConfig cfg = benchmark_sim_config(3);
    cfg.n_records = 4000;
    const SimOutput a = generate(cfg);
    const SimOutput b = generate(cfg);

    REQUIRE(a.dataset.size() == cfg.n_records);
    for (std::size_t i = 0; i < a.dataset.size(); ++i) {
        CHECK(a.dataset[i].bid_price == b.dataset[i].bid_price);
        CHECK(a.dataset[i].won == b.dataset[i].won);
        CHECK(a.dataset[i].winning_price == b.dataset[i].winning_price);
        CHECK(a.truths[i].means == b.truths[i].means);
        // Censoring consistency.
        if (a.dataset[i].won) {
            CHECK(*a.dataset[i].winning_price <= a.dataset[i].bid_price);
        }
        CHECK_NOTHROW(a.truths[i].validate());
    }

    // Thread count changes nothing.
    SimConfig threaded = cfg;
    threaded.threads = 3;
    const SimOutput c = generate(threaded);
    for (std::size_t i = 0; i < a.dataset.size(); ++i) {
        CHECK(a.dataset[i].bid_price == c.dataset[i].bid_price);
        CHECK(a.dataset[i].winning_price == c.dataset[i].winning_price);
    }

    // Different seed, different data.
    SimConfig other = cfg;
    other.seed = 4;
    const SimOutput d = generate(other);
    std::size_t diffs = 0;
    for (std::size_t i = 0; i < a.dataset.size(); ++i) {
        diffs += a.dataset[i].bid_price != d.dataset[i].bid_price;
    }
    CHECK(diffs > 0);
}

TEST_CASE("benchmark config censors roughly half the records") {
    SimConfig cfg = benchmark_sim_config(1);
    cfg.n_records = 20000;
    const SimOutput sim = generate(cfg);
    const double wr = win_rate(sim.dataset);
    CHECK(wr > 0.35);
    CHECK(wr < 0.65);
}

TEST_CASE("fixed sky-high bid wins everything, zero bid loses everything") {
    SimConfig cfg = benchmark_sim_config(5);
    cfg.n_records = 2000;
    cfg.bid_policy.kind = BidPolicyKind::fixed;
    cfg.bid_policy.fixed = 1000000000;
    const SimOutput all_won = generate(cfg);
    for (const Observation& o : all_won.dataset) CHECK(o.won);

    cfg.bid_policy.fixed = 0;
    const SimOutput all_lost = generate(cfg);
    std::size_t wins = 0;
    for (const Observation& o : all_lost.dataset) wins += o.won;
    // Means are far above zero; only the rounded-to-zero draws can win.
    CHECK(wins < all_lost.dataset.size() / 100);
}

TEST_CASE("winning-price histogram matches the truth pmf per profile") {
    // Two profiles, always won, 100k records: chi-square against the truth's
    // quantized bins. Critical value chi2(0.99, 19 dof) = 36.19.
    SimConfig cfg;
    cfg.n_fields = 1;
    cfg.attrs_per_field = 2;
    cfg.n_records = 100000;
    cfg.seed = 9;
    cfg.bid_policy.kind = BidPolicyKind::fixed;
    cfg.bid_policy.fixed = 1000000000;
    const SimOutput sim = generate(cfg);

    std::map<std::uint32_t, std::vector<std::int64_t>> draws;  // profile col -> prices
    for (std::size_t i = 0; i < sim.dataset.size(); ++i) {
        draws[sim.dataset[i].x.active[1]].push_back(*sim.dataset[i].winning_price);
    }
    REQUIRE(draws.size() == 2);

    for (auto& [col, prices] : draws) {
        GaussianMixture truth;
        for (std::size_t i = 0; i < sim.dataset.size(); ++i) {
            if (sim.dataset[i].x.active[1] == col) {
                truth = sim.truths[i];
                break;
            }
        }
        // 20 equiprobable bins from the truth quantiles.
        constexpr int kBins = 20;
        std::vector<double> edges;
        for (int q = 1; q < kBins; ++q) {
            edges.push_back(mixture_quantile(truth, static_cast<double>(q) / kBins));
        }
        std::vector<double> observed(kBins, 0.0);
        for (std::int64_t w : prices) {
            int bin = 0;
            while (bin < kBins - 1 && static_cast<double>(w) > edges[bin]) ++bin;
            observed[bin] += 1.0;
        }
        // Integer rounding of draws shifts bin membership slightly, so build
        // expected masses from the quantized truth around each edge.
        std::vector<double> expected(kBins, 0.0);
        const double n = static_cast<double>(prices.size());
        double prev_cdf = 0.0;
        for (int bin = 0; bin < kBins; ++bin) {
            const double hi_edge = bin + 1 < kBins
                                       ? std::floor(edges[bin]) + 0.5
                                       : std::numeric_limits<double>::infinity();
            const double cdf = bin + 1 < kBins ? 1.0 - std::exp(mixture_log_sf(truth, hi_edge)) : 1.0;
            expected[bin] = (cdf - prev_cdf) * n;
            prev_cdf = cdf;
        }
        // Redo observed with the same rounded edges for a like-for-like test.
        std::fill(observed.begin(), observed.end(), 0.0);
        for (std::int64_t w : prices) {
            int bin = 0;
            while (bin < kBins - 1 && static_cast<double>(w) > std::floor(edges[bin])) ++bin;
            observed[bin] += 1.0;
        }
        double chi2 = 0.0;
        for (int bin = 0; bin < kBins; ++bin) {
            REQUIRE(expected[bin] > 5.0);
            chi2 += (observed[bin] - expected[bin]) * (observed[bin] - expected[bin]) / expected[bin];
        }
        CHECK(chi2 < 36.1909);  // p > 0.01 at 19 dof
    }
}

TEST_CASE("oracle anlp limits") {
    // All lost at bid 0: each record scores -log P(W >= -0.5), which is zero
    // up to the truths' analytic mass below zero.
    SimConfig cfg = benchmark_sim_config(2);
    cfg.n_records = 500;
    cfg.bid_policy.kind = BidPolicyKind::fixed;
    cfg.bid_policy.fixed = 0;
    SimOutput sim = generate(cfg);
    bool any_won = false;
    for (auto& o : sim.dataset) any_won |= o.won;
    if (!any_won) {
        CHECK(oracle_anlp(sim.dataset, sim.truths) < 1e-5);
        CHECK(oracle_anlp(sim.dataset, sim.truths) >= 0.0);
    }

    std::vector<GaussianMixture> wrong(3);
    CHECK_THROWS_AS(oracle_anlp(sim.dataset, wrong), std::invalid_argument);
}

TEST_CASE("no estimator beats the oracle beyond noise") {
    SimConfig cfg = benchmark_sim_config(6);
    cfg.n_records = 20000;
    const SimOutput sim = generate(cfg);
    const SplitIndices idx = split_indices(sim.dataset.size(), {0.6, 0.2, 0.2}, 6);

    std::vector<Observation> train;
    std::vector<Observation> test;
    std::vector<GaussianMixture> test_truths;
    for (std::size_t i : idx.train) train.push_back(sim.dataset[i]);
    for (std::size_t i : idx.test) {
        test.push_back(sim.dataset[i]);
        test_truths.push_back(sim.truths[i]);
    }

    const double oracle_score = oracle_anlp(test, test_truths);

    // Standard error of the oracle ANLP over the test set.
    double sq = 0.0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const Observation& o = test[i];
        const double lp = o.won ? quantized_win_logprob(test_truths[i], *o.winning_price)
                                : quantized_lose_logprob(test_truths[i], o.bid_price);
        sq += (-lp - oracle_score) * (-lp - oracle_score);
    }
    const double se = std::sqrt(sq / static_cast<double>(test.size() - 1)) /
                      std::sqrt(static_cast<double>(test.size()));

    const KMEstimate km = km_fit(train);
    const RSModel rs = rs_fit(train);
    const double km_score = anlp(KmScorer(km), test).anlp;
    const double rs_score = anlp(RsScorer(rs), test).anlp;
    CHECK(km_score > oracle_score - 3.0 * se);
    CHECK(rs_score > oracle_score - 3.0 * se);
}

TEST_CASE("empirical win rate converges to the truth-implied rate") {
    SimConfig cfg = benchmark_sim_config(8);
    cfg.n_records = 100000;
    const SimOutput sim = generate(cfg);

    // P(win) = E_profile E_b[P(W <= b)] with b uniform over the integer
    // range: average the truth cdf over a subsample of records and bids.
    double expected = 0.0;
    const std::size_t step = 37;
    std::size_t used = 0;
    for (std::size_t i = 0; i < sim.truths.size(); i += step) {
        double p = 0.0;
        for (std::int64_t b = cfg.bid_policy.lo; b <= cfg.bid_policy.hi; b += 7) {
            p += 1.0 - std::exp(mixture_log_sf(sim.truths[i], static_cast<double>(b) + 0.5));
        }
        expected += p / static_cast<double>((cfg.bid_policy.hi - cfg.bid_policy.lo) / 7 + 1);
        ++used;
    }
    expected /= static_cast<double>(used);

    const double wr = win_rate(sim.dataset);
    const double se = std::sqrt(expected * (1.0 - expected) / static_cast<double>(cfg.n_records));
    CHECK(std::abs(wr - expected) < 3.0 * se + 0.01);
}

TEST_CASE("quadrature expected cost agrees with the closed form") {
    Rng rng(51);
    for (int rep = 0; rep < 100; ++rep) {
        GaussianMixture gm;
        const std::size_t k = 1 + rng.below(3);
        double wsum = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            gm.weights.push_back(0.1 + rng.uniform());
            gm.means.push_back(rng.uniform(20.0, 400.0));
            gm.stddevs.push_back(rng.uniform(2.0, 60.0));
            wsum += gm.weights.back();
        }
        for (double& w : gm.weights) w /= wsum;
        const double b = rng.uniform(0.0, 500.0);

        const double closed = expected_cost(gm, b);
        const double quad = true_expected_cost_check(gm, b);
        // Costs below a millionth of the price scale are zero for either
        // route; the relative error carries that scale floor.
        const double scale = std::max({closed, quad, 1e-6 * mixture_mean(gm)});
        CHECK(std::abs(closed - quad) / scale < 1e-6);
    }

    const GaussianMixture one{{1.0}, {100.0}, {10.0}};
    CHECK(true_expected_cost_check(one, 0.0) == 0.0);
    // b -> infinity approaches the mixture mean when mass below 0 is negligible.
    CHECK(true_expected_cost_check(one, 1e6) == doctest::Approx(100.0).epsilon(1e-9));
}

TEST_CASE("truth sidecar file round trips") {
    SimConfig cfg = benchmark_sim_config(12);
    cfg.n_records = 50;
    const SimOutput sim = generate(cfg);
    const std::string text = format_truth_file(sim.truths);
    const std::vector<GaussianMixture> back = parse_truth_file(text);
    REQUIRE(back.size() == sim.truths.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].weights == sim.truths[i].weights);
        CHECK(back[i].means == sim.truths[i].means);
        CHECK(back[i].stddevs == sim.truths[i].stddevs);
    }
}

TEST_CASE("truth-quantile bid policy centers the win rate") {
    SimConfig cfg = benchmark_sim_config(13);
    cfg.n_records = 20000;
    cfg.bid_policy.kind = BidPolicyKind::truth_quantile;
    cfg.bid_policy.quantile = 0.5;
    const SimOutput sim = generate(cfg);
    const double wr = win_rate(sim.dataset);
    CHECK(wr == doctest::Approx(0.5).epsilon(0.05));
}

// Acceptance suite: one pass/fail line per criterion, exit 0 only if all
// pass. Tolerances are pinned in code next to each check.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "landscape/common.hpp"
#include "landscape/evaluate.hpp"
#include "landscape/featurize.hpp"
#include "landscape/mixture.hpp"
#include "landscape/models.hpp"
#include "landscape/nonparametric.hpp"
#include "landscape/simulator.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace landscape;
namespace oracle = landscape::test;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

// ---------------------------------------------------------------------------
// Shared helpers

FeatureVector sparse_x(std::uint32_t dim, std::vector<std::uint32_t> active) {
    FeatureVector x;
    x.dimension = dim;
    x.active = std::move(active);
    return x;
}

Observation make_obs(FeatureVector x, std::int64_t bid, bool won, std::int64_t wp = 0) {
    Observation o;
    o.x = std::move(x);
    o.bid_price = bid;
    o.won = won;
    if (won) o.winning_price = wp;
    return o;
}

std::vector<Observation> random_batch(Rng& rng, std::uint32_t dim, std::size_t n) {
    std::vector<Observation> batch;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::uint32_t> active{0};
        for (std::uint32_t d = 1; d < dim; ++d) {
            if (rng.uniform() < 0.4) active.push_back(d);
        }
        const auto price = static_cast<std::int64_t>(rng.below(11));
        const bool won = rng.uniform() < 0.5;
        const std::int64_t bid = won ? price + static_cast<std::int64_t>(rng.below(5)) : price;
        batch.push_back(make_obs(sparse_x(dim, active), bid, won, price));
    }
    return batch;
}

GaussianMixture random_mixture(Rng& rng, std::size_t k_max, double mu_lo, double mu_hi,
                               double sd_lo, double sd_hi) {
    const std::size_t k = 1 + rng.below(k_max);
    GaussianMixture gm;
    double wsum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        gm.weights.push_back(0.05 + rng.uniform());
        gm.means.push_back(rng.uniform(mu_lo, mu_hi));
        gm.stddevs.push_back(rng.uniform(sd_lo, sd_hi));
        wsum += gm.weights.back();
    }
    for (double& w : gm.weights) w /= wsum;
    return gm;
}

// ---------------------------------------------------------------------------
// 1. Gradient correctness

template <typename Params, typename LossFn>
double worst_gradient_error(Rng& rng, Params params_template, const LossFn& loss_fn, int reps) {
    double worst = 0.0;
    const double h = 1e-5;
    for (int rep = 0; rep < reps; ++rep) {
        Params params = params_template;
        for (double& v : params.values) v = rng.normal() * 0.3;
        const std::vector<Observation> batch = random_batch(rng, params.dim, 10);

        const LossResult res = loss_fn(params, batch);
        std::vector<std::size_t> coords(params.values.size());
        std::iota(coords.begin(), coords.end(), std::size_t{0});
        shuffle_indices(coords, rng);
        coords.resize(std::min<std::size_t>(50, coords.size()));

        const auto loss_at = [&](const std::vector<double>& values) {
            Params q = params;
            q.values = values;
            return loss_fn(q, batch).loss;
        };
        const std::vector<double> fd = oracle::fd_gradient(loss_at, params.values, coords, h);
        for (std::size_t i = 0; i < coords.size(); ++i) {
            const double a = res.grad[coords[i]];
            const double denom = std::max({std::abs(a), std::abs(fd[i]), 1e-2});
            worst = std::max(worst, std::abs(a - fd[i]) / denom);
        }
    }
    return worst;
}

Outcome criterion_gradients() {
    Rng rng(101);
    const double l2 = 0.01;
    const double cr_err = worst_gradient_error(
        rng, CrParams::zeros(8),
        [&](const CrParams& p, std::span<const Observation> b) { return cr_negloglik(p, b, l2); }, 20);
    const double pcr_err = worst_gradient_error(
        rng, PcrParams::zeros(8),
        [&](const PcrParams& p, std::span<const Observation> b) { return pcr_negloglik(p, b, l2); }, 20);
    double mcnet_err = 0.0;
    for (std::uint32_t k : {1u, 2u, 4u}) {
        mcnet_err = std::max(
            mcnet_err,
            worst_gradient_error(
                rng, McnetParams::zeros(6, 5, k),
                [&](const McnetParams& p, std::span<const Observation> b) { return mcnet_negloglik(p, b, l2); },
                20));
    }
    std::ostringstream ss;
    ss << "max rel err cr=" << cr_err << " pcr=" << pcr_err << " mcnet=" << mcnet_err;
    return {cr_err < 1e-4 && pcr_err < 1e-4 && mcnet_err < 1e-4, ss.str()};
}

// ---------------------------------------------------------------------------
// 2. Reduction chain

Outcome criterion_reductions() {
    Rng rng(102);
    double worst_pcr_cr = 0.0;
    double worst_mcnet_pcr = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const std::uint32_t dim = 6;
        const std::vector<Observation> batch = random_batch(rng, dim, 8);

        CrParams cr = CrParams::zeros(dim);
        for (double& v : cr.values) v = rng.normal() * 0.4;
        PcrParams pcr_bias = PcrParams::zeros(dim);
        for (std::uint32_t d = 0; d < dim; ++d) pcr_bias.mean_weights()[d] = cr.mean_weights()[d];
        pcr_bias.sigma_weights()[0] = cr.log_sigma();
        worst_pcr_cr = std::max(worst_pcr_cr, std::abs(cr_negloglik(cr, batch, 0.25).loss -
                                                       pcr_negloglik(pcr_bias, batch, 0.25).loss));

        PcrParams pcr = PcrParams::zeros(dim);
        for (double& v : pcr.values) v = rng.normal() * 0.4;
        McnetParams net = McnetParams::zeros(dim, dim, 1);
        double* w1 = net.values.data() + net.w1_offset();
        for (std::uint32_t j = 0; j < dim; ++j) w1[j * dim + j] = 1.0;
        double* w2 = net.values.data() + net.w2_offset();
        for (std::uint32_t d = 0; d < dim; ++d) {
            w2[d] = pcr.mean_weights()[d];
            w2[dim + d] = pcr.sigma_weights()[d];
        }
        worst_mcnet_pcr = std::max(worst_mcnet_pcr, std::abs(pcr_negloglik(pcr, batch, 0.0).loss -
                                                             mcnet_negloglik(net, batch, 0.0).loss));
    }
    std::ostringstream ss;
    ss << "max |pcr-cr|=" << worst_pcr_cr << " |mcnet-pcr|=" << worst_mcnet_pcr;
    return {worst_pcr_cr < 1e-9 && worst_mcnet_pcr < 1e-9, ss.str()};
}

// ---------------------------------------------------------------------------
// 3. Normalization

Outcome criterion_normalization() {
    Rng rng(103);
    double worst_pdf = 0.0;
    double worst_bins = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
        const GaussianMixture gm = random_mixture(rng, 4, 0.0, 300.0, 0.5, 40.0);
        double lo = gm.means[0];
        double hi = gm.means[0];
        double max_sd = 0.0;
        for (std::size_t k = 0; k < gm.components(); ++k) {
            lo = std::min(lo, gm.means[k]);
            hi = std::max(hi, gm.means[k]);
            max_sd = std::max(max_sd, gm.stddevs[k]);
        }
        lo -= 10.0 * max_sd;
        hi += 10.0 * max_sd;

        // Quantized bins + both tails, every repetition (tol 1e-9).
        oracle::KahanSum bins;
        const auto ilo = static_cast<std::int64_t>(std::floor(lo));
        const auto ihi = static_cast<std::int64_t>(std::ceil(hi));
        for (std::int64_t v = ilo; v <= ihi; ++v) bins.add(std::exp(log_bin_prob(gm, v)));
        bins.add(std::exp(mixture_log_sf(gm, static_cast<double>(ihi) + 0.5)));
        bins.add(1.0 - std::exp(mixture_log_sf(gm, static_cast<double>(ilo) - 0.5)));
        worst_bins = std::max(worst_bins, std::abs(bins.value() - 1.0));

        // Quadrature of the pdf + analytic tails (tol 1e-6) on a subsample;
        // full quadrature for 1000 mixtures costs minutes, 200 is plenty.
        if (rep % 5 == 0) {
            const double body = oracle::integrate(
                [&](double w) { return std::exp(mixture_log_pdf(gm, w)); }, lo, hi, 1e-9);
            const double tails = std::exp(mixture_log_cdf(gm, lo)) + std::exp(mixture_log_sf(gm, hi));
            worst_pdf = std::max(worst_pdf, std::abs(body + tails - 1.0));
        }
    }
    std::ostringstream ss;
    ss << "max |pdf integral - 1|=" << worst_pdf << " max |bin sum - 1|=" << worst_bins;
    return {worst_pdf < 1e-6 && worst_bins < 1e-9, ss.str()};
}

// ---------------------------------------------------------------------------
// 4. Expected cost

Outcome criterion_expected_cost() {
    Rng rng(104);
    double worst_rel = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const GaussianMixture gm = random_mixture(rng, 3, 20.0, 400.0, 2.0, 60.0);
        const double b = rng.uniform(0.0, 500.0);
        const double closed = expected_cost(gm, b);
        const double quad = true_expected_cost_check(gm, b);
        // Costs below 1e-6 of the price scale are zero for either route.
        const double scale = std::max({closed, quad, 1e-6 * mixture_mean(gm)});
        worst_rel = std::max(worst_rel, std::abs(closed - quad) / scale);
    }

    bool monotone = true;
    bool below_mean = true;
    for (int rep = 0; rep < 20; ++rep) {
        // Means well clear of zero (sigma <= mu/6) so the landscape has no
        // real mass below zero, the regime the strict E[W] bound describes.
        GaussianMixture gm = random_mixture(rng, 3, 50.0, 400.0, 5.0, 50.0);
        for (std::size_t k = 0; k < gm.components(); ++k) {
            gm.stddevs[k] = std::min(gm.stddevs[k], gm.means[k] / 6.0);
        }
        const double mean = mixture_mean(gm);
        double prev = 0.0;
        for (double b = 0.0; b <= 600.0; b += 6.0) {
            const double c = expected_cost(gm, b);
            monotone &= c >= prev - 1e-9;
            if (std::exp(mixture_log_sf(gm, b)) > 1e-6) below_mean &= c < mean;
            prev = c;
        }
    }
    std::ostringstream ss;
    ss << "max rel err=" << worst_rel << " monotone=" << monotone << " below E[W]=" << below_mean;
    return {worst_rel < 1e-6 && monotone && below_mean, ss.str()};
}

// ---------------------------------------------------------------------------
// 5. KM correctness

Outcome criterion_km() {
    Rng rng(105);

    // Uncensored: exact empirical equality.
    bool exact = true;
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<Observation> data;
        std::map<std::int64_t, std::size_t> freq;
        const std::size_t n = 50 + rng.below(200);
        for (std::size_t i = 0; i < n; ++i) {
            const auto w = static_cast<std::int64_t>(rng.below(40));
            data.push_back(make_obs(sparse_x(1, {0}), w + 5, true, w));
            ++freq[w];
        }
        const KMEstimate est = km_fit(data);
        exact &= est.tail_mass == 0.0;
        for (std::size_t i = 0; i < est.prices.size(); ++i) {
            exact &= est.pmf[i] == static_cast<double>(freq.at(est.prices[i])) / static_cast<double>(n);
        }
    }

    // Hand-worked product limit: won@2, lost@2, won@3, lost@4.
    std::vector<Observation> hand{make_obs(sparse_x(1, {0}), 2, true, 2),
                                  make_obs(sparse_x(1, {0}), 2, false),
                                  make_obs(sparse_x(1, {0}), 3, true, 3),
                                  make_obs(sparse_x(1, {0}), 4, false)};
    const KMEstimate est = km_fit(hand);
    const bool hand_ok = est.prices == std::vector<std::int64_t>{2, 3} &&
                         std::abs(est.pmf[0] - 0.25) < 1e-15 &&
                         std::abs(est.pmf[1] - 0.375) < 1e-15 &&
                         std::abs(est.tail_mass - 0.375) < 1e-15;

    // Sum-to-one on random censored datasets.
    double worst_sum = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<Observation> data;
        const std::size_t n = 20 + rng.below(300);
        for (std::size_t i = 0; i < n; ++i) {
            const auto price = static_cast<std::int64_t>(rng.below(60));
            const auto bid = static_cast<std::int64_t>(rng.below(60));
            data.push_back(bid >= price ? make_obs(sparse_x(1, {0}), bid, true, price)
                                        : make_obs(sparse_x(1, {0}), bid, false));
        }
        const KMEstimate e = km_fit(data);
        double sum = e.tail_mass;
        for (double p : e.pmf) sum += p;
        worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
    }
    std::ostringstream ss;
    ss << "empirical exact=" << exact << " hand oracle S(2)=0.75 S(3)=0.375 ok=" << hand_ok
       << " max |sum-1|=" << worst_sum;
    return {exact && hand_ok && worst_sum < 1e-9, ss.str()};
}

// ---------------------------------------------------------------------------
// 6 + 7. Synthetic ordering on the pinned benchmark, baseline sanity

struct BenchmarkMeans {
    double oracle = 0.0;
    double mcnet = 0.0;
    double pcr = 0.0;
    double cr = 0.0;
    double km = 0.0;
    double rs = 0.0;
};

BenchmarkMeans run_benchmark() {
    BenchmarkMeans sums;
    const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    for (std::uint64_t seed : seeds) {
        const SimOutput sim = generate(benchmark_sim_config(seed));
        const SplitIndices idx = split_indices(sim.dataset.size(), {0.6, 0.2, 0.2}, seed);
        std::vector<Observation> train_set;
        std::vector<Observation> test;
        std::vector<GaussianMixture> test_truths;
        train_set.reserve(idx.train.size());
        test.reserve(idx.test.size());
        for (std::size_t i : idx.train) train_set.push_back(sim.dataset[i]);
        for (std::size_t i : idx.test) {
            test.push_back(sim.dataset[i]);
            test_truths.push_back(sim.truths[i]);
        }

        TrainConfig cfg;
        cfg.learning_rate = 0.05;
        cfg.batch_size = 1024;
        cfg.l2 = 1e-6;
        cfg.max_epochs = 300;
        cfg.early_stop_patience = 30;
        cfg.early_stop_min_delta = 1e-5;
        cfg.seed = seed;
        cfg.k = 2;
        cfg.hidden = 64;

        sums.oracle += anlp(OracleScorer(test_truths), test).anlp;
        sums.cr += anlp(ParametricScorer(train(ModelKind::cr, train_set, cfg).params), test).anlp;
        sums.pcr += anlp(ParametricScorer(train(ModelKind::pcr, train_set, cfg).params), test).anlp;
        sums.mcnet += anlp(ParametricScorer(train(ModelKind::mcnet, train_set, cfg).params), test).anlp;
        sums.km += anlp(KmScorer(km_fit(train_set)), test).anlp;
        sums.rs += anlp(RsScorer(rs_fit(train_set)), test).anlp;
    }
    const double n = static_cast<double>(seeds.size());
    sums.oracle /= n;
    sums.mcnet /= n;
    sums.pcr /= n;
    sums.cr /= n;
    sums.km /= n;
    sums.rs /= n;
    return sums;
}

Outcome criterion_ordering(const BenchmarkMeans& m) {
    const bool order = m.mcnet < m.pcr - 0.01 && m.pcr < m.cr - 0.01;
    const bool near_oracle = m.mcnet - m.oracle < 0.10;
    std::ostringstream ss;
    ss << "mean anlp oracle=" << m.oracle << " mcnet=" << m.mcnet << " pcr=" << m.pcr
       << " cr=" << m.cr << " (gaps " << m.pcr - m.mcnet << ", " << m.cr - m.pcr
       << "; oracle gap " << m.mcnet - m.oracle << ")";
    return {order && near_oracle, ss.str()};
}

Outcome criterion_baselines(const BenchmarkMeans& m) {
    const bool km_beats_rs = m.km < m.rs - 0.05;
    const bool mcnet_beats_km = m.mcnet < m.km;
    std::ostringstream ss;
    ss << "km=" << m.km << " rs=" << m.rs << " mcnet=" << m.mcnet;
    return {km_beats_rs && mcnet_beats_km, ss.str()};
}

// ---------------------------------------------------------------------------
// 8. RS closed form

Outcome criterion_rs() {
    Rng rng(108);
    double worst = 0.0;
    for (int dataset = 0; dataset < 3; ++dataset) {
        std::vector<Observation> train;
        std::vector<Observation> test;
        const auto z = static_cast<std::int64_t>(150 + rng.below(300));
        for (int i = 0; i < 4000; ++i) {
            const auto b = static_cast<std::int64_t>(1 + rng.below(static_cast<std::uint64_t>(z)));
            const bool won = rng.uniform() < 0.35;
            auto& dst = i % 4 == 0 ? test : train;
            dst.push_back(won ? make_obs(sparse_x(1, {0}), b, true,
                                         static_cast<std::int64_t>(rng.below(b + 1)))
                              : make_obs(sparse_x(1, {0}), b, false));
        }
        train.push_back(make_obs(sparse_x(1, {0}), z, false));

        const RSModel m = rs_fit(train);
        const double lib = anlp(RsScorer(m), test).anlp;
        double direct = 0.0;
        for (const Observation& o : test) {
            direct -= o.won ? std::log(m.p_win / static_cast<double>(m.z_max))
                            : std::log((1.0 - m.p_win) +
                                       m.p_win * (static_cast<double>(m.z_max) -
                                                  static_cast<double>(o.bid_price)) /
                                           static_cast<double>(m.z_max));
        }
        direct /= static_cast<double>(test.size());
        worst = std::max(worst, std::abs(lib - direct));
    }
    std::ostringstream ss;
    ss << "max |library - closed form|=" << worst;
    return {worst < 1e-12, ss.str()};
}

// ---------------------------------------------------------------------------
// 9. Determinism through the CLI

int run_cli(const std::string& args) {
    const std::string cmd = std::string(LANDSCAPE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
}

Outcome criterion_determinism() {
    const fs::path dir = "acceptance_tmp";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto p = [&](const std::string& s) { return (dir / s).string(); };

    write_file(p("sim.cfg"),
               "n_fields=3\nattrs_per_field=4\nn_records=3000\ncomponents=2\n"
               "mean_lo=50\nmean_hi=400\nsigma_lo=5\nsigma_hi=60\n"
               "bid_policy=uniform\nbid_lo=0\nbid_hi=350\n");
    if (run_cli("simulate --config " + p("sim.cfg") + " --seed 7 --out " + p("d")) != 0) {
        return {false, "simulate failed"};
    }

    bool ok = true;
    std::ostringstream ss;
    for (const std::string model : {"cr", "pcr", "mcnet"}) {
        const std::string flags = "train --model " + model + " --lr 0.1 --epochs 5 --seed 11 --data " +
                                  p("d/log.tsv");
        ok &= run_cli(flags + " --threads 1 --out " + p(model + "_t1")) == 0;
        ok &= run_cli(flags + " --threads 4 --out " + p(model + "_t4")) == 0;
        const bool same_model =
            read_file(p(model + "_t1/model.json")) == read_file(p(model + "_t4/model.json"));
        ok &= same_model;

        ok &= run_cli("eval --data " + p("d/log.tsv") + " --model-file " + p(model + "_t1/model.json") +
                      " --seed 11 --out " + p(model + "_e1")) == 0;
        ok &= run_cli("eval --data " + p("d/log.tsv") + " --model-file " + p(model + "_t4/model.json") +
                      " --seed 11 --out " + p(model + "_e2")) == 0;
        const bool same_report =
            read_file(p(model + "_e1/eval.json")) == read_file(p(model + "_e2/eval.json"));
        ok &= same_report;
        ss << model << (same_model && same_report ? " ok " : " MISMATCH ");
    }

    // Baseline reports repeat byte-for-byte too.
    for (const std::string baseline : {"km", "rs"}) {
        ok &= run_cli("eval --data " + p("d/log.tsv") + " --baseline " + baseline + " --seed 11 --out " +
                      p(baseline + "_e1")) == 0;
        ok &= run_cli("eval --data " + p("d/log.tsv") + " --baseline " + baseline + " --seed 11 --out " +
                      p(baseline + "_e2")) == 0;
        const bool same = read_file(p(baseline + "_e1/eval.json")) == read_file(p(baseline + "_e2/eval.json"));
        ok &= same;
        ss << baseline << (same ? " ok " : " MISMATCH ");
    }
    fs::remove_all(dir);
    return {ok, ss.str()};
}

// ---------------------------------------------------------------------------
// 10. Gaussian fit to a discrete estimate

Outcome criterion_gaussian_fit() {
    const GaussianMixture g{{1.0}, {100.0}, {20.0}};
    KMEstimate est;
    est.max_bid = 300;
    for (std::int64_t v = 0; v <= 300; ++v) {
        est.prices.push_back(v);
        est.pmf.push_back(std::exp(log_bin_prob(g, v)));
    }
    est.pmf[0] += std::exp(mixture_log_cdf(g, -0.5));
    est.tail_mass = std::exp(mixture_log_sf(g, 300.5));
    const GaussianFit recover = fit_gaussian_to_km(est);
    const bool recovered =
        std::abs(recover.mu - 100.0) / 100.0 < 0.01 && std::abs(recover.sigma - 20.0) / 20.0 < 0.01;

    // Synthetic cluster: low peak at 75, tail mass 0.6 beyond the max bid.
    const GaussianMixture peak{{1.0}, {75.0}, {10.0}};
    KMEstimate heavy;
    heavy.max_bid = 150;
    double body = 0.0;
    for (std::int64_t v = 0; v <= 150; ++v) {
        heavy.prices.push_back(v);
        heavy.pmf.push_back(std::exp(log_bin_prob(peak, v)));
        body += heavy.pmf.back();
    }
    for (double& pm : heavy.pmf) pm *= 0.4 / body;
    heavy.tail_mass = 0.6;
    const GaussianFit shifted = fit_gaussian_to_km(heavy);
    const bool mean_above_peak = shifted.mu > 75.0;

    std::ostringstream ss;
    ss << "recovered mu=" << recover.mu << " sigma=" << recover.sigma
       << "; heavy-tail fit mu=" << shifted.mu << " sigma=" << shifted.sigma << " (peak at 75)";
    return {recovered && mean_above_peak, ss.str()};
}

}  // namespace

int main() {
    int failures = 0;
    const auto report = [&](int number, const std::string& name, const Outcome& outcome) {
        std::printf("[%s] %02d %s: %s\n", outcome.pass ? "PASS" : "FAIL", number, name.c_str(),
                    outcome.detail.c_str());
        std::fflush(stdout);
        if (!outcome.pass) ++failures;
    };

    report(1, "gradient-correctness", criterion_gradients());
    report(2, "reduction-chain", criterion_reductions());
    report(3, "normalization", criterion_normalization());
    report(4, "expected-cost", criterion_expected_cost());
    report(5, "km-correctness", criterion_km());

    const BenchmarkMeans means = run_benchmark();
    report(6, "synthetic-ordering", criterion_ordering(means));
    report(7, "baseline-sanity", criterion_baselines(means));

    report(8, "rs-closed-form", criterion_rs());
    report(9, "determinism", criterion_determinism());
    report(10, "gaussian-fit", criterion_gaussian_fit());

    if (failures > 0) {
        std::printf("%d criterion(s) failed\n", failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}

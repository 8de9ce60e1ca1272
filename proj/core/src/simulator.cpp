#include "landscape/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "landscape/common.hpp"
#include "landscape/parallel.hpp"

namespace landscape {

namespace {

// Per-field contribution amplitudes of the additive ground truth. Chosen so
// component means never leave [mean_lo, mean_hi] and log-sigmas never hit
// the [sigma_lo, sigma_hi] clamp for 4-field profiles, keeping the truth an
// exactly additive function of the one-hot features.
constexpr double kMeanJitterFrac = 0.06;    // of the mean span, per field
constexpr double kLogSigmaJitter = 0.31;    // per field
constexpr double kWeightLogitJitter = 0.55; // per field

double unit_hash(std::uint64_t seed, std::uint64_t tag, std::uint64_t field, std::uint64_t attr,
                 std::uint64_t component) {
    std::uint64_t h = splitmix64(seed ^ tag);
    h = splitmix64(h + field + 1);
    h = splitmix64(h + attr + 1);
    h = splitmix64(h + component + 1);
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double signed_hash(std::uint64_t seed, std::uint64_t tag, std::uint64_t field, std::uint64_t attr,
                   std::uint64_t component) {
    return 2.0 * unit_hash(seed, tag, field, attr, component) - 1.0;
}

const std::uint64_t kTagMean = fnv1a64("truth-mean");
const std::uint64_t kTagSigma = fnv1a64("truth-sigma");
const std::uint64_t kTagWeight = fnv1a64("truth-weight");
const std::uint64_t kTagRecord = fnv1a64("record");

std::string field_name(std::uint32_t f) { return "f" + std::to_string(f); }
std::string attr_name(std::uint32_t a) { return "a" + std::to_string(a); }

Vocabulary canonical_vocabulary(const SimConfig& config) {
    Vocabulary vocab;
    vocab.trim_threshold = 0;
    std::uint32_t next = 1;
    // std::map ordering matches what build_vocabulary produces for the same
    // field/attribute universe, so models trained either way are aligned.
    for (std::uint32_t f = 0; f < config.n_fields; ++f) vocab.index_of[field_name(f)];
    for (auto& [field, attrs] : vocab.index_of) {
        std::map<std::string, std::uint32_t> sorted;
        for (std::uint32_t a = 0; a < config.attrs_per_field; ++a) sorted[attr_name(a)] = 0;
        for (auto& [attr, idx] : sorted) idx = next++;
        attrs = std::move(sorted);
        vocab.other_bins[field] = next++;
    }
    vocab.dimension = next;
    return vocab;
}

}  // namespace

SimConfig SimConfig::from_config(const KeyValueConfig& kv) {
    SimConfig c;
    c.n_fields = static_cast<std::uint32_t>(kv.get_int("n_fields", c.n_fields));
    c.attrs_per_field = static_cast<std::uint32_t>(kv.get_int("attrs_per_field", c.attrs_per_field));
    c.n_records = static_cast<std::uint64_t>(kv.get_int("n_records", static_cast<std::int64_t>(c.n_records)));
    c.truth.components = static_cast<std::uint32_t>(kv.get_int("components", c.truth.components));
    c.truth.mean_lo = kv.get_double("mean_lo", c.truth.mean_lo);
    c.truth.mean_hi = kv.get_double("mean_hi", c.truth.mean_hi);
    c.truth.sigma_lo = kv.get_double("sigma_lo", c.truth.sigma_lo);
    c.truth.sigma_hi = kv.get_double("sigma_hi", c.truth.sigma_hi);
    const std::string policy = kv.get_or("bid_policy", "uniform");
    if (policy == "fixed") {
        c.bid_policy.kind = BidPolicyKind::fixed;
        c.bid_policy.fixed = kv.get_int("bid_fixed", 0);
    } else if (policy == "uniform") {
        c.bid_policy.kind = BidPolicyKind::uniform;
        c.bid_policy.lo = kv.get_int("bid_lo", 0);
        c.bid_policy.hi = kv.get_int("bid_hi", 350);
    } else if (policy == "quantile") {
        c.bid_policy.kind = BidPolicyKind::truth_quantile;
        c.bid_policy.quantile = kv.get_double("bid_quantile", 0.5);
    } else {
        throw DataError("sim config: unknown bid_policy '" + policy + "'");
    }
    c.seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));
    if (c.n_fields == 0 || c.attrs_per_field == 0 || c.n_records == 0 || c.truth.components == 0) {
        throw DataError("sim config: counts must be positive");
    }
    if (!(c.truth.mean_lo < c.truth.mean_hi) || !(c.truth.sigma_lo < c.truth.sigma_hi) ||
        c.truth.sigma_lo < 1.0) {
        throw DataError("sim config: invalid truth ranges (sigmas must be >= 1)");
    }
    if (c.bid_policy.kind == BidPolicyKind::uniform && c.bid_policy.hi < c.bid_policy.lo) {
        throw DataError("sim config: bid_hi < bid_lo");
    }
    return c;
}

SimConfig benchmark_sim_config(std::uint64_t seed) {
    SimConfig c;
    c.seed = seed;
    return c;
}

GaussianMixture truth_for_profile(const SimConfig& config, std::span<const std::uint32_t> attrs) {
    if (attrs.size() != config.n_fields) throw std::invalid_argument("truth_for_profile: attrs size mismatch");
    const TruthSpec& t = config.truth;
    const std::uint32_t k_count = t.components;
    const double span = t.mean_hi - t.mean_lo;
    const double sigma_center = std::sqrt(t.sigma_lo * t.sigma_hi);

    GaussianMixture gm;
    gm.means.resize(k_count);
    gm.stddevs.resize(k_count);
    std::vector<double> logits(k_count, 0.0);
    for (std::uint32_t k = 0; k < k_count; ++k) {
        // Component centers sit at fractions 0.15..0.75 of the mean range so
        // uniform bids over a comparable range censor roughly half the data.
        const double frac = 0.15 + 0.6 * (static_cast<double>(k) + 0.5) / static_cast<double>(k_count);
        double mean = t.mean_lo + frac * span;
        double log_sigma = std::log(sigma_center);
        double logit = 0.0;
        for (std::uint32_t f = 0; f < config.n_fields; ++f) {
            mean += kMeanJitterFrac * span * signed_hash(config.seed, kTagMean, f, attrs[f], k);
            log_sigma += kLogSigmaJitter * signed_hash(config.seed, kTagSigma, f, attrs[f], k);
            logit += kWeightLogitJitter * signed_hash(config.seed, kTagWeight, f, attrs[f], k);
        }
        gm.means[k] = std::clamp(mean, t.mean_lo, t.mean_hi);
        gm.stddevs[k] = std::clamp(std::exp(log_sigma), t.sigma_lo, t.sigma_hi);
        logits[k] = logit;
    }
    double mx = logits[0];
    for (double l : logits) mx = std::max(mx, l);
    double denom = 0.0;
    for (double l : logits) denom += std::exp(l - mx);
    gm.weights.resize(k_count);
    for (std::uint32_t k = 0; k < k_count; ++k) gm.weights[k] = std::exp(logits[k] - mx) / denom;
    return gm;
}

SimOutput generate(const SimConfig& config) {
    SimOutput out;
    out.vocab = canonical_vocabulary(config);
    const std::size_t n = config.n_records;
    out.raw.resize(n);
    out.dataset.resize(n);
    out.truths.resize(n);

    for_each_chunk(n, 4096, config.threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        std::vector<std::uint32_t> attrs(config.n_fields);
        for (std::size_t i = begin; i < end; ++i) {
            Rng rng(mix_seed(mix_seed(config.seed, kTagRecord), i));
            for (std::uint32_t f = 0; f < config.n_fields; ++f) {
                attrs[f] = static_cast<std::uint32_t>(rng.below(config.attrs_per_field));
            }
            GaussianMixture truth = truth_for_profile(config, attrs);

            // Winning price: sample a component, then its normal draw.
            const double u = rng.uniform();
            std::size_t comp = truth.components() - 1;
            double acc = 0.0;
            for (std::size_t k = 0; k < truth.components(); ++k) {
                acc += truth.weights[k];
                if (u < acc) {
                    comp = k;
                    break;
                }
            }
            const double w_real = truth.means[comp] + truth.stddevs[comp] * rng.normal();
            const std::int64_t w = std::max<std::int64_t>(0, std::llround(w_real));

            std::int64_t bid = 0;
            switch (config.bid_policy.kind) {
                case BidPolicyKind::fixed:
                    bid = config.bid_policy.fixed;
                    break;
                case BidPolicyKind::uniform:
                    bid = config.bid_policy.lo +
                          static_cast<std::int64_t>(rng.below(
                              static_cast<std::uint64_t>(config.bid_policy.hi - config.bid_policy.lo) + 1));
                    break;
                case BidPolicyKind::truth_quantile:
                    bid = std::max<std::int64_t>(
                        0, std::llround(mixture_quantile(truth, config.bid_policy.quantile)));
                    break;
            }

            RawRecord raw;
            raw.fields.reserve(config.n_fields);
            for (std::uint32_t f = 0; f < config.n_fields; ++f) {
                raw.fields.emplace_back(field_name(f), attr_name(attrs[f]));
            }
            raw.bid_price = bid;
            raw.won = bid >= w;
            if (raw.won) raw.winning_price = w;

            Observation obs;
            obs.bid_price = bid;
            obs.won = raw.won;
            obs.winning_price = raw.winning_price;
            obs.x.dimension = out.vocab.dimension;
            obs.x.active.reserve(config.n_fields + 1);
            obs.x.active.push_back(0);
            for (std::uint32_t f = 0; f < config.n_fields; ++f) {
                obs.x.active.push_back(out.vocab.index_of.at(field_name(f)).at(attr_name(attrs[f])));
            }
            std::sort(obs.x.active.begin(), obs.x.active.end());

            out.raw[i] = std::move(raw);
            out.dataset[i] = std::move(obs);
            out.truths[i] = std::move(truth);
        }
    });
    return out;
}

double oracle_anlp(std::span<const Observation> dataset, std::span<const GaussianMixture> truths) {
    if (dataset.size() != truths.size()) throw std::invalid_argument("oracle_anlp: length mismatch");
    if (dataset.empty()) throw std::invalid_argument("oracle_anlp: empty dataset");
    double sum = 0.0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const Observation& o = dataset[i];
        sum -= o.won ? quantized_win_logprob(truths[i], *o.winning_price)
                     : quantized_lose_logprob(truths[i], o.bid_price);
    }
    return sum / static_cast<double>(dataset.size());
}

// ---------------------------------------------------------------------------
// Quadrature check

namespace {

double simpson(const GaussianMixture& gm, double a, double m, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double integrand(const GaussianMixture& gm, double w) {
    return w * std::exp(mixture_log_pdf(gm, w));
}

double adaptive_step(const GaussianMixture& gm, double a, double b, double fa, double fm, double fb,
                     double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = integrand(gm, lm);
    const double frm = integrand(gm, rm);
    const double left = simpson(gm, a, lm, m, fa, flm, fm);
    const double right = simpson(gm, m, rm, b, fm, frm, fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    return adaptive_step(gm, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_step(gm, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double adaptive_integral(const GaussianMixture& gm, double a, double b, double tol) {
    if (!(b > a)) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = integrand(gm, a);
    const double fm = integrand(gm, m);
    const double fb = integrand(gm, b);
    const double whole = simpson(gm, a, m, b, fa, fm, fb);
    return adaptive_step(gm, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace

double true_expected_cost_check(const GaussianMixture& truth, double b) {
    if (b < 0.0) throw std::invalid_argument("true_expected_cost_check: bid must be >= 0");
    if (b == 0.0) return 0.0;
    // Piecewise knots around each component keep the adaptive rule from
    // missing localized mass on very wide intervals.
    std::set<double> knots{0.0, b};
    for (std::size_t k = 0; k < truth.components(); ++k) {
        for (double j : {-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0}) {
            const double p = truth.means[k] + j * truth.stddevs[k];
            if (p > 0.0 && p < b) knots.insert(p);
        }
    }
    double total = 0.0;
    double prev = 0.0;
    bool first = true;
    for (double p : knots) {
        if (!first) total += adaptive_integral(truth, prev, p, 1e-12 * (1.0 + std::abs(p - prev)));
        prev = p;
        first = false;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Truth sidecar file

std::string format_truth_file(std::span<const GaussianMixture> truths) {
    std::ostringstream out;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        const GaussianMixture& gm = truths[i];
        out << i << '\t' << gm.components();
        for (double w : gm.weights) out << '\t' << format_double(w);
        for (double m : gm.means) out << '\t' << format_double(m);
        for (double s : gm.stddevs) out << '\t' << format_double(s);
        out << '\n';
    }
    return out.str();
}

std::vector<GaussianMixture> parse_truth_file(std::string_view text) {
    std::vector<GaussianMixture> truths;
    std::size_t line_no = 0;
    for (const std::string& line : split(text, '\n')) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::vector<std::string> cols = split(line, '\t');
        if (cols.size() < 2) throw DataError("truth file: bad line " + std::to_string(line_no));
        const auto id = static_cast<std::size_t>(parse_int64(cols[0], "truth record id"));
        const auto k = static_cast<std::size_t>(parse_int64(cols[1], "truth component count"));
        if (id != truths.size()) throw DataError("truth file: non-sequential record id at line " + std::to_string(line_no));
        if (cols.size() != 2 + 3 * k) throw DataError("truth file: wrong column count at line " + std::to_string(line_no));
        GaussianMixture gm;
        for (std::size_t i = 0; i < k; ++i) gm.weights.push_back(parse_double(cols[2 + i], "truth weight"));
        for (std::size_t i = 0; i < k; ++i) gm.means.push_back(parse_double(cols[2 + k + i], "truth mean"));
        for (std::size_t i = 0; i < k; ++i) gm.stddevs.push_back(parse_double(cols[2 + 2 * k + i], "truth sigma"));
        gm.validate();
        truths.push_back(std::move(gm));
    }
    return truths;
}

}  // namespace landscape

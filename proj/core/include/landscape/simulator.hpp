#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "landscape/featurize.hpp"
#include "landscape/mixture.hpp"

namespace landscape {

enum class BidPolicyKind { fixed, uniform, truth_quantile };

struct BidPolicy {
    BidPolicyKind kind = BidPolicyKind::uniform;
    std::int64_t fixed = 0;           // fixed
    std::int64_t lo = 0;              // uniform
    std::int64_t hi = 350;            // uniform (inclusive)
    double quantile = 0.5;            // truth_quantile
};

/// Spec for the synthetic ground truth. Each feature profile maps
/// deterministically (seeded hashing) to a mixture whose component means,
/// log-stddevs and weight logits are additive per-field contributions, so
/// the conditional law is a fixed function of the profile.
struct TruthSpec {
    std::uint32_t components = 2;
    double mean_lo = 50.0;
    double mean_hi = 400.0;
    double sigma_lo = 5.0;
    double sigma_hi = 60.0;
};

struct SimConfig {
    std::uint32_t n_fields = 4;
    std::uint32_t attrs_per_field = 8;
    std::uint64_t n_records = 50000;
    TruthSpec truth;
    BidPolicy bid_policy;
    std::uint64_t seed = 0;
    int threads = 1;

    static SimConfig from_config(const class KeyValueConfig& kv);
};

/// The pinned benchmark configuration: 4 fields x 8 attributes, 50k records,
/// 2-component heteroscedastic truths with means in [50, 400] and sigmas in
/// [5, 60], bids uniform on [0, 350]. Produces roughly half censored data.
SimConfig benchmark_sim_config(std::uint64_t seed);

struct SimRecord {
    Observation observation;
    GaussianMixture truth;
};

struct SimOutput {
    std::vector<RawRecord> raw;          // featurize log form
    std::vector<Observation> dataset;    // encoded against `vocab`
    std::vector<GaussianMixture> truths; // aligned with dataset
    Vocabulary vocab;                    // canonical untrimmed vocabulary
};

/// Deterministic per seed and independent of the thread count: every record
/// draws its profile, winning price (rounded, clamped >= 0) and bid from its
/// own seeded substream; won iff bid >= winning price.
SimOutput generate(const SimConfig& config);

/// Conditional law for an explicit attribute choice per field (attribute
/// index per field, -1 entries forbidden). Used to inspect the ground truth.
GaussianMixture truth_for_profile(const SimConfig& config, std::span<const std::uint32_t> attrs);

/// ANLP of the generating mixtures themselves: quantized win/lose scoring of
/// each record against its own truth. The in-expectation floor no estimator
/// can beat. Throws std::invalid_argument on a length mismatch.
double oracle_anlp(std::span<const Observation> dataset, std::span<const GaussianMixture> truths);

/// Adaptive-quadrature version of the expected cost integral
/// integral_0^b w p(w) dw, kept as an independent check of the closed form.
double true_expected_cost_check(const GaussianMixture& truth, double b);

// Sidecar truth file: record_id \t K \t pi.. \t mu.. \t sigma.. (tab-separated)
std::string format_truth_file(std::span<const GaussianMixture> truths);
std::vector<GaussianMixture> parse_truth_file(std::string_view text);

}  // namespace landscape

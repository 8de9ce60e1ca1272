#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "landscape/featurize.hpp"
#include "landscape/mixture.hpp"
#include "landscape/models.hpp"
#include "landscape/nonparametric.hpp"
#include "landscape/simulator.hpp"

namespace landscape {

/// Anything that can score a record: parametric models through quantized
/// probabilities, KM/RS through their own discrete laws, the simulator
/// oracle through the per-record ground truth (hence the record index).
class Scorer {
public:
    virtual ~Scorer() = default;
    virtual std::string kind() const = 0;
    virtual double logprob_win(std::size_t index, const Observation& obs) const = 0;
    virtual double logprob_lose(std::size_t index, const Observation& obs) const = 0;
};

class ParametricScorer : public Scorer {
public:
    explicit ParametricScorer(const ModelParams& params) : params_(params) {}
    std::string kind() const override { return model_kind_name(kind_of(params_)); }
    double logprob_win(std::size_t, const Observation& obs) const override;
    double logprob_lose(std::size_t, const Observation& obs) const override;

private:
    const ModelParams& params_;
};

class KmScorer : public Scorer {
public:
    explicit KmScorer(const KMEstimate& est) : survival_(est) {}
    std::string kind() const override { return "km"; }
    double logprob_win(std::size_t, const Observation& obs) const override;
    double logprob_lose(std::size_t, const Observation& obs) const override;

private:
    KMSurvival survival_;
};

class RsScorer : public Scorer {
public:
    explicit RsScorer(const RSModel& model) : model_(model) {}
    std::string kind() const override { return "rs"; }
    double logprob_win(std::size_t, const Observation& obs) const override;
    double logprob_lose(std::size_t, const Observation& obs) const override;

private:
    RSModel model_;
};

class OracleScorer : public Scorer {
public:
    explicit OracleScorer(std::span<const GaussianMixture> truths) : truths_(truths) {}
    std::string kind() const override { return "oracle"; }
    double logprob_win(std::size_t index, const Observation& obs) const override;
    double logprob_lose(std::size_t index, const Observation& obs) const override;

private:
    std::span<const GaussianMixture> truths_;
};

/// Average negative log probability: won records scored by the quantized
/// bin probability at the winning price, lost records by the survival at
/// bid - 0.5, both floored at kProbFloor; N = wins + losses.
struct ANLPReport {
    double anlp = 0.0;
    std::size_t n_win = 0;
    std::size_t n_lose = 0;
    double anlp_win = 0.0;   // average over won records only
    double anlp_lose = 0.0;  // average over lost records only
    std::string model_kind;
};

ANLPReport anlp(const Scorer& scorer, std::span<const Observation> dataset);

// ---------------------------------------------------------------------------
// Landscape curves (price, pmf, cdf rows plus a TAIL mass line)

struct LandscapePoint {
    std::int64_t price = 0;
    double pmf = 0.0;
    double cdf = 0.0;
};

struct LandscapeCurve {
    std::vector<LandscapePoint> points;
    double tail_mass = 0.0;
};

/// Quantized curve of a predicted mixture over [lo, hi]. Throws
/// std::invalid_argument on an empty range.
LandscapeCurve mixture_landscape(const GaussianMixture& gm, std::int64_t lo, std::int64_t hi);
LandscapeCurve model_landscape(const ModelParams& params, const FeatureVector& x, std::int64_t lo,
                               std::int64_t hi);
/// KM pmf verbatim; prices outside [lo, hi] fold into the tail.
LandscapeCurve km_landscape(const KMEstimate& est, std::int64_t lo, std::int64_t hi);

/// CSV form: header, one "price,pmf,cdf" row per point, final "TAIL,mass,1".
std::string landscape_to_csv(const LandscapeCurve& curve);
LandscapeCurve landscape_from_csv(std::string_view text);

/// Rebuilds a discrete estimate from an exported curve (support = positive
/// pmf rows). Mass missing below the curve range is folded into the lowest
/// support point so the estimate sums to one.
KMEstimate km_from_landscape(const LandscapeCurve& curve);

// ---------------------------------------------------------------------------
// Multi-seed experiments

struct ExperimentSpec {
    std::vector<std::string> models;           // cr|pcr|mcnet|km|rs|oracle
    std::string data_path;                     // empty when simulating
    std::optional<SimConfig> sim;              // seed field overridden per run
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::uint64_t trim_threshold = 10;
    BinSpec bins;
    TrainConfig base_train;
    std::vector<double> l2_grid{1e-6};
    std::vector<std::uint32_t> k_grid{2};      // mcnet only
    std::string digest;

    static ExperimentSpec parse(const KeyValueConfig& kv);
};

struct SeedRun {
    std::uint64_t seed = 0;
    ANLPReport test;
    double valid_anlp = 0.0;
    double best_l2 = 0.0;
    std::uint32_t best_k = 0;
};

/// Per-model aggregate: mean and sample standard deviation of the per-seed
/// test ANLPs. The first seed's fitted model (or KM estimate) is kept so
/// callers can export landscape curves without retraining.
struct ExperimentReport {
    std::string model;
    std::vector<SeedRun> runs;
    double mean = 0.0;
    double std_dev = 0.0;
    std::string config_digest;
    std::optional<ModelParams> sample_params;
    std::optional<KMEstimate> sample_km;
};

/// For each seed: (re)generate or re-split the data, fit every requested
/// model (hyperparameters selected on validation ANLP), and score the test
/// split. Seeds are paired across models: each seed sees one dataset.
std::vector<ExperimentReport> run_experiment(const ExperimentSpec& spec);

std::string experiment_report_json(std::span<const ExperimentReport> reports);
std::string anlp_report_json(const ANLPReport& report);

}  // namespace landscape

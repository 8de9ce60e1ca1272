#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "landscape/featurize.hpp"
#include "landscape/mixture.hpp"

namespace landscape {

enum class ModelKind { cr, pcr, mcnet };

std::string model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(std::string_view name);

// Parameters are stored as one flat vector per model so the optimizer,
// finite-difference checks and serialization all work on a single layout.

/// Censored regression: W ~ N(mean_weights . x, exp(log_sigma)^2) with one
/// global noise scale, reparameterized through its log to stay positive.
struct CrParams {
    std::uint32_t dim = 0;
    std::vector<double> values;  // [mean_weights(dim), log_sigma]

    static CrParams zeros(std::uint32_t dim);
    std::span<double> mean_weights() { return {values.data(), dim}; }
    std::span<const double> mean_weights() const { return {values.data(), dim}; }
    double& log_sigma() { return values[dim]; }
    double log_sigma() const { return values[dim]; }
};

/// Heteroscedastic censored regression: per-record scale
/// sigma_i = exp(sigma_weights . x_i).
struct PcrParams {
    std::uint32_t dim = 0;
    std::vector<double> values;  // [mean_weights(dim), sigma_weights(dim)]

    static PcrParams zeros(std::uint32_t dim);
    std::span<double> mean_weights() { return {values.data(), dim}; }
    std::span<const double> mean_weights() const { return {values.data(), dim}; }
    std::span<double> sigma_weights() { return {values.data() + dim, dim}; }
    std::span<const double> sigma_weights() const { return {values.data() + dim, dim}; }
};

/// Mixture density censored network: one ReLU hidden layer, then a 3K-wide
/// output layer split into mean / log-sigma / weight-logit blocks.
struct McnetParams {
    std::uint32_t dim = 0;     // D, input columns
    std::uint32_t hidden = 0;  // H
    std::uint32_t k = 0;       // mixture components
    std::vector<double> values;  // [W1(H*D row-major), b1(H), W2(3K*H row-major), b2(3K)]

    static McnetParams zeros(std::uint32_t dim, std::uint32_t hidden, std::uint32_t k);
    std::size_t w1_offset() const { return 0; }
    std::size_t b1_offset() const { return static_cast<std::size_t>(hidden) * dim; }
    std::size_t w2_offset() const { return b1_offset() + hidden; }
    std::size_t b2_offset() const { return w2_offset() + static_cast<std::size_t>(3) * k * hidden; }
    std::size_t size() const { return b2_offset() + 3 * k; }
};

using ModelParams = std::variant<CrParams, PcrParams, McnetParams>;

ModelKind kind_of(const ModelParams& params);
std::uint32_t dimension_of(const ModelParams& params);

/// Predicted winning-price distribution for one feature vector. Predicted
/// stddevs are clamped to [kSigmaMin, kSigmaMax]. Throws DataError on
/// dimension mismatch.
GaussianMixture predict(const ModelParams& params, const FeatureVector& x);

/// Forward pass of the mixture network (softmax with max subtraction,
/// sigma = clamped exp).
GaussianMixture mcnet_forward(const McnetParams& params, const FeatureVector& x);

/// Loss/gradient of one batch. loss = data_nll + l2/2 * ||weights||^2 where
/// the L2 term covers weight matrices / non-bias coefficients only (bias
/// column 0, log_sigma and layer biases are unpenalized). grad matches the
/// flat parameter layout. Throws NumericError (with the batch index) if a
/// record produces a non-finite term.
struct LossResult {
    double loss = 0.0;      // data_nll + regularization
    double data_nll = 0.0;  // negative log-likelihood alone
    std::vector<double> grad;
};

LossResult cr_negloglik(const CrParams& params, std::span<const Observation> data,
                        std::span<const std::size_t> batch, double l2, int threads = 1);
LossResult pcr_negloglik(const PcrParams& params, std::span<const Observation> data,
                         std::span<const std::size_t> batch, double l2, int threads = 1);
LossResult mcnet_negloglik(const McnetParams& params, std::span<const Observation> data,
                           std::span<const std::size_t> batch, double l2, int threads = 1);

// Whole-span convenience overloads (tests and small batches).
LossResult cr_negloglik(const CrParams& params, std::span<const Observation> batch, double l2);
LossResult pcr_negloglik(const PcrParams& params, std::span<const Observation> batch, double l2);
LossResult mcnet_negloglik(const McnetParams& params, std::span<const Observation> batch, double l2);

// ---------------------------------------------------------------------------
// Adam

struct AdamState {
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    std::uint64_t step_count = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState for_size(std::size_t n);
};

/// In-place bias-corrected Adam update.
void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state, double lr);

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
    double learning_rate = 1e-3;
    std::uint32_t batch_size = 1024;
    double l2 = 0.0;
    std::uint32_t max_epochs = 50;
    std::uint32_t early_stop_patience = 5;
    double early_stop_min_delta = 1e-4;
    std::uint64_t seed = 0;
    std::uint32_t k = 2;       // mcnet only
    std::uint32_t hidden = 64; // mcnet only
    // 0.01-scaled initialization keeps initial exp() scales sane; setting
    // standard_normal_init uses unscaled N(0,1) draws for every parameter
    // and no data-driven intercepts.
    double init_scale = 0.01;
    bool standard_normal_init = false;
    int threads = 1;
};

struct TrainResult {
    ModelParams params;
    std::vector<double> history;  // mean per-record data NLL per epoch
    std::uint32_t epochs_run = 0;
};

/// Called after every epoch with (1-based epoch, mean train loss, params).
using EpochCallback = std::function<void(std::uint32_t, double, const ModelParams&)>;

/// Mini-batch Adam training with per-epoch reshuffling and early stopping on
/// the training loss (no validation peeking). Fully reproducible for a fixed
/// seed and independent of the thread count. Throws std::invalid_argument on
/// an empty training set.
TrainResult train(ModelKind kind, std::span<const Observation> train_set, const TrainConfig& config,
                  const EpochCallback& callback = {});

// ---------------------------------------------------------------------------
// Model files: JSON with base64 little-endian f64 arrays.

std::string save_model(const ModelParams& params, const std::string& vocab_checksum);

struct LoadedModel {
    ModelParams params;
    std::string vocab_checksum;
};

/// Throws DataError on malformed/truncated input. Callers compare
/// vocab_checksum against the vocabulary they plan to encode with.
LoadedModel load_model(std::string_view bytes);

}  // namespace landscape

#include "landscape/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "landscape/common.hpp"
#include "landscape/parallel.hpp"

namespace landscape {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;
constexpr std::size_t kGradChunk = 256;  // fixed so reductions ignore the thread count

double sparse_dot(std::span<const double> weights, const FeatureVector& x) {
    double sum = 0.0;
    for (std::uint32_t d : x.active) sum += weights[d];
    return sum;
}

/// phi(z)/Phi(z), stable for arbitrarily negative z via log space.
double hazard_ratio(double z) {
    return std::exp(log_std_normal_pdf(z) - log_std_normal_cdf(z));
}

void check_finite(double value, std::size_t batch_index) {
    if (!std::isfinite(value)) {
        throw NumericError("non-finite loss term at batch index " + std::to_string(batch_index));
    }
}

std::vector<std::size_t> identity_indices(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return idx;
}

}  // namespace

std::string model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::cr: return "cr";
        case ModelKind::pcr: return "pcr";
        case ModelKind::mcnet: return "mcnet";
    }
    return "?";
}

ModelKind model_kind_from_name(std::string_view name) {
    if (name == "cr") return ModelKind::cr;
    if (name == "pcr") return ModelKind::pcr;
    if (name == "mcnet") return ModelKind::mcnet;
    throw DataError("unknown model kind: '" + std::string(name) + "'");
}

CrParams CrParams::zeros(std::uint32_t dim) {
    CrParams p;
    p.dim = dim;
    p.values.assign(static_cast<std::size_t>(dim) + 1, 0.0);
    return p;
}

PcrParams PcrParams::zeros(std::uint32_t dim) {
    PcrParams p;
    p.dim = dim;
    p.values.assign(static_cast<std::size_t>(dim) * 2, 0.0);
    return p;
}

McnetParams McnetParams::zeros(std::uint32_t dim, std::uint32_t hidden, std::uint32_t k) {
    McnetParams p;
    p.dim = dim;
    p.hidden = hidden;
    p.k = k;
    p.values.assign(p.size(), 0.0);
    return p;
}

ModelKind kind_of(const ModelParams& params) {
    if (std::holds_alternative<CrParams>(params)) return ModelKind::cr;
    if (std::holds_alternative<PcrParams>(params)) return ModelKind::pcr;
    return ModelKind::mcnet;
}

std::uint32_t dimension_of(const ModelParams& params) {
    return std::visit([](const auto& p) { return p.dim; }, params);
}

// ---------------------------------------------------------------------------
// Forward passes

namespace {

/// Cached intermediates of one mcnet forward pass, reused by backprop.
struct McnetActivations {
    std::vector<double> hidden;    // H, post-ReLU
    std::vector<double> mu;        // K
    std::vector<double> sigma;     // K, clamped exp
    std::vector<double> log_pi;    // K
    std::vector<double> pi;        // K
    std::vector<bool> clamped;     // K, sigma hit a clamp (zero gradient)
};

McnetActivations mcnet_activations(const McnetParams& p, const FeatureVector& x) {
    const std::size_t h_count = p.hidden;
    const std::size_t k_count = p.k;
    const double* w1 = p.values.data() + p.w1_offset();
    const double* b1 = p.values.data() + p.b1_offset();
    const double* w2 = p.values.data() + p.w2_offset();
    const double* b2 = p.values.data() + p.b2_offset();

    McnetActivations act;
    act.hidden.resize(h_count);
    for (std::size_t j = 0; j < h_count; ++j) {
        double pre = b1[j];
        const double* row = w1 + j * p.dim;
        for (std::uint32_t d : x.active) pre += row[d];
        act.hidden[j] = pre > 0.0 ? pre : 0.0;
    }

    std::vector<double> z(3 * k_count);
    for (std::size_t o = 0; o < 3 * k_count; ++o) {
        double v = b2[o];
        const double* row = w2 + o * h_count;
        for (std::size_t j = 0; j < h_count; ++j) v += row[j] * act.hidden[j];
        z[o] = v;
    }

    act.mu.assign(z.begin(), z.begin() + k_count);
    act.sigma.resize(k_count);
    act.clamped.resize(k_count);
    for (std::size_t i = 0; i < k_count; ++i) {
        const double raw = std::exp(z[k_count + i]);
        const double clamped = std::clamp(raw, kSigmaMin, kSigmaMax);
        act.sigma[i] = clamped;
        act.clamped[i] = clamped != raw;
    }

    // Softmax over the weight logits, max-subtracted.
    double mx = z[2 * k_count];
    for (std::size_t i = 1; i < k_count; ++i) mx = std::max(mx, z[2 * k_count + i]);
    double denom = 0.0;
    for (std::size_t i = 0; i < k_count; ++i) denom += std::exp(z[2 * k_count + i] - mx);
    const double log_denom = std::log(denom);
    act.log_pi.resize(k_count);
    act.pi.resize(k_count);
    for (std::size_t i = 0; i < k_count; ++i) {
        act.log_pi[i] = z[2 * k_count + i] - mx - log_denom;
        act.pi[i] = std::exp(act.log_pi[i]);
    }
    return act;
}

}  // namespace

namespace {

/// Routes the 3K output-layer gradients through W2, the ReLU hidden layer
/// and the sparse input columns into the flat gradient vector.
void mcnet_backprop(const McnetParams& p, const FeatureVector& x, const McnetActivations& act,
                    std::span<const double> gz, std::vector<double>& grad) {
    const std::size_t h_count = p.hidden;
    const std::size_t out_count = 3 * static_cast<std::size_t>(p.k);
    const double* w2 = p.values.data() + p.w2_offset();
    double* g_w1 = grad.data() + p.w1_offset();
    double* g_b1 = grad.data() + p.b1_offset();
    double* g_w2 = grad.data() + p.w2_offset();
    double* g_b2 = grad.data() + p.b2_offset();

    for (std::size_t o = 0; o < out_count; ++o) {
        const double g = gz[o];
        if (g == 0.0) continue;
        g_b2[o] += g;
        double* row = g_w2 + o * h_count;
        for (std::size_t j = 0; j < h_count; ++j) row[j] += g * act.hidden[j];
    }
    for (std::size_t j = 0; j < h_count; ++j) {
        if (act.hidden[j] <= 0.0) continue;  // ReLU gate
        double gh = 0.0;
        for (std::size_t o = 0; o < out_count; ++o) gh += w2[o * h_count + j] * gz[o];
        if (gh == 0.0) continue;
        g_b1[j] += gh;
        double* row = g_w1 + j * p.dim;
        for (std::uint32_t d : x.active) row[d] += gh;
    }
}

}  // namespace

GaussianMixture mcnet_forward(const McnetParams& params, const FeatureVector& x) {
    if (x.dimension != params.dim) throw DataError("mcnet_forward: feature dimension mismatch");
    const McnetActivations act = mcnet_activations(params, x);
    GaussianMixture gm;
    gm.weights = act.pi;
    gm.means = act.mu;
    gm.stddevs = act.sigma;
    return gm;
}

GaussianMixture predict(const ModelParams& params, const FeatureVector& x) {
    if (x.dimension != dimension_of(params)) throw DataError("predict: feature dimension mismatch");
    if (const auto* cr = std::get_if<CrParams>(&params)) {
        const double mu = sparse_dot(cr->mean_weights(), x);
        const double sigma = std::clamp(std::exp(cr->log_sigma()), kSigmaMin, kSigmaMax);
        return GaussianMixture{{1.0}, {mu}, {sigma}};
    }
    if (const auto* pcr = std::get_if<PcrParams>(&params)) {
        const double mu = sparse_dot(pcr->mean_weights(), x);
        const double sigma = std::clamp(std::exp(sparse_dot(pcr->sigma_weights(), x)), kSigmaMin, kSigmaMax);
        return GaussianMixture{{1.0}, {mu}, {sigma}};
    }
    return mcnet_forward(std::get<McnetParams>(params), x);
}

// ---------------------------------------------------------------------------
// Losses

namespace {

/// Shared chunked map-reduce: per-chunk partial loss and gradient merged in
/// chunk order, so results do not depend on the worker count.
template <typename RecordFn>
LossResult chunked_loss(std::size_t param_count, std::span<const std::size_t> batch, int threads,
                        RecordFn&& per_record) {
    const std::size_t n_chunks = (batch.size() + kGradChunk - 1) / kGradChunk;
    struct Partial {
        double nll = 0.0;
        std::vector<double> grad;
        std::string error;
    };
    std::vector<Partial> partials(n_chunks);
    for_each_chunk(batch.size(), kGradChunk, threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
        Partial& part = partials[c];
        part.grad.assign(param_count, 0.0);
        try {
            for (std::size_t i = begin; i < end; ++i) {
                part.nll += per_record(i, batch[i], part.grad);
            }
        } catch (const std::exception& e) {
            part.error = e.what();
        }
    });

    LossResult result;
    result.grad.assign(param_count, 0.0);
    for (const Partial& part : partials) {
        if (!part.error.empty()) throw NumericError(part.error);
        result.data_nll += part.nll;
        for (std::size_t i = 0; i < param_count; ++i) result.grad[i] += part.grad[i];
    }
    return result;
}

/// l2/2 * sum of squared weights over [begin, end), skipping `skip` (the
/// bias column). Adds the matching gradient.
double add_l2(std::span<const double> values, std::span<double> grad, std::size_t begin, std::size_t end,
              std::size_t skip, double l2) {
    if (l2 == 0.0) return 0.0;
    double acc = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
        if (i == skip) continue;
        acc += values[i] * values[i];
        grad[i] += l2 * values[i];
    }
    return 0.5 * l2 * acc;
}

}  // namespace

LossResult cr_negloglik(const CrParams& params, std::span<const Observation> data,
                        std::span<const std::size_t> batch, double l2, int threads) {
    if (batch.empty()) throw std::invalid_argument("cr_negloglik: empty batch");
    const double s = params.log_sigma();
    const double sigma = std::exp(s);
    const std::span<const double> beta = params.mean_weights();
    const std::size_t s_index = params.dim;

    LossResult result = chunked_loss(
        params.values.size(), batch, threads,
        [&](std::size_t pos, std::size_t rec_idx, std::vector<double>& grad) {
            const Observation& obs = data[rec_idx];
            const double m = sparse_dot(beta, obs.x);
            double term;
            double d_m;
            double d_s;
            if (obs.won) {
                const double r = (static_cast<double>(*obs.winning_price) - m) / sigma;
                term = s + 0.5 * r * r + kHalfLog2Pi;
                d_m = -r / sigma;
                d_s = 1.0 - r * r;
            } else {
                const double z = (m - static_cast<double>(obs.bid_price)) / sigma;
                term = -log_std_normal_cdf(z);
                const double ratio = hazard_ratio(z);
                d_m = -ratio / sigma;
                d_s = z * ratio;
            }
            check_finite(term, pos);
            for (std::uint32_t d : obs.x.active) grad[d] += d_m;
            grad[s_index] += d_s;
            return term;
        });

    result.loss = result.data_nll + add_l2(params.values, result.grad, 0, params.dim, 0, l2);
    return result;
}

LossResult pcr_negloglik(const PcrParams& params, std::span<const Observation> data,
                         std::span<const std::size_t> batch, double l2, int threads) {
    if (batch.empty()) throw std::invalid_argument("pcr_negloglik: empty batch");
    const std::span<const double> beta = params.mean_weights();
    const std::span<const double> alpha = params.sigma_weights();
    const std::size_t alpha_off = params.dim;

    LossResult result = chunked_loss(
        params.values.size(), batch, threads,
        [&](std::size_t pos, std::size_t rec_idx, std::vector<double>& grad) {
            const Observation& obs = data[rec_idx];
            const double m = sparse_dot(beta, obs.x);
            const double sv = sparse_dot(alpha, obs.x);
            const double sigma = std::exp(sv);
            double term;
            double d_m;
            double d_sv;
            if (obs.won) {
                const double r = (static_cast<double>(*obs.winning_price) - m) / sigma;
                term = sv + 0.5 * r * r + kHalfLog2Pi;
                d_m = -r / sigma;
                d_sv = 1.0 - r * r;
            } else {
                const double z = (m - static_cast<double>(obs.bid_price)) / sigma;
                term = -log_std_normal_cdf(z);
                const double ratio = hazard_ratio(z);
                d_m = -ratio / sigma;
                d_sv = z * ratio;
            }
            check_finite(term, pos);
            for (std::uint32_t d : obs.x.active) {
                grad[d] += d_m;
                grad[alpha_off + d] += d_sv;
            }
            return term;
        });

    double reg = add_l2(params.values, result.grad, 0, params.dim, 0, l2);
    reg += add_l2(params.values, result.grad, alpha_off, alpha_off + params.dim, alpha_off, l2);
    result.loss = result.data_nll + reg;
    return result;
}

LossResult mcnet_negloglik(const McnetParams& params, std::span<const Observation> data,
                           std::span<const std::size_t> batch, double l2, int threads) {
    if (batch.empty()) throw std::invalid_argument("mcnet_negloglik: empty batch");
    const std::size_t k_count = params.k;

    LossResult result = chunked_loss(
        params.values.size(), batch, threads,
        [&](std::size_t pos, std::size_t rec_idx, std::vector<double>& grad) {
            const Observation& obs = data[rec_idx];
            if (obs.x.dimension != params.dim) throw NumericError("mcnet_negloglik: dimension mismatch");
            const McnetActivations act = mcnet_activations(params, obs.x);

            // Per-component log terms a_k, posterior responsibilities q_k and
            // the gradient of the record loss w.r.t. the 3K outputs.
            std::vector<double> a(k_count);
            std::vector<double> gz(3 * k_count, 0.0);
            double record_nll;
            if (obs.won) {
                const double w = static_cast<double>(*obs.winning_price);
                for (std::size_t i = 0; i < k_count; ++i) {
                    const double r = (w - act.mu[i]) / act.sigma[i];
                    a[i] = act.log_pi[i] - std::log(act.sigma[i]) + log_std_normal_pdf(r);
                }
                const double lse = log_sum_exp(a);
                record_nll = -lse;
                check_finite(record_nll, pos);
                for (std::size_t i = 0; i < k_count; ++i) {
                    const double q = std::exp(a[i] - lse);
                    const double r = (w - act.mu[i]) / act.sigma[i];
                    gz[i] = -q * r / act.sigma[i];
                    gz[k_count + i] = act.clamped[i] ? 0.0 : -q * (r * r - 1.0);
                    gz[2 * k_count + i] = act.pi[i] - q;
                }
            } else {
                const double b = static_cast<double>(obs.bid_price);
                for (std::size_t i = 0; i < k_count; ++i) {
                    const double t = (act.mu[i] - b) / act.sigma[i];
                    a[i] = act.log_pi[i] + log_std_normal_cdf(t);
                }
                const double lse = log_sum_exp(a);
                record_nll = -lse;
                check_finite(record_nll, pos);
                for (std::size_t i = 0; i < k_count; ++i) {
                    const double q = std::exp(a[i] - lse);
                    const double t = (act.mu[i] - b) / act.sigma[i];
                    const double ratio = hazard_ratio(t);
                    gz[i] = -q * ratio / act.sigma[i];
                    gz[k_count + i] = act.clamped[i] ? 0.0 : q * ratio * t;
                    gz[2 * k_count + i] = act.pi[i] - q;
                }
            }
            mcnet_backprop(params, obs.x, act, gz, grad);
            return record_nll;
        });

    double reg = 0.0;
    if (l2 != 0.0) {
        // Weight matrices only; layer biases stay unpenalized.
        const std::span<const double> v = params.values;
        const std::span<double> g = result.grad;
        reg += add_l2(v, g, params.w1_offset(), params.b1_offset(), params.values.size(), l2);
        reg += add_l2(v, g, params.w2_offset(), params.b2_offset(), params.values.size(), l2);
    }
    result.loss = result.data_nll + reg;
    return result;
}

LossResult cr_negloglik(const CrParams& params, std::span<const Observation> batch, double l2) {
    return cr_negloglik(params, batch, identity_indices(batch.size()), l2, 1);
}
LossResult pcr_negloglik(const PcrParams& params, std::span<const Observation> batch, double l2) {
    return pcr_negloglik(params, batch, identity_indices(batch.size()), l2, 1);
}
LossResult mcnet_negloglik(const McnetParams& params, std::span<const Observation> batch, double l2) {
    return mcnet_negloglik(params, batch, identity_indices(batch.size()), l2, 1);
}

// ---------------------------------------------------------------------------
// Adam

AdamState AdamState::for_size(std::size_t n) {
    AdamState s;
    s.first_moment.assign(n, 0.0);
    s.second_moment.assign(n, 0.0);
    return s;
}

void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state, double lr) {
    if (params.size() != grad.size() || params.size() != state.first_moment.size()) {
        throw std::invalid_argument("adam_step: shape mismatch");
    }
    state.step_count += 1;
    const double t = static_cast<double>(state.step_count);
    const double corr1 = 1.0 - std::pow(state.beta1, t);
    const double corr2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grad[i];
        state.first_moment[i] = state.beta1 * state.first_moment[i] + (1.0 - state.beta1) * g;
        state.second_moment[i] = state.beta2 * state.second_moment[i] + (1.0 - state.beta2) * g * g;
        const double m_hat = state.first_moment[i] / corr1;
        const double v_hat = state.second_moment[i] / corr2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
}

// ---------------------------------------------------------------------------
// Training

namespace {

struct PriceStats {
    double mean = 0.0;
    double stddev = 1.0;
    std::vector<double> sorted_wins;  // empty when no won auctions

    double quantile(double q) const {
        if (sorted_wins.empty()) return mean;
        const double pos = q * static_cast<double>(sorted_wins.size() - 1);
        const auto idx = static_cast<std::size_t>(std::llround(pos));
        return sorted_wins[std::min(idx, sorted_wins.size() - 1)];
    }
};

PriceStats price_stats(std::span<const Observation> data) {
    PriceStats st;
    std::vector<double> values;
    for (const Observation& o : data) {
        if (o.won) values.push_back(static_cast<double>(*o.winning_price));
    }
    if (values.empty()) {
        for (const Observation& o : data) values.push_back(static_cast<double>(o.bid_price));
    } else {
        st.sorted_wins = values;
        std::sort(st.sorted_wins.begin(), st.sorted_wins.end());
    }
    double sum = 0.0;
    for (double v : values) sum += v;
    st.mean = sum / static_cast<double>(values.size());
    double sq = 0.0;
    for (double v : values) sq += (v - st.mean) * (v - st.mean);
    st.stddev = std::max(std::sqrt(sq / static_cast<double>(values.size())), 1.0);
    return st;
}

ModelParams init_params(ModelKind kind, std::uint32_t dim, const TrainConfig& cfg,
                        std::span<const Observation> data, Rng& rng) {
    const double scale = cfg.standard_normal_init ? 1.0 : cfg.init_scale;
    const auto fill = [&](std::vector<double>& values) {
        for (double& v : values) v = rng.normal() * scale;
    };

    if (kind == ModelKind::cr) {
        CrParams p = CrParams::zeros(dim);
        fill(p.values);
        p.log_sigma() = rng.normal() * scale;
        if (!cfg.standard_normal_init) {
            const PriceStats st = price_stats(data);
            p.mean_weights()[0] = st.mean;
            p.log_sigma() = std::log(st.stddev);
        }
        return p;
    }
    if (kind == ModelKind::pcr) {
        PcrParams p = PcrParams::zeros(dim);
        fill(p.values);
        if (!cfg.standard_normal_init) {
            const PriceStats st = price_stats(data);
            p.mean_weights()[0] = st.mean;
            p.sigma_weights()[0] = std::log(st.stddev);
        }
        return p;
    }
    McnetParams p = McnetParams::zeros(dim, cfg.hidden, cfg.k);
    fill(p.values);
    if (!cfg.standard_normal_init) {
        const PriceStats st = price_stats(data);
        double* b1 = p.values.data() + p.b1_offset();
        for (std::size_t j = 0; j < p.hidden; ++j) b1[j] = 0.0;
        double* b2 = p.values.data() + p.b2_offset();
        for (std::size_t i = 0; i < p.k; ++i) {
            // Spread component means across the observed price quantiles so
            // the mixture starts in the right price range.
            b2[i] = st.quantile((static_cast<double>(i) + 0.5) / static_cast<double>(p.k));
            b2[p.k + i] = std::log(st.stddev);
            b2[2 * p.k + i] = 0.0;
        }
    }
    return p;
}

std::vector<double>& values_of(ModelParams& params) {
    return std::visit([](auto& p) -> std::vector<double>& { return p.values; }, params);
}

}  // namespace

TrainResult train(ModelKind kind, std::span<const Observation> train_set, const TrainConfig& config,
                  const EpochCallback& callback) {
    if (train_set.empty()) throw std::invalid_argument("train: empty training set");
    const std::uint32_t dim = train_set[0].x.dimension;

    Rng init_rng(mix_seed(config.seed, fnv1a64("init")));
    TrainResult result;
    result.params = init_params(kind, dim, config, train_set, init_rng);
    std::vector<double>& values = values_of(result.params);
    AdamState state = AdamState::for_size(values.size());

    std::vector<std::size_t> indices(train_set.size());
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    Rng shuffle_rng(mix_seed(config.seed, fnv1a64("shuffle")));

    const std::size_t n = train_set.size();
    const std::size_t batch_size = std::max<std::size_t>(1, config.batch_size);
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t bad_epochs = 0;

    for (std::uint32_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        shuffle_indices(indices, shuffle_rng);
        double nll_sum = 0.0;
        for (std::size_t start = 0; start < n; start += batch_size) {
            const std::size_t end = std::min(n, start + batch_size);
            const std::span<const std::size_t> batch(indices.data() + start, end - start);
            LossResult step;
            switch (kind) {
                case ModelKind::cr:
                    step = cr_negloglik(std::get<CrParams>(result.params), train_set, batch, config.l2,
                                        config.threads);
                    break;
                case ModelKind::pcr:
                    step = pcr_negloglik(std::get<PcrParams>(result.params), train_set, batch, config.l2,
                                         config.threads);
                    break;
                case ModelKind::mcnet:
                    step = mcnet_negloglik(std::get<McnetParams>(result.params), train_set, batch, config.l2,
                                           config.threads);
                    break;
            }
            nll_sum += step.data_nll;
            adam_step(values, step.grad, state, config.learning_rate);
        }
        const double epoch_loss = nll_sum / static_cast<double>(n);
        result.history.push_back(epoch_loss);
        result.epochs_run = epoch;
        if (callback) callback(epoch, epoch_loss, result.params);

        if (epoch_loss < best - config.early_stop_min_delta) {
            best = epoch_loss;
            bad_epochs = 0;
        } else {
            ++bad_epochs;
            if (bad_epochs >= config.early_stop_patience) break;
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Serialization

std::string save_model(const ModelParams& params, const std::string& vocab_checksum) {
    nlohmann::json doc;
    doc["vocab_checksum"] = vocab_checksum;
    doc["kind"] = model_kind_name(kind_of(params));
    doc["dim"] = dimension_of(params);
    nlohmann::json arrays;
    if (const auto* cr = std::get_if<CrParams>(&params)) {
        doc["hidden"] = 0;
        doc["k"] = 1;
        arrays["mean_weights"] = doubles_to_base64(cr->mean_weights());
        const double s = cr->log_sigma();
        arrays["log_sigma"] = doubles_to_base64(std::span<const double>(&s, 1));
    } else if (const auto* pcr = std::get_if<PcrParams>(&params)) {
        doc["hidden"] = 0;
        doc["k"] = 1;
        arrays["mean_weights"] = doubles_to_base64(pcr->mean_weights());
        arrays["sigma_weights"] = doubles_to_base64(pcr->sigma_weights());
    } else {
        const auto& m = std::get<McnetParams>(params);
        doc["hidden"] = m.hidden;
        doc["k"] = m.k;
        const double* v = m.values.data();
        arrays["w1"] = doubles_to_base64({v + m.w1_offset(), static_cast<std::size_t>(m.hidden) * m.dim});
        arrays["b1"] = doubles_to_base64({v + m.b1_offset(), m.hidden});
        arrays["w2"] = doubles_to_base64({v + m.w2_offset(), static_cast<std::size_t>(3) * m.k * m.hidden});
        arrays["b2"] = doubles_to_base64({v + m.b2_offset(), static_cast<std::size_t>(3) * m.k});
    }
    doc["arrays"] = arrays;
    return doc.dump(2) + "\n";
}

LoadedModel load_model(std::string_view bytes) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("model file: invalid JSON: ") + e.what());
    }
    try {
        LoadedModel out;
        out.vocab_checksum = doc.at("vocab_checksum").get<std::string>();
        const ModelKind kind = model_kind_from_name(doc.at("kind").get<std::string>());
        const auto dim = doc.at("dim").get<std::uint32_t>();
        const auto& arrays = doc.at("arrays");
        const auto read = [&](const char* name, std::size_t expect) {
            std::vector<double> v = base64_to_doubles(arrays.at(name).get<std::string>());
            if (v.size() != expect) throw DataError(std::string("model file: array '") + name + "' has wrong length");
            return v;
        };
        if (kind == ModelKind::cr) {
            CrParams p = CrParams::zeros(dim);
            const std::vector<double> beta = read("mean_weights", dim);
            const std::vector<double> s = read("log_sigma", 1);
            std::copy(beta.begin(), beta.end(), p.values.begin());
            p.log_sigma() = s[0];
            out.params = std::move(p);
        } else if (kind == ModelKind::pcr) {
            PcrParams p = PcrParams::zeros(dim);
            const std::vector<double> beta = read("mean_weights", dim);
            const std::vector<double> alpha = read("sigma_weights", dim);
            std::copy(beta.begin(), beta.end(), p.values.begin());
            std::copy(alpha.begin(), alpha.end(), p.values.begin() + dim);
            out.params = std::move(p);
        } else {
            const auto hidden = doc.at("hidden").get<std::uint32_t>();
            const auto k = doc.at("k").get<std::uint32_t>();
            if (hidden == 0 || k == 0) throw DataError("model file: mcnet requires hidden >= 1 and k >= 1");
            McnetParams p = McnetParams::zeros(dim, hidden, k);
            const std::vector<double> w1 = read("w1", static_cast<std::size_t>(hidden) * dim);
            const std::vector<double> b1 = read("b1", hidden);
            const std::vector<double> w2 = read("w2", static_cast<std::size_t>(3) * k * hidden);
            const std::vector<double> b2 = read("b2", static_cast<std::size_t>(3) * k);
            auto it = p.values.begin();
            it = std::copy(w1.begin(), w1.end(), it);
            it = std::copy(b1.begin(), b1.end(), it);
            it = std::copy(w2.begin(), w2.end(), it);
            std::copy(b2.begin(), b2.end(), it);
            out.params = std::move(p);
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("model file: missing or malformed field: ") + e.what());
    }
}

}  // namespace landscape

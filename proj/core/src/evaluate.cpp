#include "landscape/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "landscape/common.hpp"

namespace landscape {

double ParametricScorer::logprob_win(std::size_t, const Observation& obs) const {
    return quantized_win_logprob(predict(params_, obs.x), *obs.winning_price);
}
double ParametricScorer::logprob_lose(std::size_t, const Observation& obs) const {
    return quantized_lose_logprob(predict(params_, obs.x), obs.bid_price);
}

double KmScorer::logprob_win(std::size_t, const Observation& obs) const {
    return survival_.logprob_win(*obs.winning_price);
}
double KmScorer::logprob_lose(std::size_t, const Observation& obs) const {
    return survival_.logprob_lose(obs.bid_price);
}

double RsScorer::logprob_win(std::size_t, const Observation& obs) const {
    return rs_logprob_win(model_, *obs.winning_price);
}
double RsScorer::logprob_lose(std::size_t, const Observation& obs) const {
    return rs_logprob_lose(model_, obs.bid_price);
}

double OracleScorer::logprob_win(std::size_t index, const Observation& obs) const {
    return quantized_win_logprob(truths_[index], *obs.winning_price);
}
double OracleScorer::logprob_lose(std::size_t index, const Observation& obs) const {
    return quantized_lose_logprob(truths_[index], obs.bid_price);
}

ANLPReport anlp(const Scorer& scorer, std::span<const Observation> dataset) {
    if (dataset.empty()) throw std::invalid_argument("anlp: empty dataset");
    ANLPReport report;
    report.model_kind = scorer.kind();
    double win_sum = 0.0;
    double lose_sum = 0.0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const Observation& obs = dataset[i];
        if (obs.won) {
            win_sum -= scorer.logprob_win(i, obs);
            ++report.n_win;
        } else {
            lose_sum -= scorer.logprob_lose(i, obs);
            ++report.n_lose;
        }
    }
    report.anlp_win = report.n_win ? win_sum / static_cast<double>(report.n_win) : 0.0;
    report.anlp_lose = report.n_lose ? lose_sum / static_cast<double>(report.n_lose) : 0.0;
    report.anlp = (static_cast<double>(report.n_win) * report.anlp_win +
                   static_cast<double>(report.n_lose) * report.anlp_lose) /
                  static_cast<double>(report.n_win + report.n_lose);
    return report;
}

// ---------------------------------------------------------------------------
// Landscape curves

LandscapeCurve mixture_landscape(const GaussianMixture& gm, std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw std::invalid_argument("mixture_landscape: empty range");
    LandscapeCurve curve;
    curve.points.reserve(static_cast<std::size_t>(hi - lo + 1));
    for (std::int64_t v = lo; v <= hi; ++v) {
        LandscapePoint pt;
        pt.price = v;
        pt.pmf = std::exp(log_bin_prob(gm, v));
        pt.cdf = std::exp(mixture_log_cdf(gm, static_cast<double>(v) + 0.5));
        curve.points.push_back(pt);
    }
    curve.tail_mass = std::exp(mixture_log_sf(gm, static_cast<double>(hi) + 0.5));
    return curve;
}

LandscapeCurve model_landscape(const ModelParams& params, const FeatureVector& x, std::int64_t lo,
                               std::int64_t hi) {
    return mixture_landscape(predict(params, x), lo, hi);
}

LandscapeCurve km_landscape(const KMEstimate& est, std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw std::invalid_argument("km_landscape: empty range");
    LandscapeCurve curve;
    double below = 0.0;
    double tail = est.tail_mass;
    for (std::size_t i = 0; i < est.prices.size(); ++i) {
        if (est.prices[i] < lo) below += est.pmf[i];
        if (est.prices[i] > hi) tail += est.pmf[i];
    }
    double cum = below;
    std::size_t k = 0;
    while (k < est.prices.size() && est.prices[k] < lo) ++k;
    for (std::int64_t v = lo; v <= hi; ++v) {
        LandscapePoint pt;
        pt.price = v;
        if (k < est.prices.size() && est.prices[k] == v) {
            pt.pmf = est.pmf[k];
            ++k;
        }
        cum += pt.pmf;
        pt.cdf = cum;
        curve.points.push_back(pt);
    }
    curve.tail_mass = tail;
    return curve;
}

std::string landscape_to_csv(const LandscapeCurve& curve) {
    std::ostringstream out;
    out << "price,pmf,cdf\n";
    for (const LandscapePoint& pt : curve.points) {
        out << pt.price << ',' << format_double(pt.pmf) << ',' << format_double(pt.cdf) << '\n';
    }
    out << "TAIL," << format_double(curve.tail_mass) << ",1.0\n";
    return out.str();
}

LandscapeCurve landscape_from_csv(std::string_view text) {
    LandscapeCurve curve;
    bool saw_tail = false;
    std::size_t line_no = 0;
    for (const std::string& line : split(text, '\n')) {
        ++line_no;
        const std::string_view t = trim(line);
        if (t.empty()) continue;
        if (line_no == 1 && t.substr(0, 5) == "price") continue;  // header
        const std::vector<std::string> cols = split(t, ',');
        if (cols.size() != 3) throw DataError("landscape csv: bad line " + std::to_string(line_no));
        if (cols[0] == "TAIL") {
            curve.tail_mass = parse_double(cols[1], "tail mass");
            saw_tail = true;
            continue;
        }
        if (saw_tail) throw DataError("landscape csv: rows after TAIL line");
        LandscapePoint pt;
        pt.price = parse_int64(cols[0], "price");
        pt.pmf = parse_double(cols[1], "pmf");
        pt.cdf = parse_double(cols[2], "cdf");
        curve.points.push_back(pt);
    }
    if (!saw_tail) throw DataError("landscape csv: missing TAIL line");
    return curve;
}

KMEstimate km_from_landscape(const LandscapeCurve& curve) {
    if (curve.points.empty()) throw DataError("landscape: no rows");
    KMEstimate est;
    est.max_bid = curve.points.back().price;
    est.tail_mass = curve.tail_mass;
    double sum = curve.tail_mass;
    for (const LandscapePoint& pt : curve.points) {
        if (pt.pmf > 0.0) {
            est.prices.push_back(pt.price);
            est.pmf.push_back(pt.pmf);
            sum += pt.pmf;
        }
    }
    if (est.prices.empty() && est.tail_mass <= 0.0) throw DataError("landscape: no probability mass");
    const double deficit = 1.0 - sum;
    if (deficit > 1e-6 || deficit < -1e-6) throw DataError("landscape: probability mass far from 1");
    if (est.prices.empty()) {
        est.tail_mass = 1.0;
    } else if (deficit > 0.0) {
        est.pmf.front() += deficit;  // mass below the exported range
    } else {
        est.pmf.front() = std::max(est.pmf.front() + deficit, 0.0);
    }
    return est;
}

// ---------------------------------------------------------------------------
// Experiments

ExperimentSpec ExperimentSpec::parse(const KeyValueConfig& kv) {
    ExperimentSpec spec;
    for (const std::string& m : split(kv.get_or("models", "cr,pcr,mcnet"), ',')) {
        const std::string name(trim(m));
        if (name.empty()) continue;
        if (name != "cr" && name != "pcr" && name != "mcnet" && name != "km" && name != "rs" &&
            name != "oracle") {
            throw DataError("experiment: unknown model '" + name + "'");
        }
        spec.models.push_back(name);
    }
    if (spec.models.empty()) throw DataError("experiment: no models requested");

    const bool has_data = kv.has("data");
    const bool has_sim = kv.has("sim");
    if (has_data == has_sim) throw DataError("experiment: exactly one of data= or sim= is required");
    if (has_data) {
        spec.data_path = kv.get("data");
    } else {
        spec.sim = SimConfig::from_config(KeyValueConfig::parse_file(kv.get("sim")));
    }

    if (kv.has("seeds")) {
        spec.seeds.clear();
        for (const std::string& s : split(kv.get("seeds"), ',')) {
            spec.seeds.push_back(static_cast<std::uint64_t>(parse_int64(s, "seed")));
        }
        if (spec.seeds.empty()) throw DataError("experiment: empty seed list");
    }
    spec.trim_threshold = static_cast<std::uint64_t>(kv.get_int("trim", 10));
    if (kv.has("bins")) spec.bins = BinSpec::parse(kv.get("bins"));

    spec.base_train.learning_rate = kv.get_double("lr", spec.base_train.learning_rate);
    spec.base_train.batch_size = static_cast<std::uint32_t>(kv.get_int("batch", spec.base_train.batch_size));
    spec.base_train.max_epochs = static_cast<std::uint32_t>(kv.get_int("epochs", spec.base_train.max_epochs));
    spec.base_train.early_stop_patience =
        static_cast<std::uint32_t>(kv.get_int("patience", spec.base_train.early_stop_patience));
    spec.base_train.early_stop_min_delta = kv.get_double("min_delta", spec.base_train.early_stop_min_delta);
    spec.base_train.hidden = static_cast<std::uint32_t>(kv.get_int("hidden", spec.base_train.hidden));
    spec.base_train.init_scale = kv.get_double("init_scale", spec.base_train.init_scale);
    if (kv.get_or("init", "scaled") == "normal") spec.base_train.standard_normal_init = true;

    if (kv.has("l2_grid")) {
        spec.l2_grid.clear();
        for (const std::string& s : split(kv.get("l2_grid"), ',')) {
            spec.l2_grid.push_back(parse_double(s, "l2"));
        }
    }
    if (kv.has("k_grid")) {
        spec.k_grid.clear();
        for (const std::string& s : split(kv.get("k_grid"), ',')) {
            spec.k_grid.push_back(static_cast<std::uint32_t>(parse_int64(s, "k")));
        }
    }
    if (spec.l2_grid.empty() || spec.k_grid.empty()) throw DataError("experiment: empty hyperparameter grid");
    spec.digest = kv.digest();
    return spec;
}

namespace {

struct SeedData {
    std::vector<Observation> train;
    std::vector<Observation> valid;
    std::vector<Observation> test;
    std::vector<GaussianMixture> test_truths;  // sim source only
};

SeedData prepare_seed_data(const ExperimentSpec& spec, std::span<const RawRecord> file_records,
                           std::uint64_t seed) {
    SeedData out;
    if (spec.sim) {
        SimConfig cfg = *spec.sim;
        cfg.seed = seed;
        cfg.threads = spec.base_train.threads;
        SimOutput sim = generate(cfg);
        const SplitIndices idx = split_indices(sim.dataset.size(), {0.6, 0.2, 0.2}, seed);
        const auto gather = [&](const std::vector<std::size_t>& which, std::vector<Observation>& dst) {
            dst.reserve(which.size());
            for (std::size_t i : which) dst.push_back(std::move(sim.dataset[i]));
        };
        gather(idx.train, out.train);
        gather(idx.valid, out.valid);
        gather(idx.test, out.test);
        out.test_truths.reserve(idx.test.size());
        for (std::size_t i : idx.test) out.test_truths.push_back(sim.truths[i]);
        return out;
    }

    const SplitIndices idx = split_indices(file_records.size(), {0.6, 0.2, 0.2}, seed);
    std::vector<RawRecord> train_raw;
    train_raw.reserve(idx.train.size());
    for (std::size_t i : idx.train) train_raw.push_back(file_records[i]);
    VocabularyOptions opts;
    opts.trim_threshold = spec.trim_threshold;
    opts.bins = spec.bins;
    opts.threads = spec.base_train.threads;
    const Vocabulary vocab = build_vocabulary(train_raw, opts);
    const auto encode_subset = [&](const std::vector<std::size_t>& which, std::vector<Observation>& dst) {
        dst.reserve(which.size());
        for (std::size_t i : which) dst.push_back(encode(file_records[i], vocab));
    };
    encode_subset(idx.train, out.train);
    encode_subset(idx.valid, out.valid);
    encode_subset(idx.test, out.test);
    return out;
}

SeedRun run_parametric_seed(const ExperimentSpec& spec, const SeedData& data, ModelKind kind,
                            std::uint64_t seed, std::optional<ModelParams>* keep_params) {
    SeedRun run;
    run.seed = seed;
    double best_valid = std::numeric_limits<double>::infinity();
    ModelParams best_params;
    const std::vector<std::uint32_t> k_options =
        kind == ModelKind::mcnet ? spec.k_grid : std::vector<std::uint32_t>{1};
    for (std::uint32_t k : k_options) {
        for (double l2 : spec.l2_grid) {
            TrainConfig cfg = spec.base_train;
            cfg.seed = seed;
            cfg.l2 = l2;
            cfg.k = k;
            TrainResult trained = train(kind, data.train, cfg);
            const double valid =
                data.valid.empty() ? 0.0 : anlp(ParametricScorer(trained.params), data.valid).anlp;
            if (valid < best_valid) {
                best_valid = valid;
                best_params = std::move(trained.params);
                run.best_l2 = l2;
                run.best_k = kind == ModelKind::mcnet ? k : 1;
            }
        }
    }
    run.valid_anlp = best_valid;
    run.test = anlp(ParametricScorer(best_params), data.test);
    if (keep_params != nullptr && !keep_params->has_value()) *keep_params = std::move(best_params);
    return run;
}

}  // namespace

std::vector<ExperimentReport> run_experiment(const ExperimentSpec& spec) {
    std::vector<RawRecord> file_records;
    if (!spec.sim) file_records = read_log(spec.data_path);

    std::vector<ExperimentReport> reports(spec.models.size());
    for (std::size_t m = 0; m < spec.models.size(); ++m) {
        reports[m].model = spec.models[m];
        reports[m].config_digest = spec.digest;
    }

    for (std::uint64_t seed : spec.seeds) {
        const SeedData data = prepare_seed_data(spec, file_records, seed);
        for (std::size_t m = 0; m < spec.models.size(); ++m) {
            const std::string& model = spec.models[m];
            SeedRun run;
            run.seed = seed;
            if (model == "km") {
                const KMEstimate est = km_fit(data.train);
                run.test = anlp(KmScorer(est), data.test);
                if (!reports[m].sample_km) reports[m].sample_km = est;
            } else if (model == "rs") {
                const RSModel rs = rs_fit(data.train);
                run.test = anlp(RsScorer(rs), data.test);
            } else if (model == "oracle") {
                if (!spec.sim) throw DataError("experiment: oracle model requires a sim= source");
                run.test = anlp(OracleScorer(data.test_truths), data.test);
            } else {
                run = run_parametric_seed(spec, data, model_kind_from_name(model), seed,
                                          &reports[m].sample_params);
            }
            reports[m].runs.push_back(std::move(run));
        }
    }

    for (ExperimentReport& rep : reports) {
        double sum = 0.0;
        for (const SeedRun& r : rep.runs) sum += r.test.anlp;
        rep.mean = sum / static_cast<double>(rep.runs.size());
        double sq = 0.0;
        for (const SeedRun& r : rep.runs) sq += (r.test.anlp - rep.mean) * (r.test.anlp - rep.mean);
        rep.std_dev = rep.runs.size() > 1
                          ? std::sqrt(sq / static_cast<double>(rep.runs.size() - 1))
                          : 0.0;
    }
    return reports;
}

namespace {

nlohmann::json anlp_to_json(const ANLPReport& r) {
    nlohmann::json j;
    j["anlp"] = r.anlp;
    j["n_win"] = r.n_win;
    j["n_lose"] = r.n_lose;
    j["anlp_win"] = r.anlp_win;
    j["anlp_lose"] = r.anlp_lose;
    j["model_kind"] = r.model_kind;
    return j;
}

}  // namespace

std::string anlp_report_json(const ANLPReport& report) {
    return anlp_to_json(report).dump(2) + "\n";
}

std::string experiment_report_json(std::span<const ExperimentReport> reports) {
    nlohmann::json doc;
    for (const ExperimentReport& rep : reports) {
        nlohmann::json jr;
        jr["mean"] = rep.mean;
        jr["std"] = rep.std_dev;
        jr["config_digest"] = rep.config_digest;
        nlohmann::json runs = nlohmann::json::array();
        for (const SeedRun& run : rep.runs) {
            nlohmann::json js;
            js["seed"] = run.seed;
            js["test"] = anlp_to_json(run.test);
            js["valid_anlp"] = run.valid_anlp;
            js["best_l2"] = run.best_l2;
            js["best_k"] = run.best_k;
            runs.push_back(js);
        }
        jr["runs"] = runs;
        doc[rep.model] = jr;
    }
    return doc.dump(2) + "\n";
}

}  // namespace landscape

// landscape: batch CLI for winning-price distribution estimation from
// censored bid logs. Subcommands cover the full pipeline: simulate a market,
// build vocabularies, train censored models, evaluate ANLP, fit and export
// landscape curves, and run multi-seed experiments.

#include <array>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "landscape/common.hpp"
#include "landscape/evaluate.hpp"
#include "landscape/featurize.hpp"
#include "landscape/models.hpp"
#include "landscape/nonparametric.hpp"
#include "landscape/parallel.hpp"
#include "landscape/simulator.hpp"

namespace fs = std::filesystem;
using namespace landscape;

namespace {

enum class LogLevel { error = 0, info = 1, debug = 2 };

LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("LANDSCAPE_LOG");
        if (env == nullptr) return LogLevel::info;
        const std::string v(env);
        if (v == "debug") return LogLevel::debug;
        if (v == "error") return LogLevel::error;
        return LogLevel::info;
    }();
    return level;
}

void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::info) std::fprintf(stderr, "[landscape] %s\n", msg.c_str());
}

void log_debug(const std::string& msg) {
    if (log_level() >= LogLevel::debug) std::fprintf(stderr, "[landscape] %s\n", msg.c_str());
}

std::string out_path(const std::string& out_dir, const std::string& name) {
    return (fs::path(out_dir) / name).string();
}

void ensure_out_dir(const std::string& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw DataError("cannot create output directory: " + out_dir);
}

std::string sanitize_name(const std::string& raw) {
    std::string out;
    for (char c : raw) {
        out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
    }
    return out;
}

constexpr std::array<double, 3> kSplitRatios{0.6, 0.2, 0.2};

std::vector<Observation> select_split(const std::string& which, std::span<const Observation> all,
                                      std::uint64_t seed) {
    if (which == "all") return {all.begin(), all.end()};
    DatasetSplit split = split_dataset(all, kSplitRatios, seed);
    if (which == "train") return std::move(split.train);
    if (which == "valid") return std::move(split.valid);
    if (which == "test") return std::move(split.test);
    throw DataError("unknown split '" + which + "'");
}

// Observations with a bias-only feature vector, for featureless estimators.
std::vector<Observation> plain_observations(std::span<const RawRecord> records) {
    std::vector<Observation> out;
    out.reserve(records.size());
    for (const RawRecord& r : records) {
        Observation o;
        o.x.dimension = 1;
        o.x.active = {0};
        o.bid_price = r.bid_price;
        o.won = r.won;
        o.winning_price = r.winning_price;
        out.push_back(std::move(o));
    }
    return out;
}

// ---------------------------------------------------------------------------
// simulate

int cmd_simulate(const std::string& config_path, std::uint64_t seed, const std::string& out_dir,
                 int threads) {
    SimConfig cfg = SimConfig::from_config(KeyValueConfig::parse_file(config_path));
    cfg.seed = seed;
    cfg.threads = threads;
    const SimOutput sim = generate(cfg);

    ensure_out_dir(out_dir);
    write_log(out_path(out_dir, "log.tsv"), sim.raw);
    write_file(out_path(out_dir, "truth.tsv"), format_truth_file(sim.truths));

    std::ostringstream msg;
    msg << "simulated " << sim.raw.size() << " records, win rate " << format_double(win_rate(sim.dataset));
    log_info(msg.str());
    return 0;
}

// ---------------------------------------------------------------------------
// vocab

int cmd_vocab(const std::string& data, std::uint64_t trim, const std::string& bins, int threads,
              const std::string& out_dir) {
    const std::vector<RawRecord> records = read_log(data);
    VocabularyOptions opts;
    opts.trim_threshold = trim;
    opts.bins = BinSpec::parse(bins);
    opts.threads = threads;
    const Vocabulary vocab = build_vocabulary(records, opts);
    ensure_out_dir(out_dir);
    write_file(out_path(out_dir, "vocab.tsv"), vocab.serialize());
    log_info("vocabulary dimension " + std::to_string(vocab.dimension) + ", checksum " + vocab.checksum());
    return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
    std::string data;
    std::string model = "cr";
    std::string vocab_file;  // optional; built from the training split if empty
    std::uint64_t trim = 10;
    std::string bins;
    std::string init = "scaled";
    std::uint64_t seed = 0;
    int threads = default_thread_count();
    TrainConfig config;
    std::string out_dir;
};

int cmd_train(const TrainArgs& args) {
    const std::vector<RawRecord> records = read_log(args.data);
    if (records.empty()) throw DataError("no records in " + args.data);

    const SplitIndices idx = split_indices(records.size(), kSplitRatios, args.seed);

    Vocabulary vocab;
    if (!args.vocab_file.empty()) {
        vocab = Vocabulary::deserialize(read_file(args.vocab_file));
    } else {
        std::vector<RawRecord> train_raw;
        train_raw.reserve(idx.train.size());
        for (std::size_t i : idx.train) train_raw.push_back(records[i]);
        VocabularyOptions opts;
        opts.trim_threshold = args.trim;
        opts.bins = BinSpec::parse(args.bins);
        opts.threads = args.threads;
        vocab = build_vocabulary(train_raw, opts);
    }

    const auto encode_subset = [&](const std::vector<std::size_t>& which) {
        std::vector<Observation> out;
        out.reserve(which.size());
        for (std::size_t i : which) out.push_back(encode(records[i], vocab));
        return out;
    };
    const std::vector<Observation> train_set = encode_subset(idx.train);
    const std::vector<Observation> valid_set = encode_subset(idx.valid);

    TrainConfig cfg = args.config;
    cfg.seed = args.seed;
    cfg.threads = args.threads;
    cfg.standard_normal_init = args.init == "normal";

    std::ostringstream metrics;
    metrics << "epoch,train_loss,valid_anlp,seconds\n";
    const auto start = std::chrono::steady_clock::now();
    const EpochCallback callback = [&](std::uint32_t epoch, double loss, const ModelParams& params) {
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        double valid_score = std::numeric_limits<double>::quiet_NaN();
        if (!valid_set.empty()) valid_score = anlp(ParametricScorer(params), valid_set).anlp;
        metrics << epoch << ',' << format_double(loss) << ',' << format_double(valid_score) << ','
                << format_double(seconds) << '\n';
        log_debug("epoch " + std::to_string(epoch) + " train_loss " + format_double(loss));
    };

    const TrainResult result = train(model_kind_from_name(args.model), train_set, cfg, callback);

    ensure_out_dir(args.out_dir);
    write_file(out_path(args.out_dir, "model.json"), save_model(result.params, vocab.checksum()));
    write_file(out_path(args.out_dir, "vocab.tsv"), vocab.serialize());
    write_file(out_path(args.out_dir, "metrics.csv"), metrics.str());

    std::ostringstream msg;
    msg << args.model << " trained for " << result.epochs_run << " epochs, final train loss "
        << format_double(result.history.back());
    log_info(msg.str());
    return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
    std::string data;
    std::string model_file;
    std::string baseline;    // km | rs | oracle (mutually exclusive with model_file)
    std::string vocab_file;  // defaults to vocab.tsv next to the model file
    std::string truth_file;  // oracle only
    std::string split = "test";
    std::uint64_t seed = 0;
    std::string out_dir;
};

int cmd_eval(const EvalArgs& args) {
    const std::vector<RawRecord> records = read_log(args.data);
    if (records.empty()) throw DataError("no records in " + args.data);
    if (args.model_file.empty() == args.baseline.empty()) {
        throw DataError("eval: exactly one of --model-file or --baseline is required");
    }

    ANLPReport report;
    std::size_t evaluated = 0;

    if (!args.model_file.empty()) {
        const LoadedModel loaded = load_model(read_file(args.model_file));
        std::string vocab_file = args.vocab_file;
        if (vocab_file.empty()) {
            vocab_file = (fs::path(args.model_file).parent_path() / "vocab.tsv").string();
        }
        const Vocabulary vocab = Vocabulary::deserialize(read_file(vocab_file));
        if (vocab.checksum() != loaded.vocab_checksum) {
            throw DataError("vocabulary checksum mismatch: model was trained against a different vocabulary");
        }
        const std::vector<Observation> all = encode_all(records, vocab);
        const std::vector<Observation> subset = select_split(args.split, all, args.seed);
        evaluated = subset.size();
        report = anlp(ParametricScorer(loaded.params), subset);
    } else if (args.baseline == "km" || args.baseline == "rs") {
        const std::vector<Observation> all = plain_observations(records);
        DatasetSplit split = split_dataset(all, kSplitRatios, args.seed);
        const std::vector<Observation> subset = select_split(args.split, all, args.seed);
        evaluated = subset.size();
        if (args.baseline == "km") {
            report = anlp(KmScorer(km_fit(split.train)), subset);
        } else {
            report = anlp(RsScorer(rs_fit(split.train)), subset);
        }
    } else if (args.baseline == "oracle") {
        if (args.truth_file.empty()) throw DataError("eval: --baseline oracle requires --truth");
        const std::vector<GaussianMixture> truths = parse_truth_file(read_file(args.truth_file));
        if (truths.size() != records.size()) {
            throw DataError("eval: truth file and data file have different record counts");
        }
        const std::vector<Observation> all = plain_observations(records);
        std::vector<Observation> subset;
        std::vector<GaussianMixture> subset_truths;
        if (args.split == "all") {
            subset = all;
            subset_truths = truths;
        } else {
            const SplitIndices idx = split_indices(all.size(), kSplitRatios, args.seed);
            const std::vector<std::size_t>& which =
                args.split == "train" ? idx.train : args.split == "valid" ? idx.valid : idx.test;
            for (std::size_t i : which) {
                subset.push_back(all[i]);
                subset_truths.push_back(truths[i]);
            }
        }
        evaluated = subset.size();
        report = anlp(OracleScorer(subset_truths), subset);
    } else {
        throw DataError("eval: unknown baseline '" + args.baseline + "'");
    }

    nlohmann::json doc;
    doc["anlp"] = report.anlp;
    doc["anlp_win"] = report.anlp_win;
    doc["anlp_lose"] = report.anlp_lose;
    doc["n_win"] = report.n_win;
    doc["n_lose"] = report.n_lose;
    doc["model_kind"] = report.model_kind;
    doc["split"] = args.split;
    doc["n_records"] = evaluated;
    doc["seed"] = args.seed;

    ensure_out_dir(args.out_dir);
    write_file(out_path(args.out_dir, "eval.json"), doc.dump(2) + "\n");
    log_info("anlp " + format_double(report.anlp) + " over " + std::to_string(evaluated) + " records");
    return 0;
}

// ---------------------------------------------------------------------------
// km

struct KmArgs {
    std::string data;
    std::string split = "all";
    std::uint64_t seed = 0;
    std::string group_by;
    std::string out_dir;
};

int cmd_km(const KmArgs& args) {
    const std::vector<RawRecord> records = read_log(args.data);
    if (records.empty()) throw DataError("no records in " + args.data);
    ensure_out_dir(args.out_dir);

    const auto export_km = [&](std::span<const Observation> subset, const std::string& name) {
        const KMEstimate est = km_fit(subset);
        write_file(out_path(args.out_dir, name), landscape_to_csv(km_landscape(est, 0, est.max_bid)));
        return est;
    };

    const std::vector<Observation> all = plain_observations(records);
    const std::vector<Observation> subset = select_split(args.split, all, args.seed);
    const KMEstimate est = export_km(subset, "km.csv");
    log_info("km: " + std::to_string(est.prices.size()) + " support prices, tail mass " +
             format_double(est.tail_mass));

    if (!args.group_by.empty()) {
        std::map<std::string, std::vector<Observation>> groups;
        for (std::size_t i = 0; i < records.size(); ++i) {
            for (const auto& [field, attr] : records[i].fields) {
                if (field == args.group_by) {
                    groups[attr].push_back(all[i]);
                    break;
                }
            }
        }
        if (groups.empty()) throw DataError("km: no records carry field '" + args.group_by + "'");
        for (const auto& [attr, obs] : groups) {
            export_km(obs, "km_" + sanitize_name(args.group_by) + "_" + sanitize_name(attr) + ".csv");
        }
        log_info("km: wrote " + std::to_string(groups.size()) + " per-" + args.group_by + " curves");
    }
    return 0;
}

// ---------------------------------------------------------------------------
// fitgauss

int cmd_fitgauss(const std::string& landscape_file, const std::string& out_dir) {
    const LandscapeCurve curve = landscape_from_csv(read_file(landscape_file));
    const KMEstimate est = km_from_landscape(curve);
    const GaussianFit fit = fit_gaussian_to_km(est);

    nlohmann::json doc;
    doc["mu"] = fit.mu;
    doc["sigma"] = fit.sigma;
    doc["cross_entropy"] = fit.cross_entropy;

    ensure_out_dir(out_dir);
    write_file(out_path(out_dir, "gauss.json"), doc.dump(2) + "\n");
    const GaussianMixture g{{1.0}, {fit.mu}, {fit.sigma}};
    write_file(out_path(out_dir, "gauss_curve.csv"),
               landscape_to_csv(mixture_landscape(g, 0, est.max_bid)));
    log_info("fit mu " + format_double(fit.mu) + ", sigma " + format_double(fit.sigma));
    return 0;
}

// ---------------------------------------------------------------------------
// export

struct ExportArgs {
    std::string model_file;
    std::string vocab_file;
    std::string features;  // field=value;field=value
    std::int64_t lo = 0;
    std::int64_t hi = 500;
    std::string out_dir;
};

int cmd_export(const ExportArgs& args) {
    const LoadedModel loaded = load_model(read_file(args.model_file));
    std::string vocab_file = args.vocab_file;
    if (vocab_file.empty()) {
        vocab_file = (fs::path(args.model_file).parent_path() / "vocab.tsv").string();
    }
    const Vocabulary vocab = Vocabulary::deserialize(read_file(vocab_file));
    if (vocab.checksum() != loaded.vocab_checksum) {
        throw DataError("vocabulary checksum mismatch: model was trained against a different vocabulary");
    }

    RawRecord record;
    for (const std::string& pair : split(args.features, ';')) {
        if (trim(pair).empty()) continue;
        const std::size_t eq = pair.find('=');
        if (eq == std::string::npos || eq == 0) throw DataError("export: bad field=value pair '" + pair + "'");
        record.fields.emplace_back(std::string(trim(std::string_view(pair).substr(0, eq))),
                                   std::string(trim(std::string_view(pair).substr(eq + 1))));
    }
    const Observation obs = encode(record, vocab);

    ensure_out_dir(args.out_dir);
    write_file(out_path(args.out_dir, "landscape.csv"),
               landscape_to_csv(model_landscape(loaded.params, obs.x, args.lo, args.hi)));
    log_info("exported landscape over [" + std::to_string(args.lo) + ", " + std::to_string(args.hi) + "]");
    return 0;
}

// ---------------------------------------------------------------------------
// experiment

int cmd_experiment(const std::string& spec_file, const std::string& out_dir, int threads,
                   std::int64_t landscape_hi) {
    KeyValueConfig kv = KeyValueConfig::parse_file(spec_file);
    ExperimentSpec spec = ExperimentSpec::parse(kv);
    spec.base_train.threads = threads;
    const std::vector<ExperimentReport> reports = run_experiment(spec);

    ensure_out_dir(out_dir);
    write_file(out_path(out_dir, "report.json"), experiment_report_json(reports));

    std::ostringstream summary;
    summary << "model,seed,test_anlp,valid_anlp,best_l2,best_k\n";
    for (const ExperimentReport& rep : reports) {
        for (const SeedRun& run : rep.runs) {
            summary << rep.model << ',' << run.seed << ',' << format_double(run.test.anlp) << ','
                    << format_double(run.valid_anlp) << ',' << format_double(run.best_l2) << ','
                    << run.best_k << '\n';
        }
    }
    write_file(out_path(out_dir, "summary.csv"), summary.str());

    for (const ExperimentReport& rep : reports) {
        if (rep.sample_params) {
            FeatureVector x;
            x.dimension = dimension_of(*rep.sample_params);
            x.active = {0};
            write_file(out_path(out_dir, "landscape_" + rep.model + ".csv"),
                       landscape_to_csv(model_landscape(*rep.sample_params, x, 0, landscape_hi)));
        }
        if (rep.sample_km) {
            write_file(out_path(out_dir, "landscape_km.csv"),
                       landscape_to_csv(km_landscape(*rep.sample_km, 0, rep.sample_km->max_bid)));
        }
        std::ostringstream line;
        line << rep.model << ": mean anlp " << format_double(rep.mean) << " (std "
             << format_double(rep.std_dev) << ")";
        log_info(line.str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"winning-price landscape estimation from censored bid logs"};
    app.require_subcommand(1);

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "generate a synthetic second-price auction log");
    std::string sim_config;
    std::uint64_t sim_seed = 0;
    std::string sim_out;
    int sim_threads = default_thread_count();
    sim_cmd->add_option("--config", sim_config, "sim config file")->required();
    sim_cmd->add_option("--seed", sim_seed, "rng seed");
    sim_cmd->add_option("--out", sim_out, "output directory")->required();
    sim_cmd->add_option("--threads", sim_threads, "worker threads");

    // vocab
    auto* vocab_cmd = app.add_subcommand("vocab", "build a trimmed one-hot vocabulary");
    std::string vocab_data;
    std::uint64_t vocab_trim = 10;
    std::string vocab_bins;
    std::string vocab_out;
    int vocab_threads = default_thread_count();
    vocab_cmd->add_option("--data", vocab_data, "bid log (tsv)")->required();
    vocab_cmd->add_option("--trim", vocab_trim, "minimum attribute count");
    vocab_cmd->add_option("--bins", vocab_bins, "numeric bins: field:e0,e1;field2:e0,...");
    vocab_cmd->add_option("--threads", vocab_threads, "worker threads");
    vocab_cmd->add_option("--out", vocab_out, "output directory")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "train a censored model (cr, pcr, mcnet)");
    TrainArgs train_args;
    train_cmd->add_option("--data", train_args.data, "bid log (tsv)")->required();
    train_cmd->add_option("--model", train_args.model, "cr | pcr | mcnet")->required();
    train_cmd->add_option("--vocab", train_args.vocab_file, "existing vocab.tsv (else built from train split)");
    train_cmd->add_option("--trim", train_args.trim, "vocabulary trim threshold");
    train_cmd->add_option("--bins", train_args.bins, "numeric bins spec");
    train_cmd->add_option("--k", train_args.config.k, "mixture components (mcnet)");
    train_cmd->add_option("--hidden", train_args.config.hidden, "hidden width (mcnet)");
    train_cmd->add_option("--lr", train_args.config.learning_rate, "learning rate");
    train_cmd->add_option("--batch", train_args.config.batch_size, "mini-batch size");
    train_cmd->add_option("--l2", train_args.config.l2, "l2 regularization");
    train_cmd->add_option("--epochs", train_args.config.max_epochs, "max epochs");
    train_cmd->add_option("--patience", train_args.config.early_stop_patience, "early stop patience");
    train_cmd->add_option("--min-delta", train_args.config.early_stop_min_delta, "early stop min delta");
    train_cmd->add_option("--init-scale", train_args.config.init_scale, "weight init scale");
    train_cmd->add_option("--init", train_args.init, "scaled | normal (verbatim N(0,1) init)");
    train_cmd->add_option("--seed", train_args.seed, "rng seed");
    train_cmd->add_option("--threads", train_args.threads, "worker threads");
    train_cmd->add_option("--out", train_args.out_dir, "output directory")->required();

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "compute anlp of a model or baseline on a split");
    EvalArgs eval_args;
    eval_cmd->add_option("--data", eval_args.data, "bid log (tsv)")->required();
    eval_cmd->add_option("--model-file", eval_args.model_file, "trained model.json");
    eval_cmd->add_option("--baseline", eval_args.baseline, "km | rs | oracle");
    eval_cmd->add_option("--vocab", eval_args.vocab_file, "vocab.tsv (default: next to model file)");
    eval_cmd->add_option("--truth", eval_args.truth_file, "truth sidecar (oracle baseline)");
    eval_cmd->add_option("--split", eval_args.split, "train | valid | test | all");
    eval_cmd->add_option("--seed", eval_args.seed, "split seed");
    eval_cmd->add_option("--out", eval_args.out_dir, "output directory")->required();

    // km
    auto* km_cmd = app.add_subcommand("km", "fit and export a product-limit estimate");
    KmArgs km_args;
    km_cmd->add_option("--data", km_args.data, "bid log (tsv)")->required();
    km_cmd->add_option("--split", km_args.split, "train | valid | test | all");
    km_cmd->add_option("--seed", km_args.seed, "split seed");
    km_cmd->add_option("--group-by", km_args.group_by, "per-attribute curves for this field");
    km_cmd->add_option("--out", km_args.out_dir, "output directory")->required();

    // fitgauss
    auto* fg_cmd = app.add_subcommand("fitgauss", "KL-fit a single Gaussian to a landscape csv");
    std::string fg_landscape;
    std::string fg_out;
    fg_cmd->add_option("--landscape", fg_landscape, "landscape csv (e.g. km.csv)")->required();
    fg_cmd->add_option("--out", fg_out, "output directory")->required();

    // export
    auto* export_cmd = app.add_subcommand("export", "export a model's predicted landscape curve");
    ExportArgs export_args;
    export_cmd->add_option("--model-file", export_args.model_file, "trained model.json")->required();
    export_cmd->add_option("--vocab", export_args.vocab_file, "vocab.tsv (default: next to model file)");
    export_cmd->add_option("--features", export_args.features, "field=value;field=value");
    export_cmd->add_option("--lo", export_args.lo, "lowest price");
    export_cmd->add_option("--hi", export_args.hi, "highest price");
    export_cmd->add_option("--out", export_args.out_dir, "output directory")->required();

    // experiment
    auto* exp_cmd = app.add_subcommand("experiment", "multi-seed experiment from a spec file");
    std::string exp_spec;
    std::string exp_out;
    int exp_threads = default_thread_count();
    std::int64_t exp_hi = 500;
    exp_cmd->add_option("--spec", exp_spec, "experiment spec (key=value)")->required();
    exp_cmd->add_option("--threads", exp_threads, "worker threads");
    exp_cmd->add_option("--landscape-hi", exp_hi, "upper price for exported curves");
    exp_cmd->add_option("--out", exp_out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (sim_cmd->parsed()) return cmd_simulate(sim_config, sim_seed, sim_out, sim_threads);
        if (vocab_cmd->parsed()) return cmd_vocab(vocab_data, vocab_trim, vocab_bins, vocab_threads, vocab_out);
        if (train_cmd->parsed()) return cmd_train(train_args);
        if (eval_cmd->parsed()) return cmd_eval(eval_args);
        if (km_cmd->parsed()) return cmd_km(km_args);
        if (fg_cmd->parsed()) return cmd_fitgauss(fg_landscape, fg_out);
        if (export_cmd->parsed()) return cmd_export(export_args);
        if (exp_cmd->parsed()) return cmd_experiment(exp_spec, exp_out, exp_threads, exp_hi);
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 3;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 1;
}

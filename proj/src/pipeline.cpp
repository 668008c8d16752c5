#include "pbsa/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "pbsa/errors.hpp"

namespace fs = std::filesystem;

namespace pbsa {

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw LookupError("cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void require(const fs::path& path, const std::string& hint) {
    if (!fs::exists(path)) throw LookupError("missing " + path.string() + "; " + hint);
}

// Artifacts are append-only: an existing file is never replaced.
void refuse_existing(const fs::path& path) {
    if (fs::exists(path)) {
        throw IntegrityError(path.string() + " already exists; run artifacts are never overwritten");
    }
}

void write_new_file(const fs::path& path, const std::string& content) {
    refuse_existing(path);
    fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
}

// Writes `content` unless an identical file is already there.
void write_or_match(const fs::path& path, const std::string& content) {
    if (fs::exists(path)) {
        if (read_file(path) != content) {
            throw IntegrityError(path.string() + " exists with different contents; run artifacts are never overwritten");
        }
        return;
    }
    write_new_file(path, content);
}

void save_new_checkpoint(const Parameters& params, const fs::path& path) {
    refuse_existing(path);
    fs::create_directories(path.parent_path());
    save_checkpoint(params, path);
}

void save_new_report(const TrainReport& report, const fs::path& path) {
    refuse_existing(path);
    fs::create_directories(path.parent_path());
    report.save(path);
}

RunConfig resolve_config(const CommandOptions& options, std::uint64_t seed_offset = 0) {
    if (options.config_path.empty()) throw InvalidConfig("--config is required");
    RunConfig config = load_run_config(options.config_path);
    if (options.out) config.output = *options.out;
    const std::uint64_t seed = options.seed.value_or(config.seed);
    return with_seed(config, seed + seed_offset);
}

// Run directory and config, taken from --run when given, otherwise derived from --config/--seed.
std::pair<RunConfig, RunPaths> locate_run(const CommandOptions& options) {
    if (options.run_dir) {
        const RunPaths paths{*options.run_dir};
        require(paths.config(), "not a run directory");
        RunConfig config = parse_run_config(read_file(paths.config()), paths.config().string());
        return {config, paths};
    }
    RunConfig config = resolve_config(options);
    return {config, run_paths(config)};
}

// Creates the run directory with its config snapshot, or checks that an existing one matches.
void open_run(const RunConfig& config, const RunPaths& paths) {
    fs::create_directories(paths.root);
    write_or_match(paths.config(), resolved_text(config));
}

LoadedData load_run_data(const RunConfig& config, const RunPaths& paths) {
    try {
        LoadedData data = load_data(config, paths.vocab());
        if (!fs::exists(paths.vocab())) {
            fs::create_directories(paths.vocab().parent_path());
            data.vocab.save(paths.vocab());
        }
        return data;
    } catch (const InvalidConfig&) {
        throw;
    } catch (const Error& e) {
        throw PhaseError("data", 0, e.what());
    }
}

Parameters load_model(const fs::path& path, const std::string& hint) {
    require(path, hint);
    return load_checkpoint(path);
}

// Trained iterations 1..n, stopping at the first missing checkpoint.
std::vector<Parameters> load_iterations(const RunPaths& paths) {
    std::vector<Parameters> out;
    for (int t = 1; fs::exists(paths.checkpoint(t)); ++t) out.push_back(load_checkpoint(paths.checkpoint(t)));
    return out;
}

double split_accuracy(const Parameters& params, const std::vector<TokenizedSample>& samples) {
    if (samples.empty()) return 0.0;
    return accuracy(predict_all(params, samples), labels_of(samples));
}

bool has_ground_truth(const std::vector<TokenizedSample>& samples) {
    return !samples.empty() && std::all_of(samples.begin(), samples.end(),
                                           [](const auto& s) { return !s.causal_positions.empty(); });
}

struct SeedOutcome {
    double baseline_accuracy = 0.0;
    double pbsa_accuracy = 0.0;
    double baseline_f1 = 0.0;
    double pbsa_f1 = 0.0;
};

SeedOutcome run_one(const RunConfig& config, int workers, std::ostream& log) {
    const RunPaths paths = run_paths(config);
    if (fs::exists(paths.config())) {
        throw IntegrityError("run " + run_id(config) + " already exists at " + paths.root.string() +
                             "; use another --out or --seed");
    }
    open_run(config, paths);
    log << "run " << run_id(config) << " (seed " << config.seed << ") -> " << paths.root.string() << '\n';
    const LoadedData data = load_run_data(config, paths);
    const ModelConfig model = resolve_model_config(config, data);
    TrainConfig train = config.train;
    train.workers = workers;

    PbsaResult result;
    if (train.grid_search) {
        GridSearchResult grid = grid_search(data.split, model, config.wbcp, train);
        std::ostringstream table;
        table << std::setprecision(10);
        for (const auto& p : grid.table) {
            table << "gamma=" << p.gamma << " iterations=" << p.iterations << " val_accuracy=" << p.val_accuracy
                  << '\n';
        }
        table << "best.gamma=" << grid.best.gamma << "\nbest.iterations=" << grid.best.iterations << '\n';
        write_new_file(paths.grid(), table.str());
        result = std::move(grid.run);
        save_new_checkpoint(result.baseline.params, paths.baseline_checkpoint());
        save_new_report(result.baseline.report, paths.baseline_report());
        for (const auto& it : result.iterations) {
            fs::create_directories(paths.iteration_dir(it.iteration));
            save_attributions(it.sigma, "train", paths.attribution(it.iteration));
            it.supervision.save(paths.supervision(it.iteration));
            save_new_checkpoint(it.trained.params, paths.checkpoint(it.iteration));
            save_new_report(it.trained.report, paths.report(it.iteration));
        }
    } else {
        PbsaHooks hooks;
        hooks.on_pretrained = [&](const TrainResult& r) {
            save_new_checkpoint(r.params, paths.baseline_checkpoint());
            save_new_report(r.report, paths.baseline_report());
            log << "  pretrained: best epoch " << r.report.best_epoch << ", val accuracy "
                << r.report.best_val_accuracy << '\n';
        };
        hooks.on_mined = [&](int t, const std::vector<AttributionResult>& sigma, const SupervisionStore& store) {
            refuse_existing(paths.attribution(t));
            refuse_existing(paths.supervision(t));
            fs::create_directories(paths.iteration_dir(t));
            save_attributions(sigma, "train", paths.attribution(t));
            store.save(paths.supervision(t));
            log << "  iteration " << t << ": mined " << sigma.size() << " samples\n";
        };
        hooks.on_retrained = [&](int t, const TrainResult& r) {
            save_new_checkpoint(r.params, paths.checkpoint(t));
            save_new_report(r.report, paths.report(t));
            log << "  iteration " << t << ": retrained, val accuracy " << r.report.best_val_accuracy << '\n';
        };
        result = run_pbsa(data.split, model, config.wbcp, train, hooks);
    }

    std::vector<Parameters> iterations;
    for (const auto& it : result.iterations) iterations.push_back(it.trained.params);
    const EvaluationSummary summary = evaluate_run(config, data, result.baseline.params, iterations, workers);
    write_new_file(paths.metrics(), summary.text);
    return {summary.baseline_test.accuracy, summary.pbsa_test.accuracy, summary.baseline_test.macro_f1,
            summary.pbsa_test.macro_f1};
}

std::pair<double, double> mean_std(const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    const double sd = xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
    return {mean, sd};
}

// Iteration whose checkpoint has the best validation accuracy, earliest on ties (1-based).
int best_iteration(const std::vector<Parameters>& iterations, const DatasetSplit& split) {
    std::vector<double> val;
    for (const auto& p : iterations) val.push_back(split_accuracy(p, split.validation));
    return static_cast<int>(select_best(val)) + 1;
}

}  // namespace

RunPaths run_paths(const RunConfig& config) { return {config.output / run_id(config)}; }

LoadedData load_data(const RunConfig& config, const fs::path& vocab_path) {
    LoadedData data;
    if (config.dataset.source == DatasetSource::synthetic) {
        const auto& s = config.synthetic;
        const auto samples = generate_synthetic(s.num_samples, s.vocab_size, s.seq_len, config.seed, s.options);
        data.split = split_dataset(samples, config.dataset.split, config.seed);
        data.vocab = synthetic_vocabulary(s.vocab_size);
        data.num_classes = 2;
        return data;
    }

    const bool reuse_vocab = !vocab_path.empty() && fs::exists(vocab_path);
    auto build_vocab = [&](const std::vector<TsvRecord>& train_records) {
        if (reuse_vocab) return Vocabulary::load(vocab_path);
        std::vector<std::string> texts;
        for (const auto& r : train_records) texts.push_back(r.text);
        return Vocabulary::build(texts);
    };

    if (!config.dataset.path.empty()) {
        const auto records = read_tsv(config.dataset.path);
        if (records.empty()) throw InvalidInput(config.dataset.path.string() + " holds no samples");
        // Split placeholders first so that the vocabulary only sees training text.
        std::vector<TokenizedSample> placeholders;
        for (std::size_t i = 0; i < records.size(); ++i) {
            placeholders.push_back(make_sample(i, {Vocabulary::kUnkId}, records[i].label));
        }
        const DatasetSplit ids = split_dataset(placeholders, config.dataset.split, config.seed);
        auto pick = [&](const std::vector<TokenizedSample>& part) {
            std::vector<TsvRecord> out;
            for (const auto& p : part) out.push_back(records[p.id]);
            return out;
        };
        const auto train_records = pick(ids.train);
        data.vocab = build_vocab(train_records);
        auto tokenize_part = [&](const std::vector<TokenizedSample>& part) {
            std::vector<TokenizedSample> out;
            for (const auto& p : part) {
                out.push_back(make_sample(p.id, tokenize(records[p.id].text, data.vocab), records[p.id].label));
            }
            return out;
        };
        data.split.train = tokenize_part(ids.train);
        data.split.validation = tokenize_part(ids.validation);
        data.split.test = tokenize_part(ids.test);
        data.split.split_seed = config.seed;
    } else {
        const auto train_records = read_tsv(config.dataset.train_path);
        data.vocab = build_vocab(train_records);
        std::uint64_t next = 0;
        data.split.train = tokenize_records(train_records, data.vocab, next);
        next += train_records.size();
        if (!config.dataset.validation_path.empty()) {
            const auto val_records = read_tsv(config.dataset.validation_path);
            data.split.validation = tokenize_records(val_records, data.vocab, next);
            next += val_records.size();
        }
        data.split.test = tokenize_records(read_tsv(config.dataset.test_path), data.vocab, next);
        data.split.split_seed = config.seed;
    }
    if (data.split.train.empty()) throw InvalidInput("training split is empty");
    int classes = 2;
    for (const auto* part : {&data.split.train, &data.split.validation, &data.split.test}) {
        if (!part->empty()) classes = std::max(classes, infer_num_classes(*part));
    }
    data.num_classes = classes;
    return data;
}

ModelConfig resolve_model_config(const RunConfig& config, const LoadedData& data) {
    ModelConfig m = config.model;
    m.vocab_size = data.vocab.size();
    m.num_classes = static_cast<std::size_t>(data.num_classes);
    m.seed = config.seed;
    m.validate();
    return m;
}

EvaluationSummary evaluate_run(const RunConfig& config, const LoadedData& data, const Parameters& baseline,
                               const std::vector<Parameters>& iterations, int workers) {
    const auto& split = data.split;
    if (split.test.empty()) throw InvalidInput("test split is empty");
    EvaluationSummary s;
    s.baseline_train_accuracy = split_accuracy(baseline, split.train);
    s.baseline_test = evaluate_classifier(baseline, split.test);
    if (config.eval_attribution && has_ground_truth(split.test)) {
        const auto wbcp = mine_wbcp_all(baseline, split.test, config.wbcp, workers);
        std::vector<AttributionResult> masking, gradient;
        for (const auto& sample : split.test) {
            masking.push_back(attribute_masking(baseline, sample));
            gradient.push_back(attribute_gradient(baseline, sample));
        }
        s.baseline_test.attribution["wbcp"] = attribution_quality(wbcp, split.test, true);
        s.baseline_test.attribution["masking"] = attribution_quality(masking, split.test, false);
        s.baseline_test.attribution["gradient"] = attribution_quality(gradient, split.test, false);
    }

    std::ostringstream text;
    text << std::setprecision(10);
    text << "run.id=" << run_id(config) << '\n';
    text << "seed=" << config.seed << '\n';
    text << "samples.train=" << split.train.size() << "\nsamples.validation=" << split.validation.size()
         << "\nsamples.test=" << split.test.size() << '\n';
    text << "baseline.train.accuracy=" << s.baseline_train_accuracy << '\n';
    if (!split.validation.empty()) {
        text << "baseline.validation.accuracy=" << split_accuracy(baseline, split.validation) << '\n';
    }
    text << format_metrics(s.baseline_test, "baseline.test.");
    if (!iterations.empty()) {
        for (std::size_t t = 0; t < iterations.size(); ++t) {
            if (!split.validation.empty()) {
                text << "pbsa.iter" << t + 1 << ".validation.accuracy="
                     << split_accuracy(iterations[t], split.validation) << '\n';
            }
        }
        s.best_iteration = best_iteration(iterations, split);
        s.pbsa_test = evaluate_classifier(iterations[s.best_iteration - 1], split.test);
        text << "pbsa.best_iteration=" << s.best_iteration << '\n';
        text << format_metrics(s.pbsa_test, "pbsa.test.");
        text << "delta.test.accuracy=" << s.pbsa_test.accuracy - s.baseline_test.accuracy << '\n';
        text << "delta.test.macro_f1=" << s.pbsa_test.macro_f1 - s.baseline_test.macro_f1 << '\n';
    }
    s.text = text.str();
    return s;
}

std::string describe_ids(std::vector<std::uint64_t> ids) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    std::string out;
    for (std::size_t i = 0; i < ids.size();) {
        std::size_t j = i;
        while (j + 1 < ids.size() && ids[j + 1] == ids[j] + 1) ++j;
        if (!out.empty()) out += ", ";
        out += std::to_string(ids[i]);
        if (j > i) out += "-" + std::to_string(ids[j]);
        i = j + 1;
    }
    return out.empty() ? "(none)" : out;
}

void cmd_synth(const CommandOptions& options, std::ostream& out, std::ostream&) {
    const RunConfig config = resolve_config(options);
    if (config.dataset.source != DatasetSource::synthetic) {
        throw InvalidConfig("synth needs dataset.source=synthetic");
    }
    const fs::path dir = options.out.value_or("synthetic");
    const fs::path tsv = dir / "data.tsv";
    const fs::path sidecar = dir / "causal.tsv";
    refuse_existing(tsv);
    refuse_existing(sidecar);
    fs::create_directories(dir);
    const auto& s = config.synthetic;
    const auto samples = generate_synthetic(s.num_samples, s.vocab_size, s.seq_len, config.seed, s.options);
    export_synthetic(samples, synthetic_vocabulary(s.vocab_size), tsv, sidecar);
    out << "wrote " << samples.size() << " samples to " << tsv.string() << " and " << sidecar.string() << '\n';
}

void cmd_pretrain(const CommandOptions& options, std::ostream& out, std::ostream& log) {
    const RunConfig config = resolve_config(options);
    const RunPaths paths = run_paths(config);
    refuse_existing(paths.baseline_checkpoint());
    open_run(config, paths);
    const LoadedData data = load_run_data(config, paths);
    TrainResult r;
    try {
        r = pretrain(init_model(resolve_model_config(config, data)), data.split, config.train);
    } catch (const Error& e) {
        throw PhaseError("pretrain", 0, e.what());
    }
    save_new_checkpoint(r.params, paths.baseline_checkpoint());
    save_new_report(r.report, paths.baseline_report());
    log << "pretrained in " << r.report.seconds << " s, best epoch " << r.report.best_epoch << '\n';
    out << paths.baseline_checkpoint().string() << '\n';
}

void cmd_mine(const CommandOptions& options, std::ostream& out, std::ostream& log) {
    const RunConfig config = resolve_config(options);
    const RunPaths paths = run_paths(config);
    require(paths.baseline_checkpoint(), "run `pbsa pretrain` first");
    int t = options.iteration.value_or(1);
    if (!options.iteration) {
        while (fs::exists(paths.attribution(t))) ++t;
    }
    if (t < 1 || t > config.train.iterations) {
        throw PhaseError("mine", t, "iteration outside 1.." + std::to_string(config.train.iterations) +
                                        " (train.iterations)");
    }
    refuse_existing(paths.attribution(t));
    refuse_existing(paths.supervision(t));
    const fs::path frozen_path = t == 1 ? paths.baseline_checkpoint() : paths.checkpoint(t - 1);
    const Parameters frozen = load_model(frozen_path, "run `pbsa retrain` for iteration " + std::to_string(t - 1) + " first");
    const LoadedData data = load_run_data(config, paths);
    try {
        const auto sigma = mine_wbcp_all(frozen, data.split.train, config.wbcp, options.workers);
        const SupervisionStore store = build_supervision(sigma, data.split.train, t);
        fs::create_directories(paths.iteration_dir(t));
        save_attributions(sigma, "train", paths.attribution(t));
        store.save(paths.supervision(t));
    } catch (const Error& e) {
        throw PhaseError("mine", t, e.what());
    }
    log << "mined " << data.split.train.size() << " samples for iteration " << t << '\n';
    out << paths.supervision(t).string() << '\n';
}

void cmd_retrain(const CommandOptions& options, std::ostream& out, std::ostream& log) {
    const RunConfig config = resolve_config(options);
    const RunPaths paths = run_paths(config);
    require(paths.baseline_checkpoint(), "run `pbsa pretrain` first");
    int t = options.iteration.value_or(1);
    if (!options.iteration) {
        while (fs::exists(paths.checkpoint(t))) ++t;
    }
    refuse_existing(paths.checkpoint(t));
    const fs::path sup = paths.supervision(t);
    if (!fs::exists(sup)) {
        throw LookupError("missing supervision file " + sup.string() + " (pbsa-sup-1); run `pbsa mine` first");
    }
    const fs::path frozen_path = t == 1 ? paths.baseline_checkpoint() : paths.checkpoint(t - 1);
    const Parameters frozen = load_model(frozen_path, "run the previous iteration first");
    const LoadedData data = load_run_data(config, paths);
    TrainResult r;
    try {
        const SupervisionStore store = SupervisionStore::load(sup);
        r = retrain_supervised(frozen, data.split, store, config.train);
    } catch (const Error& e) {
        throw PhaseError("retrain", t, e.what());
    }
    save_new_checkpoint(r.params, paths.checkpoint(t));
    save_new_report(r.report, paths.report(t));
    log << "retrained iteration " << t << " in " << r.report.seconds << " s\n";
    out << paths.checkpoint(t).string() << '\n';
}

void cmd_run(const CommandOptions& options, std::ostream& out, std::ostream& log) {
    if (options.seeds < 1) throw InvalidConfig("--seeds must be >= 1");
    std::vector<SeedOutcome> outcomes;
    std::vector<std::string> dirs;
    for (int k = 0; k < options.seeds; ++k) {
        const RunConfig config = resolve_config(options, static_cast<std::uint64_t>(k));
        outcomes.push_back(run_one(config, options.workers, log));
        dirs.push_back(run_paths(config).root.string());
    }
    if (options.seeds == 1) {
        out << read_file(fs::path(dirs.front()) / "metrics.txt");
        return;
    }
    auto report = [&](const std::string& key, auto get) {
        std::vector<double> xs;
        for (const auto& o : outcomes) xs.push_back(get(o));
        const auto [m, sd] = mean_std(xs);
        out << key << ".mean=" << m << '\n' << key << ".std=" << sd << '\n';
    };
    out << std::setprecision(10) << "seeds=" << options.seeds << '\n';
    for (std::size_t k = 0; k < dirs.size(); ++k) out << "run." << k << "=" << dirs[k] << '\n';
    report("baseline.test.accuracy", [](const SeedOutcome& o) { return o.baseline_accuracy; });
    report("pbsa.test.accuracy", [](const SeedOutcome& o) { return o.pbsa_accuracy; });
    report("delta.test.accuracy", [](const SeedOutcome& o) { return o.pbsa_accuracy - o.baseline_accuracy; });
    report("baseline.test.macro_f1", [](const SeedOutcome& o) { return o.baseline_f1; });
    report("pbsa.test.macro_f1", [](const SeedOutcome& o) { return o.pbsa_f1; });
}

void cmd_evaluate(const CommandOptions& options, std::ostream& out, std::ostream&) {
    const auto [config, paths] = locate_run(options);
    const Parameters baseline = load_model(paths.baseline_checkpoint(), "run `pbsa pretrain` first");
    const std::vector<Parameters> iterations = load_iterations(paths);
    const LoadedData data = load_run_data(config, paths);
    const EvaluationSummary summary = evaluate_run(config, data, baseline, iterations, options.workers);
    write_or_match(paths.metrics(), summary.text);
    out << summary.text;
}

void cmd_visualize(const CommandOptions& options, std::ostream& out, std::ostream& log) {
    // Here --out names the HTML file, not the runs root.
    CommandOptions lookup = options;
    lookup.out.reset();
    const auto [config, paths] = locate_run(lookup);
    const Parameters baseline = load_model(paths.baseline_checkpoint(), "run `pbsa pretrain` first");
    const std::vector<Parameters> iterations = load_iterations(paths);
    if (iterations.empty()) throw LookupError("missing " + paths.checkpoint(1).string() + "; run `pbsa retrain` first");
    const LoadedData data = load_run_data(config, paths);

    std::map<std::uint64_t, const TokenizedSample*> by_id;
    for (const auto* part : {&data.split.train, &data.split.validation, &data.split.test}) {
        for (const auto& s : *part) by_id[s.id] = &s;
    }
    for (auto id : options.ids) {
        if (!by_id.count(id)) {
            std::vector<std::uint64_t> all;
            for (const auto& [k, v] : by_id) all.push_back(k);
            throw LookupError("unknown sample id " + std::to_string(id) + "; available ids: " + describe_ids(all));
        }
    }

    const int t = options.iteration.value_or(best_iteration(iterations, data.split));
    if (t < 1 || t > static_cast<int>(iterations.size())) {
        throw LookupError("iteration " + std::to_string(t) + " has no checkpoint");
    }
    const fs::path sup = paths.supervision(t);
    if (!fs::exists(sup)) throw LookupError("missing supervision file " + sup.string() + " (pbsa-sup-1)");
    const SupervisionStore store = SupervisionStore::load(sup);
    const Parameters& frozen = t == 1 ? baseline : iterations[t - 2];
    const Parameters& tuned = iterations[t - 1];

    HeatmapDocument doc;
    doc.title = "attention: baseline vs iteration " + std::to_string(t);
    for (auto id : options.ids) {
        const TokenizedSample& sample = *by_id.at(id);
        // Samples outside the training split have no stored record; mine them with the same frozen model.
        const SupervisionDistribution target =
            store.contains(id) ? store.at(id)
                               : sigma_to_supervision(mine_wbcp(frozen, sample, config.wbcp), sample.mask, t);
        const auto base_out = forward(baseline, sample);
        const auto tuned_out = forward(tuned, sample);
        HeatmapSample hs;
        hs.id = id;
        HeatmapRow b{"baseline", {}, prediction_tag(argmax(base_out.probs), sample.label)};
        HeatmapRow p{"pbsa", {}, prediction_tag(argmax(tuned_out.probs), sample.label)};
        HeatmapRow a{"supervision", {}, prediction_tag(-1, sample.label)};
        for (int pos : sample.real_positions()) {
            hs.tokens.push_back(data.vocab.token(sample.tokens[pos]));
            b.weights.push_back(base_out.attention[pos]);
            p.weights.push_back(tuned_out.attention[pos]);
            a.weights.push_back(target.alpha_tilde[pos]);
        }
        hs.rows = {b, p, a};
        doc.samples.push_back(std::move(hs));
    }
    const fs::path target = options.out.value_or(paths.heatmap());
    refuse_existing(target);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    write_heatmap(doc, target);
    log << "rendered " << doc.samples.size() << " samples\n";
    out << target.string() << '\n';
}

}  // namespace pbsa

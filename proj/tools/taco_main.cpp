#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "taco/compressor.hpp"
#include "taco/config.hpp"
#include "taco/corpus.hpp"
#include "taco/errors.hpp"
#include "taco/evaluator.hpp"
#include "taco/oracle.hpp"
#include "taco/policy.hpp"
#include "taco/rewards.hpp"
#include "taco/trainer.hpp"

namespace {

using namespace taco;

// Exit codes: 0 success, 2 usage/config, 3 data, 4 oracle, 5 numerical.
int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const NumericalError*>(&e)) return 5;
    if (dynamic_cast<const OracleUnavailableError*>(&e)) return 4;
    if (dynamic_cast<const EmptyInputError*>(&e)) return 3;
    if (dynamic_cast<const ParseError*>(&e)) return 3;
    if (dynamic_cast<const SchemaError*>(&e)) return 3;
    if (dynamic_cast<const VocabError*>(&e)) return 3;
    if (dynamic_cast<const VersionError*>(&e)) return 3;
    if (dynamic_cast<const IntegrityError*>(&e)) return 3;
    if (dynamic_cast<const EmptyCompressionError*>(&e)) return 3;
    if (dynamic_cast<const ConfigError*>(&e)) return 2;
    if (dynamic_cast<const DimError*>(&e)) return 2;
    return 1;
}

std::vector<std::string> dataset_contexts(const std::vector<Sample>& samples) {
    std::vector<std::string> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.context);
    return out;
}

std::unique_ptr<Oracle> make_oracle(const AppConfig& config, const CorpusStats& stats) {
    std::shared_ptr<Oracle> inner;
    if (config.oracle_kind == "remote") {
        RemoteConfig remote = config.remote;
        const char* key = std::getenv("TACO_API_KEY");
        remote.api_key = key ? key : "";
        inner = std::make_shared<RemoteOracle>(remote);
    } else {
        inner = std::make_shared<LocalOracle>(stats);
    }
    auto cache = std::make_shared<ResponseCache>(config.cache_dir);
    return std::make_unique<CachedOracle>(std::move(inner), std::move(cache));
}

std::pair<PolicyParameters, Vocabulary> load_model(const std::string& checkpoint_path) {
    if (checkpoint_path.empty()) throw ConfigError("no checkpoint given (use --checkpoint)");
    if (!std::filesystem::exists(checkpoint_path))
        throw ConfigError("checkpoint not found: " + checkpoint_path);
    auto [params, step] = load_checkpoint(checkpoint_path);
    (void)step;
    Vocabulary vocab = Vocabulary::load(checkpoint_path + ".vocab");
    if (vocab.size() != params.dims.vocab)
        throw VersionError("vocabulary sidecar size " + std::to_string(vocab.size()) +
                           " does not match checkpoint vocab dim " + std::to_string(params.dims.vocab));
    return {std::move(params), std::move(vocab)};
}

std::vector<EvalMetric> pick_metrics(const AppConfig& config, const std::vector<Sample>& samples) {
    if (!config.eval_metrics.empty()) {
        std::vector<EvalMetric> out;
        for (const auto& name : config.eval_metrics) out.push_back(eval_metric_from_name(name));
        return out;
    }
    bool any_qa = false, any_sum = false;
    for (const auto& s : samples) (s.task == Task::qa ? any_qa : any_sum) = true;
    std::vector<EvalMetric> out;
    if (any_sum) {
        out.insert(out.end(), {EvalMetric::bleu, EvalMetric::rouge1, EvalMetric::rouge2, EvalMetric::rougeL});
    }
    if (any_qa) {
        out.insert(out.end(), {EvalMetric::f1, EvalMetric::em, EvalMetric::best_subspan_em});
    }
    return out;
}

int cmd_bootstrap(const AppConfig& config) {
    if (config.dataset.empty()) throw ConfigError("no dataset given (use --dataset)");
    auto samples = load_dataset(config.dataset);
    if (samples.empty()) throw ConfigError("dataset is empty: " + config.dataset);

    Vocabulary vocab = Vocabulary::build(dataset_contexts(samples));

    std::vector<LabeledSequence> labeled;
    for (const auto& s : samples) {
        TokenSequence seq = tokenize(s.context, vocab);
        for (auto& piece : chunk(seq, config.train.max_seq_len)) {
            LabeledSequence item;
            item.labels = heuristic_labels(piece);
            item.seq = std::move(piece);
            labeled.push_back(std::move(item));
        }
    }

    Dims dims{vocab.size(), config.embed_dim, config.depth};
    PolicyParameters params = init_params(config.train.seed, dims);
    params = supervised_bootstrap(std::move(params), labeled, config.bootstrap_epochs,
                                  config.bootstrap_lr, config.train.seed);

    std::filesystem::create_directories(config.out_dir);
    std::string path = config.checkpoint.empty() ? config.out_dir + "/base.taco" : config.checkpoint;
    save_checkpoint(params, 0, path);
    vocab.save(path + ".vocab");
    std::cout << "bootstrap: " << labeled.size() << " chunks, vocab " << vocab.size()
              << ", checkpoint " << path << "\n";
    return 0;
}

int cmd_train(AppConfig config, bool resume) {
    if (config.dataset.empty()) throw ConfigError("no dataset given (use --dataset)");
    auto samples = load_dataset(config.dataset);
    if (samples.empty()) throw ConfigError("dataset is empty: " + config.dataset);

    auto [params, vocab] = load_model(config.checkpoint);
    CorpusStats stats = CorpusStats::from_texts(dataset_contexts(samples));
    auto oracle = make_oracle(config, stats);

    std::size_t resume_step = 0;
    if (resume) {
        if (auto latest = find_latest_checkpoint(config.out_dir)) {
            auto [p, step] = load_checkpoint(*latest, params.dims);
            params = std::move(p);
            resume_step = step;
            std::cout << "resuming from " << *latest << " at step " << step << "\n";
        }
    }

    std::filesystem::create_directories(config.out_dir);
    std::ofstream log(config.out_dir + "/train_log.jsonl",
                      resume ? std::ios::app : std::ios::trunc);

    TrainResult result = run_training(samples, vocab, std::move(params), *oracle, config.train, stats,
                                      config.out_dir, resume_step, &log);

    std::string final_path = config.out_dir + "/final.taco";
    save_checkpoint(result.params, result.final_step, final_path);
    vocab.save(final_path + ".vocab");

    std::map<std::size_t, std::vector<const TrainLogRecord*>> by_epoch;
    for (const auto& rec : result.log) by_epoch[rec.epoch].push_back(&rec);
    for (const auto& [epoch, recs] : by_epoch) {
        double r = 0, delta = 0, kept = 0;
        std::size_t n = 0;
        for (const auto* rec : recs) {
            if (rec->skipped) continue;
            r += rec->reward;
            delta += rec->delta;
            kept += rec->kept_fraction;
            ++n;
        }
        if (n == 0) n = 1;
        std::cout << "epoch " << epoch << ": steps=" << recs.size() << " mean_r=" << r / n
                  << " mean_delta=" << delta / n << " kept_fraction=" << kept / n << "\n";
    }
    std::cout << "final checkpoint: " << final_path << " (step " << result.final_step << ")\n";
    return 0;
}

int cmd_compress(const AppConfig& config, const std::string& input, double rate) {
    if (!(rate > 0.0 && rate <= 1.0)) throw ConfigError("rate must lie in (0, 1]");
    auto [params, vocab] = load_model(config.checkpoint);

    std::string text;
    if (input == "-") {
        std::ostringstream buf;
        buf << std::cin.rdbuf();
        text = buf.str();
    } else {
        if (!std::filesystem::exists(input)) throw ConfigError("input file not found: " + input);
        std::ifstream in(input, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        text = buf.str();
    }

    TokenSequence seq = tokenize(text, vocab);
    auto [comp, stats] = compress_document(seq, params, rate, SelectMode::topk, config.train.max_seq_len);
    std::cout << detokenize(comp.seq) << "\n";
    std::cout << "original_n=" << stats.original_n << " compressed_n=" << stats.compressed_n
              << " rate=" << std::fixed << std::setprecision(6) << stats.rate << " ratio="
              << std::setprecision(6) << stats.ratio << "\n";
    return 0;
}

int cmd_evaluate(const AppConfig& config) {
    std::string dataset_path = config.eval_dataset.empty() ? config.dataset : config.eval_dataset;
    if (dataset_path.empty()) throw ConfigError("no dataset given (use --dataset)");
    auto samples = load_dataset(dataset_path);
    if (samples.empty()) throw ConfigError("dataset is empty: " + dataset_path);

    auto [params, vocab] = load_model(config.checkpoint);
    CorpusStats stats = CorpusStats::from_texts(dataset_contexts(samples));
    auto oracle = make_oracle(config, stats);
    auto metrics = pick_metrics(config, samples);

    EvalReport report = evaluate(samples, vocab, params, config.rates, *oracle, metrics,
                                 config.train.max_seq_len, config.train.max_output_tokens);

    std::filesystem::create_directories(config.out_dir);
    {
        std::ofstream out(config.out_dir + "/report.jsonl", std::ios::trunc);
        out << report.to_jsonl();
    }
    {
        std::ofstream out(config.out_dir + "/report.txt", std::ios::trunc);
        out << report.to_table();
    }
    if (!report.complete())
        std::cerr << "warning: some oracle calls failed; report coverage is incomplete\n";
    std::cout << report.to_table();
    std::cout << "report written to " << config.out_dir << "/report.jsonl\n";
    return 0;
}

int cmd_cache(const AppConfig& config, const std::string& action) {
    ResponseCache cache(config.cache_dir);
    if (action == "stats") {
        auto s = cache.stats();
        std::cout << "entries=" << s.entries << " bytes=" << s.bytes << "\n";
        return 0;
    }
    if (action == "clear") {
        cache.clear();
        std::cout << "cache cleared\n";
        return 0;
    }
    throw ConfigError("unknown cache action '" + action + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Task-aware prompt compression: trainable keep/drop token policy"};
    app.require_subcommand(1);

    std::string config_path, dataset, eval_dataset, checkpoint, out_dir, cache_dir, input = "-";
    std::string oracle_kind, metric, rates_csv;
    double rate = 0.5;
    long long seed = -1;
    long long epochs = -1;
    double lr = -1.0;
    bool resume = false;
    std::string cache_action;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "flat key = value config file");
        cmd->add_option("--dataset", dataset, "JSON Lines dataset path");
        cmd->add_option("--checkpoint", checkpoint, "checkpoint path");
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--cache-dir", cache_dir, "oracle response cache directory");
        cmd->add_option("--seed", seed, "random seed");
        cmd->add_option("--oracle", oracle_kind, "oracle backend: local or remote");
    };

    auto* boot = app.add_subcommand("bootstrap", "build vocabulary and train the supervised base model");
    add_common(boot);

    auto* train = app.add_subcommand("train", "policy-gradient fine-tuning from a base checkpoint");
    add_common(train);
    train->add_option("--epochs", epochs, "training epochs");
    train->add_option("--lr", lr, "base learning rate");
    train->add_option("--metric", metric, "reward metric");
    train->add_flag("--resume", resume, "resume from the latest checkpoint in --out");

    auto* comp = app.add_subcommand("compress", "compress a document with a trained checkpoint");
    add_common(comp);
    comp->add_option("--input", input, "input file, or - for stdin");
    comp->add_option("--rate", rate, "target keep rate in (0, 1]");

    auto* eval = app.add_subcommand("evaluate", "score a checkpoint across compression rates");
    add_common(eval);
    eval->add_option("--eval-dataset", eval_dataset, "held-out dataset (defaults to --dataset)");
    eval->add_option("--rates", rates_csv, "comma-separated rate grid");

    auto* cache = app.add_subcommand("cache", "inspect or clear the oracle response cache");
    add_common(cache);
    cache->add_option("action", cache_action, "stats or clear")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        AppConfig config = config_path.empty() ? AppConfig{} : load_config_file(config_path);
        if (!dataset.empty()) config.dataset = dataset;
        if (!eval_dataset.empty()) config.eval_dataset = eval_dataset;
        if (!checkpoint.empty()) config.checkpoint = checkpoint;
        if (!out_dir.empty()) config.out_dir = out_dir;
        if (!cache_dir.empty()) config.cache_dir = cache_dir;
        if (!oracle_kind.empty()) apply_config_entry(config, "oracle", oracle_kind);
        if (!metric.empty()) apply_config_entry(config, "metric", metric);
        if (!rates_csv.empty()) config.rates = parse_rate_list(rates_csv);
        if (seed >= 0) config.train.seed = static_cast<std::uint64_t>(seed);
        if (epochs >= 0) config.train.epochs = static_cast<std::size_t>(epochs);
        if (lr > 0.0) config.train.learning_rate = lr;

        if (boot->parsed()) return cmd_bootstrap(config);
        if (train->parsed()) return cmd_train(std::move(config), resume);
        if (comp->parsed()) return cmd_compress(config, input, rate);
        if (eval->parsed()) return cmd_evaluate(config);
        if (cache->parsed()) return cmd_cache(config, cache_action);
        throw ConfigError("no subcommand given");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

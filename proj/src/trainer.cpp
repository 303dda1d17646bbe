#include "taco/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "taco/compressor.hpp"
#include "taco/digest.hpp"
#include "taco/errors.hpp"

namespace taco {

std::string TrainLogRecord::to_json_line() const {
    nlohmann::json j;
    j["epoch"] = epoch;
    j["step"] = step;
    j["sample_id"] = sample_id;
    j["delta"] = delta;
    j["reward"] = reward;
    j["metric_value"] = metric_value;
    j["in_tolerance"] = in_tolerance;
    j["loss"] = loss;
    j["entropy"] = entropy;
    j["kept_fraction"] = kept_fraction;
    j["lr"] = lr;
    j["skipped"] = skipped;
    return j.dump();
}

double cosine_lr(double base, std::size_t t, std::size_t total) {
    if (total == 0) return base;
    double x = static_cast<double>(t) / static_cast<double>(total);
    return base * 0.5 * (1.0 + std::cos(3.14159265358979323846 * x));
}

double scheduled_lr(const TrainConfig& config, std::size_t t, std::size_t total) {
    return config.schedule == LrSchedule::cosine ? cosine_lr(config.learning_rate, t, total)
                                                 : config.learning_rate;
}

namespace {

double compute_metric(const RewardConfig& reward, const Sample& sample, const TokenSequence& seq,
                      const ActionMask& mask, const std::string& y_comp, const std::string& y_orig,
                      const CorpusStats& stats) {
    switch (reward.metric) {
        case RewardMetric::bleu:
            return bleu(y_comp, y_orig);
        case RewardMetric::rouge1:
            return rouge_n(y_comp, y_orig, 1);
        case RewardMetric::rougeL:
            return rouge_l(y_comp, y_orig);
        case RewardMetric::f1:
            return token_f1(y_comp, y_orig);
        case RewardMetric::relevance:
            if (!sample.question) throw ConfigError("relevance reward requires qa samples");
            return relevance_reward(seq, *sample.question, mask, stats);
        case RewardMetric::f1_plus_relevance:
            if (!sample.question) throw ConfigError("relevance reward requires qa samples");
            return combine_qa_reward(token_f1(y_comp, y_orig),
                                     relevance_reward(seq, *sample.question, mask, stats),
                                     reward.relevance_mix);
    }
    throw ConfigError("unhandled reward metric");
}

}  // namespace

std::pair<PolicyParameters, TrainLogRecord> train_step(const PolicyParameters& params,
                                                       const Sample& sample,
                                                       const Vocabulary& vocab,
                                                       Oracle& oracle,
                                                       const TrainConfig& config,
                                                       const CorpusStats& stats,
                                                       const StepContext& ctx,
                                                       Rng& rng) {
    TrainLogRecord rec;
    rec.epoch = ctx.epoch;
    rec.step = ctx.step;
    rec.sample_id = sample.id;
    rec.lr = ctx.lr;

    TokenSequence seq = tokenize(sample.context, vocab);
    KeepProbabilities p = forward(params, seq);
    rec.entropy = entropy(p);

    const std::size_t k = std::max<std::size_t>(1, config.samples_per_prompt);
    GradientBundle grad_sum = zeros_like(params);
    double loss_sum = 0.0;
    double kept_sum = 0.0;

    try {
        OracleRequest orig_req{detokenize(seq), sample.question, sample.task, config.max_output_tokens};
        OracleResponse y_orig = oracle.generate(orig_req);

        for (std::size_t draw = 0; draw < k; ++draw) {
            ActionMask mask = sample_actions(p, rng);
            auto [comp, cstats] = compress(seq, mask);

            OracleRequest comp_req{detokenize(comp.seq), sample.question, sample.task,
                                   config.max_output_tokens};
            OracleResponse y_comp = oracle.generate(comp_req);

            double metric = compute_metric(config.reward, sample, seq, mask, y_comp.text, y_orig.text, stats);
            RewardOutcome outcome = shaped_reward(metric, seq.size(), mask.kept(), config.reward);

            auto [loss, grads] = loss_and_gradient(params, seq, mask,
                                                   outcome.value - config.reward_baseline,
                                                   config.reward.entropy_weight);
            loss_sum += loss;
            kept_sum += cstats.rate;

            std::vector<const Vector*> src;
            visit_tensors(grads, [&](const std::string&, const Vector& v) { src.push_back(&v); });
            std::size_t idx = 0;
            visit_tensors(grad_sum, [&](const std::string&, Vector& v) {
                const Vector& g = *src[idx++];
                for (std::size_t i = 0; i < v.size(); ++i) v[i] += g[i];
            });

            if (draw == 0) {
                rec.delta = outcome.delta;
                rec.reward = outcome.value;
                rec.metric_value = metric;
                rec.in_tolerance = outcome.in_tolerance;
            }
        }
    } catch (const OracleUnavailableError&) {
        rec.skipped = true;
        return {params, rec};
    }

    double inv_k = 1.0 / static_cast<double>(k);
    visit_tensors(grad_sum, [&](const std::string&, Vector& v) {
        for (auto& x : v) x *= inv_k;
    });
    rec.loss = loss_sum * inv_k;
    rec.kept_fraction = kept_sum * inv_k;

    PolicyParameters updated = apply_update(params, grad_sum, ctx.lr);
    return {std::move(updated), rec};
}

namespace {

struct ChunkedSample {
    Sample sample;  // context replaced by the chunk text
    std::size_t parent = 0;
};

std::vector<std::vector<ChunkedSample>> expand_chunks(const std::vector<Sample>& dataset,
                                                      const Vocabulary& vocab, std::size_t max_len) {
    std::vector<std::vector<ChunkedSample>> out(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        TokenSequence seq = tokenize(dataset[i].context, vocab);
        auto pieces = chunk(seq, max_len);
        for (std::size_t c = 0; c < pieces.size(); ++c) {
            ChunkedSample cs;
            cs.sample = dataset[i];
            cs.sample.context = detokenize(pieces[c]);
            if (pieces.size() > 1) cs.sample.id = dataset[i].id + "#" + std::to_string(c);
            cs.parent = i;
            out[i].push_back(std::move(cs));
        }
    }
    return out;
}

std::string checkpoint_name(const std::string& dir, std::size_t step) {
    std::ostringstream name;
    name << dir << "/ckpt_" << std::setw(8) << std::setfill('0') << step << ".taco";
    return name.str();
}

}  // namespace

TrainResult run_training(const std::vector<Sample>& dataset,
                         const Vocabulary& vocab,
                         PolicyParameters init,
                         Oracle& oracle,
                         const TrainConfig& config,
                         const CorpusStats& stats,
                         const std::string& checkpoint_dir,
                         std::size_t resume_step,
                         std::ostream* log_stream) {
    if (dataset.empty()) throw ConfigError("training dataset is empty");
    if (config.epochs < 1) throw ConfigError("epochs must be >= 1");
    if (config.learning_rate <= 0.0) throw ConfigError("learning rate must be > 0");
    if (config.samples_per_prompt < 1) throw ConfigError("samples_per_prompt must be >= 1");

    if (!checkpoint_dir.empty()) std::filesystem::create_directories(checkpoint_dir);

    auto chunked = expand_chunks(dataset, vocab, config.max_seq_len);
    std::size_t steps_per_epoch = 0;
    for (const auto& c : chunked) steps_per_epoch += c.size();
    const std::size_t total_steps = steps_per_epoch * config.epochs;

    TrainResult result;
    result.params = std::move(init);

    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);

    std::size_t step = 0;
    auto save_at = [&](std::size_t s) {
        if (!checkpoint_dir.empty()) save_checkpoint(result.params, s, checkpoint_name(checkpoint_dir, s));
    };

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        Rng shuffle_rng = rng_for_step(mix64(config.seed ^ 0x7368756666ull), epoch);
        std::iota(order.begin(), order.end(), 0);
        shuffle_rng.shuffle(order);

        for (std::size_t sample_idx : order) {
            for (const auto& cs : chunked[sample_idx]) {
                if (step < resume_step) {
                    ++step;
                    continue;
                }
                if (config.max_steps > 0 && step >= config.max_steps) {
                    save_at(step);
                    result.final_step = step;
                    return result;
                }
                StepContext ctx{epoch, step, scheduled_lr(config, step, total_steps)};
                Rng rng = rng_for_step(config.seed, step);
                try {
                    auto [updated, rec] = train_step(result.params, cs.sample, vocab, oracle, config,
                                                     stats, ctx, rng);
                    result.params = std::move(updated);
                    if (log_stream) (*log_stream) << rec.to_json_line() << '\n';
                    result.log.push_back(std::move(rec));
                } catch (const NumericalError&) {
                    save_at(step);
                    throw;
                }
                ++step;
                if (config.checkpoint_every > 0 && step % config.checkpoint_every == 0) save_at(step);
            }
        }
    }
    result.final_step = step;
    save_at(step);
    return result;
}

namespace {

void put_u64(std::string& out, std::uint64_t x) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) { put_u64(out, std::bit_cast<std::uint64_t>(d)); }

std::uint64_t get_u64(const std::string& s, std::size_t& pos) {
    if (pos + 8 > s.size()) throw IntegrityError("checkpoint truncated");
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[pos + i])) << (8 * i);
    pos += 8;
    return x;
}

double get_f64(const std::string& s, std::size_t& pos) { return std::bit_cast<double>(get_u64(s, pos)); }

constexpr const char kMagic[] = "TACO1";
constexpr std::size_t kMagicLen = 5;

}  // namespace

void save_checkpoint(const PolicyParameters& params, std::uint64_t step, const std::string& path) {
    std::string payload;
    payload.append(kMagic, kMagicLen);
    put_u64(payload, params.dims.vocab);
    put_u64(payload, params.dims.embed);
    put_u64(payload, params.dims.depth);
    put_u64(payload, step);

    std::size_t tensor_count = 0;
    visit_tensors(params, [&](const std::string&, const Vector&) { ++tensor_count; });
    put_u64(payload, tensor_count);
    visit_tensors(params, [&](const std::string&, const Vector& v) {
        put_u64(payload, v.size());
        for (double x : v) put_f64(payload, x);
    });

    auto digest = sha256(payload.data(), payload.size());
    payload.append(reinterpret_cast<const char*>(digest.data()), digest.size());

    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write checkpoint " + path);
        out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
        if (!out) throw ConfigError("short write for checkpoint " + path);
    }
    std::filesystem::rename(tmp, path);
}

std::pair<PolicyParameters, std::uint64_t> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read checkpoint " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string data = buf.str();

    if (data.size() < kMagicLen + 32) throw IntegrityError("checkpoint truncated");
    if (std::memcmp(data.data(), kMagic, kMagicLen) != 0)
        throw VersionError("checkpoint magic mismatch (expected TACO1)");

    std::string body = data.substr(0, data.size() - 32);
    auto digest = sha256(body.data(), body.size());
    if (std::memcmp(digest.data(), data.data() + body.size(), 32) != 0)
        throw IntegrityError("checkpoint digest mismatch");

    std::size_t pos = kMagicLen;
    Dims dims;
    dims.vocab = get_u64(body, pos);
    dims.embed = get_u64(body, pos);
    dims.depth = get_u64(body, pos);
    std::uint64_t step = get_u64(body, pos);

    PolicyParameters params = init_params(0, dims);
    std::size_t expected_tensors = 0;
    visit_tensors(params, [&](const std::string&, const Vector&) { ++expected_tensors; });

    std::uint64_t tensor_count = get_u64(body, pos);
    if (tensor_count != expected_tensors) throw IntegrityError("checkpoint tensor count mismatch");

    visit_tensors(params, [&](const std::string& name, Vector& v) {
        std::uint64_t count = get_u64(body, pos);
        if (count != v.size()) throw IntegrityError("checkpoint tensor '" + name + "' has wrong size");
        for (auto& x : v) x = get_f64(body, pos);
    });
    if (pos != body.size()) throw IntegrityError("checkpoint has trailing bytes");
    return {std::move(params), step};
}

std::pair<PolicyParameters, std::uint64_t> load_checkpoint(const std::string& path, const Dims& expected) {
    auto [params, step] = load_checkpoint(path);
    if (!(params.dims == expected)) {
        throw VersionError("checkpoint dims (V=" + std::to_string(params.dims.vocab) +
                           ", d=" + std::to_string(params.dims.embed) +
                           ", depth=" + std::to_string(params.dims.depth) + ") do not match expected (V=" +
                           std::to_string(expected.vocab) + ", d=" + std::to_string(expected.embed) +
                           ", depth=" + std::to_string(expected.depth) + ")");
    }
    return {std::move(params), step};
}

std::optional<std::string> find_latest_checkpoint(const std::string& dir) {
    std::error_code ec;
    if (!std::filesystem::exists(dir, ec)) return std::nullopt;
    std::optional<std::string> best;
    std::uint64_t best_step = 0;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        auto name = entry.path().filename().string();
        if (name.rfind("ckpt_", 0) != 0 || entry.path().extension() != ".taco") continue;
        try {
            auto [params, step] = load_checkpoint(entry.path().string());
            (void)params;
            if (!best || step >= best_step) {
                best = entry.path().string();
                best_step = step;
            }
        } catch (const Error&) {
            continue;  // unreadable checkpoint files are not candidates
        }
    }
    return best;
}

}  // namespace taco

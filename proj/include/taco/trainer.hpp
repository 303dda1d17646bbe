#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "taco/corpus.hpp"
#include "taco/oracle.hpp"
#include "taco/policy.hpp"
#include "taco/rewards.hpp"
#include "taco/rng.hpp"

namespace taco {

enum class LrSchedule { constant, cosine };

struct TrainConfig {
    std::size_t epochs = 4;
    double learning_rate = 1e-6;
    LrSchedule schedule = LrSchedule::cosine;
    RewardConfig reward;
    std::size_t samples_per_prompt = 1;  // masks sampled per step; gradients averaged
    std::uint64_t seed = 0;
    std::size_t checkpoint_every = 0;  // steps; 0 = final checkpoint only
    std::size_t max_seq_len = 512;
    std::size_t max_output_tokens = 64;
    double reward_baseline = 0.0;  // subtracted from r before the gradient; 0 = plain REINFORCE
    std::size_t max_steps = 0;     // stop after this many global steps; 0 = run to completion
};

struct TrainLogRecord {
    std::size_t epoch = 0;
    std::size_t step = 0;
    std::string sample_id;
    double delta = 0.0;
    double reward = 0.0;
    double metric_value = 0.0;
    bool in_tolerance = false;
    double loss = 0.0;
    double entropy = 0.0;
    double kept_fraction = 0.0;
    double lr = 0.0;
    bool skipped = false;

    std::string to_json_line() const;
};

// base * 0.5 * (1 + cos(pi * t / total)); base at t == 0, zero at t == total.
double cosine_lr(double base, std::size_t t, std::size_t total);
double scheduled_lr(const TrainConfig& config, std::size_t t, std::size_t total);

struct StepContext {
    std::size_t epoch = 0;
    std::size_t step = 0;
    double lr = 0.0;
};

// One optimization step on one (already chunk-sized) sample: forward,
// Bernoulli sample, compress, oracle outputs for original and compressed
// prompt, shaped reward, exact gradient, SGD update. An unavailable oracle
// skips the step (params unchanged, record flagged).
std::pair<PolicyParameters, TrainLogRecord> train_step(const PolicyParameters& params,
                                                       const Sample& sample,
                                                       const Vocabulary& vocab,
                                                       Oracle& oracle,
                                                       const TrainConfig& config,
                                                       const CorpusStats& stats,
                                                       const StepContext& ctx,
                                                       Rng& rng);

struct TrainResult {
    PolicyParameters params;
    std::vector<TrainLogRecord> log;
    std::size_t final_step = 0;
};

// The full epoch loop: seeded shuffle per epoch, one step per chunk,
// cosine or constant learning rate over all steps, periodic checkpoints.
// resume_step skips already-finished steps exactly (all per-step randomness
// is keyed by step index). A NumericalError aborts after writing a
// checkpoint.
TrainResult run_training(const std::vector<Sample>& dataset,
                         const Vocabulary& vocab,
                         PolicyParameters init,
                         Oracle& oracle,
                         const TrainConfig& config,
                         const CorpusStats& stats,
                         const std::string& checkpoint_dir = "",
                         std::size_t resume_step = 0,
                         std::ostream* log_stream = nullptr);

// Binary checkpoint: "TACO1" magic, dims, step counter, length-prefixed
// little-endian f64 tensors in visit_tensors order, SHA-256 trailer.
void save_checkpoint(const PolicyParameters& params, std::uint64_t step, const std::string& path);
std::pair<PolicyParameters, std::uint64_t> load_checkpoint(const std::string& path);
std::pair<PolicyParameters, std::uint64_t> load_checkpoint(const std::string& path, const Dims& expected);

// Highest-step ckpt_*.taco in dir, if any.
std::optional<std::string> find_latest_checkpoint(const std::string& dir);

}  // namespace taco

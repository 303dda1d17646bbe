#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "taco/compressor.hpp"
#include "taco/corpus.hpp"
#include "taco/policy.hpp"

namespace taco {

enum class RewardMetric { bleu, rouge1, rougeL, f1, f1_plus_relevance, relevance };

std::string reward_metric_name(RewardMetric m);
RewardMetric reward_metric_from_name(const std::string& name);  // ConfigError on unknown

struct RewardConfig {
    double target_rate = 0.5;            // c, fraction of tokens to retain
    double tolerance = 30.0;             // L, allowed |delta| in tokens
    double out_of_range_penalty = -0.1;  // r0
    double entropy_weight = 0.01;        // lambda
    double relevance_mix = 0.5;          // alpha
    RewardMetric metric = RewardMetric::bleu;
    bool halfopen_tolerance = false;     // variant: -L <= delta < L
};

struct RewardOutcome {
    double delta = 0.0;
    bool in_tolerance = false;
    double value = 0.0;
    std::optional<double> metric_value;
};

// delta = compressed_n - c * original_n; the metric value inside tolerance,
// the fixed penalty outside it.
RewardOutcome shaped_reward(double metric_value, std::size_t original_n, std::size_t compressed_n,
                            const RewardConfig& config);

// Clipped n-gram matches / candidate n-gram count, unsmoothed.
std::pair<std::size_t, std::size_t> ngram_overlap(const std::vector<std::string>& cand,
                                                  const std::vector<std::string>& ref,
                                                  std::size_t n);

// Sentence BLEU-4: geometric mean of modified n-gram precisions with
// add-one smoothing on the n >= 2 orders, times the brevity penalty
// exp(1 - ref_len/cand_len) when the candidate is shorter.
double bleu(const std::string& candidate, const std::string& reference);

double rouge_n(const std::string& candidate, const std::string& reference, std::size_t n);
double rouge_l(const std::string& candidate, const std::string& reference);

// Lowercase, strip punctuation and articles; the shared normalization for
// the QA-style metrics below.
std::vector<std::string> normalize_answer_tokens(const std::string& text);

// Bag-of-tokens F1 over normalized tokens.
double token_f1(const std::string& candidate, const std::string& reference);

int exact_match(const std::string& candidate, const std::string& reference);

// 1 iff the normalized reference occurs as a contiguous token subspan of
// the normalized candidate, or vice versa.
int best_subspan_em(const std::string& candidate, const std::string& reference);

// Split after '.', '!' or '?' followed by whitespace; a trailing fragment
// is its own sentence.
std::vector<std::string> sentence_split(const std::string& text);

// Document frequencies over a corpus; one count per document a token
// appears in. idf is the smoothed variant ln((1+N)/(1+df)) + 1 so that it
// is strictly positive for every token.
class CorpusStats {
  public:
    static CorpusStats from_texts(const std::vector<std::string>& docs);
    double idf(const std::string& token) const;
    std::size_t doc_count() const { return docs_; }

  private:
    std::unordered_map<std::string, std::size_t> df_;
    std::size_t docs_ = 0;
};

// L2-normalized sparse TF-IDF vector; zero vector for empty text.
struct TfidfVector {
    std::unordered_map<std::string, double> weights;
};

TfidfVector embed(const std::string& text, const CorpusStats& stats);
double cosine(const TfidfVector& a, const TfidfVector& b);

// Token-wise relevance: each token inherits its sentence's cosine
// similarity with the question; the reward is the mean over kept tokens.
double relevance_reward(const TokenSequence& context, const std::string& question,
                        const ActionMask& mask, const CorpusStats& stats);

double combine_qa_reward(double f1_value, double relevance_value, double alpha);

}  // namespace taco

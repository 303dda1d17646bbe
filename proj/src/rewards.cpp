#include "taco/rewards.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include "taco/errors.hpp"

namespace taco {

std::string reward_metric_name(RewardMetric m) {
    switch (m) {
        case RewardMetric::bleu: return "bleu";
        case RewardMetric::rouge1: return "rouge1";
        case RewardMetric::rougeL: return "rougeL";
        case RewardMetric::f1: return "f1";
        case RewardMetric::f1_plus_relevance: return "f1_plus_relevance";
        case RewardMetric::relevance: return "relevance";
    }
    return "bleu";
}

RewardMetric reward_metric_from_name(const std::string& name) {
    if (name == "bleu") return RewardMetric::bleu;
    if (name == "rouge1") return RewardMetric::rouge1;
    if (name == "rougeL") return RewardMetric::rougeL;
    if (name == "f1") return RewardMetric::f1;
    if (name == "f1_plus_relevance") return RewardMetric::f1_plus_relevance;
    if (name == "relevance") return RewardMetric::relevance;
    throw ConfigError("unknown reward metric '" + name + "'");
}

RewardOutcome shaped_reward(double metric_value, std::size_t original_n, std::size_t compressed_n,
                            const RewardConfig& config) {
    RewardOutcome out;
    out.delta = static_cast<double>(compressed_n) - config.target_rate * static_cast<double>(original_n);
    out.in_tolerance = config.halfopen_tolerance
                           ? (-config.tolerance <= out.delta && out.delta < config.tolerance)
                           : (std::abs(out.delta) <= config.tolerance);
    out.metric_value = metric_value;
    out.value = out.in_tolerance ? metric_value : config.out_of_range_penalty;
    return out;
}

namespace {

std::map<std::vector<std::string>, std::size_t> ngram_counts(const std::vector<std::string>& toks,
                                                             std::size_t n) {
    std::map<std::vector<std::string>, std::size_t> counts;
    if (toks.size() < n || n == 0) return counts;
    for (std::size_t i = 0; i + n <= toks.size(); ++i)
        ++counts[std::vector<std::string>(toks.begin() + i, toks.begin() + i + n)];
    return counts;
}

}  // namespace

std::pair<std::size_t, std::size_t> ngram_overlap(const std::vector<std::string>& cand,
                                                  const std::vector<std::string>& ref,
                                                  std::size_t n) {
    auto cc = ngram_counts(cand, n);
    auto rc = ngram_counts(ref, n);
    std::size_t matches = 0, total = 0;
    for (const auto& [gram, count] : cc) {
        total += count;
        auto it = rc.find(gram);
        if (it != rc.end()) matches += std::min(count, it->second);
    }
    return {matches, total};
}

double bleu(const std::string& candidate, const std::string& reference) {
    auto cand = split_words(candidate);
    auto ref = split_words(reference);
    if (cand.empty()) return 0.0;
    if (ref.empty()) return 0.0;

    auto [m1, t1] = ngram_overlap(cand, ref, 1);
    if (m1 == 0) return 0.0;
    double log_sum = std::log(static_cast<double>(m1) / static_cast<double>(t1));
    for (std::size_t n = 2; n <= 4; ++n) {
        auto [m, t] = ngram_overlap(cand, ref, n);
        log_sum += std::log(static_cast<double>(m + 1) / static_cast<double>(t + 1));
    }
    double score = std::exp(log_sum / 4.0);
    if (cand.size() < ref.size())
        score *= std::exp(1.0 - static_cast<double>(ref.size()) / static_cast<double>(cand.size()));
    return score;
}

double rouge_n(const std::string& candidate, const std::string& reference, std::size_t n) {
    if (n != 1 && n != 2) throw ConfigError("rouge_n supports n in {1, 2}");
    auto cand = split_words(candidate);
    auto ref = split_words(reference);
    if (cand.size() < n || ref.size() < n) return 0.0;
    auto [matches, cand_total] = ngram_overlap(cand, ref, n);
    if (matches == 0) return 0.0;
    std::size_t ref_total = ref.size() - n + 1;
    double p = static_cast<double>(matches) / static_cast<double>(cand_total);
    double r = static_cast<double>(matches) / static_cast<double>(ref_total);
    return 2.0 * p * r / (p + r);
}

double rouge_l(const std::string& candidate, const std::string& reference) {
    auto cand = split_words(candidate);
    auto ref = split_words(reference);
    if (cand.empty() || ref.empty()) return 0.0;

    const std::size_t a = cand.size(), b = ref.size();
    std::vector<std::size_t> prev(b + 1, 0), cur(b + 1, 0);
    for (std::size_t i = 1; i <= a; ++i) {
        for (std::size_t j = 1; j <= b; ++j) {
            cur[j] = cand[i - 1] == ref[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    std::size_t lcs = prev[b];
    if (lcs == 0) return 0.0;
    double p = static_cast<double>(lcs) / static_cast<double>(a);
    double r = static_cast<double>(lcs) / static_cast<double>(b);
    return 2.0 * p * r / (p + r);
}

std::vector<std::string> normalize_answer_tokens(const std::string& text) {
    std::string cleaned;
    cleaned.reserve(text.size());
    for (unsigned char c : text) {
        if (c < 128 && std::ispunct(c)) continue;
        cleaned.push_back(static_cast<char>(std::tolower(c)));
    }
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < cleaned.size()) {
        while (i < cleaned.size() && std::isspace(static_cast<unsigned char>(cleaned[i]))) ++i;
        std::size_t start = i;
        while (i < cleaned.size() && !std::isspace(static_cast<unsigned char>(cleaned[i]))) ++i;
        if (i == start) continue;
        std::string tok = cleaned.substr(start, i - start);
        if (tok == "a" || tok == "an" || tok == "the") continue;
        out.push_back(std::move(tok));
    }
    return out;
}

namespace {

std::unordered_map<std::string, std::size_t> bag(const std::vector<std::string>& toks) {
    std::unordered_map<std::string, std::size_t> counts;
    for (const auto& t : toks) ++counts[t];
    return counts;
}

}  // namespace

double token_f1(const std::string& candidate, const std::string& reference) {
    auto cand = normalize_answer_tokens(candidate);
    auto ref = normalize_answer_tokens(reference);
    if (cand.empty() || ref.empty()) return 0.0;
    auto rb = bag(ref);
    std::size_t overlap = 0;
    for (const auto& [tok, count] : bag(cand)) {
        auto it = rb.find(tok);
        if (it != rb.end()) overlap += std::min(count, it->second);
    }
    if (overlap == 0) return 0.0;
    double p = static_cast<double>(overlap) / static_cast<double>(cand.size());
    double r = static_cast<double>(overlap) / static_cast<double>(ref.size());
    return 2.0 * p * r / (p + r);
}

int exact_match(const std::string& candidate, const std::string& reference) {
    return normalize_answer_tokens(candidate) == normalize_answer_tokens(reference) ? 1 : 0;
}

namespace {

bool contains_subspan(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
    if (needle.empty() || needle.size() > hay.size()) return false;
    for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
        if (std::equal(needle.begin(), needle.end(), hay.begin() + i)) return true;
    }
    return false;
}

}  // namespace

int best_subspan_em(const std::string& candidate, const std::string& reference) {
    auto cand = normalize_answer_tokens(candidate);
    auto ref = normalize_answer_tokens(reference);
    if (cand.empty() && ref.empty()) return 1;
    return contains_subspan(cand, ref) || contains_subspan(ref, cand) ? 1 : 0;
}

std::vector<std::string> sentence_split(const std::string& text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    const std::size_t n = text.size();
    auto emit = [&](std::size_t end) {
        std::size_t lo = start;
        while (lo < end && std::isspace(static_cast<unsigned char>(text[lo]))) ++lo;
        std::size_t hi = end;
        while (hi > lo && std::isspace(static_cast<unsigned char>(text[hi - 1]))) --hi;
        if (hi > lo) out.push_back(text.substr(lo, hi - lo));
    };
    for (std::size_t i = 0; i < n; ++i) {
        char c = text[i];
        if ((c == '.' || c == '!' || c == '?') && i + 1 < n &&
            std::isspace(static_cast<unsigned char>(text[i + 1]))) {
            emit(i + 1);
            start = i + 1;
        }
    }
    emit(n);
    return out;
}

CorpusStats CorpusStats::from_texts(const std::vector<std::string>& docs) {
    CorpusStats stats;
    stats.docs_ = docs.size();
    for (const auto& doc : docs) {
        std::unordered_map<std::string, bool> seen;
        for (const auto& tok : split_words(doc)) {
            if (!seen.emplace(tok, true).second) continue;
            ++stats.df_[tok];
        }
    }
    return stats;
}

double CorpusStats::idf(const std::string& token) const {
    auto it = df_.find(token);
    std::size_t df = it == df_.end() ? 0 : it->second;
    return std::log(static_cast<double>(1 + docs_) / static_cast<double>(1 + df)) + 1.0;
}

TfidfVector embed(const std::string& text, const CorpusStats& stats) {
    TfidfVector vec;
    for (const auto& tok : split_words(text)) vec.weights[tok] += 1.0;
    double norm_sq = 0.0;
    for (auto& [tok, w] : vec.weights) {
        w *= stats.idf(tok);
        norm_sq += w * w;
    }
    if (norm_sq > 0.0) {
        double inv = 1.0 / std::sqrt(norm_sq);
        for (auto& [tok, w] : vec.weights) w *= inv;
    }
    return vec;
}

double cosine(const TfidfVector& a, const TfidfVector& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (const auto& [tok, w] : a.weights) na += w * w;
    for (const auto& [tok, w] : b.weights) nb += w * w;
    if (na == 0.0 || nb == 0.0) return 0.0;
    const auto& small = a.weights.size() <= b.weights.size() ? a : b;
    const auto& large = a.weights.size() <= b.weights.size() ? b : a;
    for (const auto& [tok, w] : small.weights) {
        auto it = large.weights.find(tok);
        if (it != large.weights.end()) dot += w * it->second;
    }
    return dot / std::sqrt(na * nb);
}

double relevance_reward(const TokenSequence& context, const std::string& question,
                        const ActionMask& mask, const CorpusStats& stats) {
    if (mask.keep.size() != context.size()) throw DimError("mask length does not match context");

    auto sentences = sentence_split(detokenize(context));
    TfidfVector q = embed(question, stats);

    std::vector<double> token_score(context.size(), 0.0);
    std::size_t pos = 0;
    double sim = 0.0;
    for (const auto& sentence : sentences) {
        sim = cosine(embed(sentence, stats), q);
        std::size_t count = split_words(sentence).size();
        for (std::size_t k = 0; k < count && pos < context.size(); ++k) token_score[pos++] = sim;
    }
    while (pos < context.size()) token_score[pos++] = sim;

    double total = 0.0;
    std::size_t kept = 0;
    for (std::size_t i = 0; i < context.size(); ++i) {
        if (!mask.keep[i]) continue;
        total += token_score[i];
        ++kept;
    }
    return kept == 0 ? 0.0 : total / static_cast<double>(kept);
}

double combine_qa_reward(double f1_value, double relevance_value, double alpha) {
    return f1_value + alpha * relevance_value;
}

}  // namespace taco

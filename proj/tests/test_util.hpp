#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "taco/corpus.hpp"
#include "taco/oracle.hpp"
#include "taco/policy.hpp"
#include "taco/rng.hpp"

namespace taco::test {

// Fresh scratch directory under the current working directory.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::current_path() / "test_scratch" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// Central finite differences of eval over every parameter entry.
inline GradientBundle fd_gradient(const PolicyParameters& params,
                                  const std::function<double(const PolicyParameters&)>& eval,
                                  double h) {
    GradientBundle numeric = zeros_like(params);
    PolicyParameters work = params;

    std::vector<Vector*> work_tensors, out_tensors;
    visit_tensors(work, [&](const std::string&, Vector& v) { work_tensors.push_back(&v); });
    visit_tensors(numeric, [&](const std::string&, Vector& v) { out_tensors.push_back(&v); });

    for (std::size_t t = 0; t < work_tensors.size(); ++t) {
        Vector& v = *work_tensors[t];
        for (std::size_t i = 0; i < v.size(); ++i) {
            double orig = v[i];
            v[i] = orig + h;
            double up = eval(work);
            v[i] = orig - h;
            double down = eval(work);
            v[i] = orig;
            (*out_tensors[t])[i] = (up - down) / (2.0 * h);
        }
    }
    return numeric;
}

inline TokenSequence random_seq(Rng& rng, std::size_t vocab, std::size_t n) {
    TokenSequence seq;
    for (std::size_t i = 0; i < n; ++i) {
        int id = static_cast<int>(rng.index(vocab));
        seq.ids.push_back(id);
        seq.tokens.push_back("w" + std::to_string(id));
    }
    return seq;
}

// Records every request it forwards; used for cache-hit accounting.
class CountingOracle : public Oracle {
  public:
    explicit CountingOracle(std::shared_ptr<Oracle> inner) : inner_(std::move(inner)) {}
    OracleResponse generate(const OracleRequest& request) override {
        requests.push_back(request);
        return inner_->generate(request);
    }
    std::string id() const override { return inner_->id(); }

    std::vector<OracleRequest> requests;

  private:
    std::shared_ptr<Oracle> inner_;
};

inline const std::vector<std::string>& toy_keywords() {
    static const std::vector<std::string> words = {
        "zephyr", "quartz",  "nebula", "falcon",  "ember",   "glacier", "harbor", "jasmine",
        "krypton", "lagoon", "meteor", "obsidian", "prism",  "quiver",  "saffron"};
    return words;
}

inline const std::vector<std::string>& toy_fillers() {
    static const std::vector<std::string> words = {
        "the", "of",  "and", "a",    "to",   "in",   "is",  "it",  "on",   "as",
        "at",  "by",  "for", "with", "from", "or",   "an",  "be",  "this", "that",
        "are", "was", "were", "has", "had",  "not",  "but", "they", "we",  "you"};
    return words;
}

struct ToyCorpus {
    std::vector<Sample> samples;
    std::vector<std::vector<std::string>> keywords_per_sample;  // the 5 keywords, in order
};

// Prompts of 45 stopword fillers with a contiguous block of 5 content-word
// keywords; the question names the keywords, so an extractive QA oracle can
// only answer well when they survive compression.
inline ToyCorpus build_toy_corpus(std::size_t count, std::uint64_t seed) {
    ToyCorpus corpus;
    Rng rng(mix64(seed));
    for (std::size_t s = 0; s < count; ++s) {
        std::vector<std::string> kws;
        std::vector<std::size_t> pool(toy_keywords().size());
        for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
        rng.shuffle(pool);
        for (std::size_t i = 0; i < 5; ++i) kws.push_back(toy_keywords()[pool[i]]);

        std::vector<std::string> tokens;
        for (std::size_t i = 0; i < 45; ++i)
            tokens.push_back(toy_fillers()[rng.index(toy_fillers().size())]);
        std::size_t block = rng.index(tokens.size() + 1);
        tokens.insert(tokens.begin() + block, kws.begin(), kws.end());

        Sample sample;
        sample.id = "toy-" + std::to_string(s);
        sample.task = Task::qa;
        std::string ctx, q;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (i) ctx.push_back(' ');
            ctx += tokens[i];
        }
        for (std::size_t i = 0; i < kws.size(); ++i) {
            if (i) q.push_back(' ');
            q += kws[i];
        }
        sample.context = ctx;
        sample.question = q;
        corpus.samples.push_back(std::move(sample));
        corpus.keywords_per_sample.push_back(std::move(kws));
    }
    return corpus;
}

inline bool is_toy_keyword(const std::string& token) {
    for (const auto& k : toy_keywords())
        if (k == token) return true;
    return false;
}

// Mean keep probability over tokens selected by pred, across all samples.
inline double mean_keep_prob(const PolicyParameters& params, const Vocabulary& vocab,
                             const std::vector<Sample>& samples,
                             const std::function<bool(const std::string&)>& pred) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& s : samples) {
        TokenSequence seq = tokenize(s.context, vocab);
        KeepProbabilities p = forward(params, seq);
        for (std::size_t i = 0; i < seq.size(); ++i) {
            if (!pred(seq.tokens[i])) continue;
            sum += p[i];
            ++count;
        }
    }
    return count ? sum / static_cast<double>(count) : 0.0;
}

}  // namespace taco::test

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "taco/corpus.hpp"
#include "taco/oracle.hpp"
#include "taco/policy.hpp"

namespace taco {

enum class EvalMetric { bleu, rouge1, rouge2, rougeL, f1, em, best_subspan_em };

std::string eval_metric_name(EvalMetric m);
EvalMetric eval_metric_from_name(const std::string& name);  // ConfigError on unknown

struct EvalCell {
    double rate = 0.0;  // requested tau
    std::string metric;
    double mean_vs_orig = 0.0;
    std::optional<double> mean_vs_ref;

    bool operator==(const EvalCell&) const = default;
};

struct EvalRateSummary {
    double rate = 0.0;
    std::size_t samples = 0;
    std::size_t em_count_vs_orig = 0;
    double achieved_rate = 0.0;  // mean realized tau
    double achieved_ratio = 0.0;
    std::size_t oracle_failures = 0;

    bool operator==(const EvalRateSummary&) const = default;
};

struct EvalReport {
    std::vector<double> rates;
    std::vector<std::string> metrics;
    std::vector<EvalCell> cells;  // rates x metrics, rate-major
    std::vector<EvalRateSummary> summaries;

    std::string to_jsonl() const;
    static EvalReport from_jsonl(const std::string& text);
    std::string to_table() const;
    bool complete() const;  // no oracle failures anywhere

    bool operator==(const EvalReport&) const = default;
};

// Top-k compression at every requested rate; metrics of the compressed
// output against the original-prompt output (and against the reference
// when one exists). y_orig flows through whatever cache the oracle wraps.
EvalReport evaluate(const std::vector<Sample>& dataset,
                    const Vocabulary& vocab,
                    const PolicyParameters& params,
                    const std::vector<double>& rates,
                    Oracle& oracle,
                    const std::vector<EvalMetric>& metrics,
                    std::size_t chunk_len = 512,
                    std::size_t max_output_tokens = 64);

struct DeltaCell {
    double rate = 0.0;
    std::string metric;
    double delta_vs_orig = 0.0;
    std::optional<double> delta_vs_ref;
};

// Per-cell differences b - a. SchemaError when the reports do not share
// the same rate and metric axes.
std::vector<DeltaCell> compare(const EvalReport& a, const EvalReport& b);

}  // namespace taco

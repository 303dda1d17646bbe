#include "taco/evaluator.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "taco/compressor.hpp"
#include "taco/errors.hpp"
#include "taco/rewards.hpp"

namespace taco {

std::string eval_metric_name(EvalMetric m) {
    switch (m) {
        case EvalMetric::bleu: return "bleu";
        case EvalMetric::rouge1: return "rouge1";
        case EvalMetric::rouge2: return "rouge2";
        case EvalMetric::rougeL: return "rougeL";
        case EvalMetric::f1: return "f1";
        case EvalMetric::em: return "em";
        case EvalMetric::best_subspan_em: return "best_subspan_em";
    }
    return "bleu";
}

EvalMetric eval_metric_from_name(const std::string& name) {
    if (name == "bleu") return EvalMetric::bleu;
    if (name == "rouge1") return EvalMetric::rouge1;
    if (name == "rouge2") return EvalMetric::rouge2;
    if (name == "rougeL") return EvalMetric::rougeL;
    if (name == "f1") return EvalMetric::f1;
    if (name == "em") return EvalMetric::em;
    if (name == "best_subspan_em") return EvalMetric::best_subspan_em;
    throw ConfigError("unknown evaluation metric '" + name + "'");
}

namespace {

double score_metric(EvalMetric m, const std::string& cand, const std::string& ref) {
    switch (m) {
        case EvalMetric::bleu: return bleu(cand, ref);
        case EvalMetric::rouge1: return rouge_n(cand, ref, 1);
        case EvalMetric::rouge2: return rouge_n(cand, ref, 2);
        case EvalMetric::rougeL: return rouge_l(cand, ref);
        case EvalMetric::f1: return token_f1(cand, ref);
        case EvalMetric::em: return exact_match(cand, ref);
        case EvalMetric::best_subspan_em: return best_subspan_em(cand, ref);
    }
    return 0.0;
}

}  // namespace

EvalReport evaluate(const std::vector<Sample>& dataset,
                    const Vocabulary& vocab,
                    const PolicyParameters& params,
                    const std::vector<double>& rates,
                    Oracle& oracle,
                    const std::vector<EvalMetric>& metrics,
                    std::size_t chunk_len,
                    std::size_t max_output_tokens) {
    if (dataset.empty()) throw ConfigError("evaluation dataset is empty");
    if (rates.empty()) throw ConfigError("no compression rates requested");
    for (double r : rates)
        if (!(r > 0.0 && r <= 1.0)) throw ConfigError("compression rates must lie in (0, 1]");

    EvalReport report;
    report.rates = rates;
    for (auto m : metrics) report.metrics.push_back(eval_metric_name(m));

    bool any_reference = false;
    for (const auto& s : dataset) any_reference = any_reference || s.reference.has_value();

    std::vector<TokenSequence> tokenized;
    tokenized.reserve(dataset.size());
    for (const auto& s : dataset) tokenized.push_back(tokenize(s.context, vocab));

    for (double rate : rates) {
        std::vector<double> sum_vs_orig(metrics.size(), 0.0);
        std::vector<double> sum_vs_ref(metrics.size(), 0.0);
        std::size_t ref_count = 0;
        EvalRateSummary summary;
        summary.rate = rate;
        double tau_sum = 0.0;
        std::size_t scored = 0;

        for (std::size_t si = 0; si < dataset.size(); ++si) {
            const Sample& sample = dataset[si];
            auto [comp, cstats] = compress_document(tokenized[si], params, rate, SelectMode::topk, chunk_len);
            tau_sum += cstats.rate;

            std::string y_orig, y_comp;
            try {
                OracleRequest orig_req{detokenize(tokenized[si]), sample.question, sample.task,
                                       max_output_tokens};
                y_orig = oracle.generate(orig_req).text;
                OracleRequest comp_req{detokenize(comp.seq), sample.question, sample.task,
                                       max_output_tokens};
                y_comp = oracle.generate(comp_req).text;
            } catch (const OracleUnavailableError&) {
                ++summary.oracle_failures;
                continue;
            }

            ++scored;
            for (std::size_t mi = 0; mi < metrics.size(); ++mi)
                sum_vs_orig[mi] += score_metric(metrics[mi], y_comp, y_orig);
            if (exact_match(y_comp, y_orig)) ++summary.em_count_vs_orig;
            if (sample.reference) {
                ++ref_count;
                for (std::size_t mi = 0; mi < metrics.size(); ++mi)
                    sum_vs_ref[mi] += score_metric(metrics[mi], y_comp, *sample.reference);
            }
        }

        summary.samples = dataset.size();
        summary.achieved_rate = tau_sum / static_cast<double>(dataset.size());
        summary.achieved_ratio = summary.achieved_rate > 0.0 ? 1.0 / summary.achieved_rate : 0.0;
        report.summaries.push_back(summary);

        for (std::size_t mi = 0; mi < metrics.size(); ++mi) {
            EvalCell cell;
            cell.rate = rate;
            cell.metric = report.metrics[mi];
            cell.mean_vs_orig = scored ? sum_vs_orig[mi] / static_cast<double>(scored) : 0.0;
            if (any_reference && ref_count > 0)
                cell.mean_vs_ref = sum_vs_ref[mi] / static_cast<double>(ref_count);
            report.cells.push_back(std::move(cell));
        }
    }
    return report;
}

bool EvalReport::complete() const {
    for (const auto& s : summaries)
        if (s.oracle_failures > 0) return false;
    return true;
}

std::string EvalReport::to_jsonl() const {
    std::ostringstream out;
    for (const auto& s : summaries) {
        nlohmann::json j;
        j["type"] = "rate_summary";
        j["rate"] = s.rate;
        j["samples"] = s.samples;
        j["em_count_vs_orig"] = s.em_count_vs_orig;
        j["achieved_rate"] = s.achieved_rate;
        j["achieved_ratio"] = s.achieved_ratio;
        j["oracle_failures"] = s.oracle_failures;
        out << j.dump() << '\n';
    }
    for (const auto& c : cells) {
        nlohmann::json j;
        j["type"] = "cell";
        j["rate"] = c.rate;
        j["metric"] = c.metric;
        j["mean_vs_orig"] = c.mean_vs_orig;
        if (c.mean_vs_ref) j["mean_vs_ref"] = *c.mean_vs_ref;
        out << j.dump() << '\n';
    }
    return out.str();
}

EvalReport EvalReport::from_jsonl(const std::string& text) {
    EvalReport report;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(line_no, e.what());
        }
        std::string type = j.value("type", "");
        if (type == "rate_summary") {
            EvalRateSummary s;
            s.rate = j.at("rate").get<double>();
            s.samples = j.at("samples").get<std::size_t>();
            s.em_count_vs_orig = j.at("em_count_vs_orig").get<std::size_t>();
            s.achieved_rate = j.at("achieved_rate").get<double>();
            s.achieved_ratio = j.at("achieved_ratio").get<double>();
            s.oracle_failures = j.at("oracle_failures").get<std::size_t>();
            report.summaries.push_back(s);
            report.rates.push_back(s.rate);
        } else if (type == "cell") {
            EvalCell c;
            c.rate = j.at("rate").get<double>();
            c.metric = j.at("metric").get<std::string>();
            c.mean_vs_orig = j.at("mean_vs_orig").get<double>();
            if (j.contains("mean_vs_ref")) c.mean_vs_ref = j["mean_vs_ref"].get<double>();
            report.cells.push_back(std::move(c));
        } else {
            throw SchemaError(line_no, "unknown report row type '" + type + "'");
        }
    }
    for (const auto& c : report.cells) {
        bool known = false;
        for (const auto& m : report.metrics) known = known || m == c.metric;
        if (!known) report.metrics.push_back(c.metric);
    }
    return report;
}

std::string EvalReport::to_table() const {
    std::ostringstream out;
    out << std::left << std::setw(8) << "rate" << std::setw(18) << "metric" << std::right
        << std::setw(12) << "vs_orig" << std::setw(12) << "vs_ref" << '\n';
    out << std::string(50, '-') << '\n';
    for (const auto& c : cells) {
        out << std::left << std::setw(8) << std::setprecision(4) << c.rate << std::setw(18) << c.metric
            << std::right << std::fixed << std::setprecision(4) << std::setw(12) << c.mean_vs_orig;
        if (c.mean_vs_ref)
            out << std::setw(12) << *c.mean_vs_ref;
        else
            out << std::setw(12) << "-";
        out << '\n';
        out.unsetf(std::ios::fixed);
    }
    out << std::string(50, '-') << '\n';
    for (const auto& s : summaries) {
        out << "rate " << std::setprecision(4) << s.rate << ": samples=" << s.samples
            << " em_count=" << s.em_count_vs_orig << " achieved_rate=" << std::setprecision(4)
            << s.achieved_rate << " achieved_ratio=" << std::setprecision(4) << s.achieved_ratio
            << " oracle_failures=" << s.oracle_failures << '\n';
    }
    return out.str();
}

std::vector<DeltaCell> compare(const EvalReport& a, const EvalReport& b) {
    if (a.rates != b.rates || a.metrics != b.metrics || a.cells.size() != b.cells.size())
        throw SchemaError("reports do not share the same rate/metric axes");
    std::vector<DeltaCell> out;
    out.reserve(a.cells.size());
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
        const auto& ca = a.cells[i];
        const auto& cb = b.cells[i];
        if (ca.rate != cb.rate || ca.metric != cb.metric)
            throw SchemaError("reports do not share the same rate/metric axes");
        DeltaCell d;
        d.rate = ca.rate;
        d.metric = ca.metric;
        d.delta_vs_orig = cb.mean_vs_orig - ca.mean_vs_orig;
        if (ca.mean_vs_ref && cb.mean_vs_ref) d.delta_vs_ref = *cb.mean_vs_ref - *ca.mean_vs_ref;
        out.push_back(std::move(d));
    }
    return out;
}

}  // namespace taco

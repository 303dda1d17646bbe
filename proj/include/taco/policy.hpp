#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "taco/corpus.hpp"
#include "taco/rng.hpp"
#include "taco/tensor.hpp"

namespace taco {

struct Dims {
    std::size_t vocab = 0;   // V
    std::size_t embed = 0;   // d, must be even when depth > 0
    std::size_t depth = 0;   // number of bidirectional mixing layers

    bool operator==(const Dims&) const = default;
};

// One bidirectional recurrent mixing layer. Each direction runs an Elman
// recurrence of width d/2; the layer output is the concatenation of the
// forward and backward states, so width d is preserved across layers.
struct BiRnnLayer {
    Matrix in_fwd;    // (d/2) x d
    Matrix rec_fwd;   // (d/2) x (d/2)
    Vector bias_fwd;  // d/2
    Matrix in_bwd;
    Matrix rec_bwd;
    Vector bias_bwd;
};

// All trainable tensors of the token-scoring encoder.
struct PolicyParameters {
    Dims dims;
    Matrix embedding;     // V x d
    std::vector<BiRnnLayer> layers;
    Matrix classifier_w;  // 2 x d
    Vector classifier_b;  // 2
};

// Gradients are shape-congruent with the parameters they differentiate.
using GradientBundle = PolicyParameters;

using KeepProbabilities = std::vector<double>;

struct ActionMask {
    std::vector<std::uint8_t> keep;

    std::size_t kept() const {
        std::size_t k = 0;
        for (auto b : keep) k += b;
        return k;
    }
};

// Visits every tensor as a flat vector<double>, in the fixed checkpoint
// order: embedding, then per layer (in_fwd, rec_fwd, bias_fwd, in_bwd,
// rec_bwd, bias_bwd), then classifier_w, classifier_b.
template <typename Params, typename Fn>
void visit_tensors(Params& p, Fn&& fn) {
    fn("embedding", p.embedding.v);
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        auto& layer = p.layers[l];
        std::string prefix = "layer" + std::to_string(l) + ".";
        fn(prefix + "in_fwd", layer.in_fwd.v);
        fn(prefix + "rec_fwd", layer.rec_fwd.v);
        fn(prefix + "bias_fwd", layer.bias_fwd);
        fn(prefix + "in_bwd", layer.in_bwd.v);
        fn(prefix + "rec_bwd", layer.rec_bwd.v);
        fn(prefix + "bias_bwd", layer.bias_bwd);
    }
    fn("classifier_w", p.classifier_w.v);
    fn("classifier_b", p.classifier_b);
}

PolicyParameters init_params(std::uint64_t seed, const Dims& dims);
GradientBundle zeros_like(const PolicyParameters& params);

// Per-token keep probabilities p_i = softmax(W h_i + b)[keep]. Deterministic.
KeepProbabilities forward(const PolicyParameters& params, const TokenSequence& seq);

// Independent Bernoulli(p_i) draws. An all-zero draw keeps the single
// highest-probability token instead; an empty compression is undefined
// downstream.
ActionMask sample_actions(const KeepProbabilities& p, Rng& rng);

// Exactly max(1, round(rate * n)) ones at the positions of the largest
// probabilities; ties go to the smaller index. Half-away-from-zero rounding.
ActionMask select_topk(const KeepProbabilities& p, double rate);

// a_i = 1 iff p_i >= 0.5.
ActionMask threshold_select(const KeepProbabilities& p);

// sum_i [a_i ln p_i + (1 - a_i) ln(1 - p_i)], natural log.
double log_prob(const KeepProbabilities& p, const ActionMask& mask);

// Sum of per-token binary entropies, natural log.
double entropy(const KeepProbabilities& p);

// L = -reward * log_prob(p, a) - entropy_weight * H(p) and its exact
// gradient for every parameter tensor (reverse-mode through the full
// forward computation). Throws NumericalError naming the offending tensor
// if anything non-finite shows up.
std::pair<double, GradientBundle> loss_and_gradient(const PolicyParameters& params,
                                                    const TokenSequence& seq,
                                                    const ActionMask& mask,
                                                    double reward,
                                                    double entropy_weight);

// theta <- theta - lr * grad. Returns a new snapshot.
PolicyParameters apply_update(const PolicyParameters& params, const GradientBundle& grads, double lr);

struct LabeledSequence {
    TokenSequence seq;
    std::vector<std::uint8_t> labels;  // 1 = keep
};

// Minimizes mean binary cross-entropy of p against the labels with plain
// SGD, one sequence per step, shuffled per epoch. Deterministic given seed.
PolicyParameters supervised_bootstrap(PolicyParameters params,
                                      const std::vector<LabeledSequence>& data,
                                      std::size_t epochs,
                                      double lr,
                                      std::uint64_t seed);

}  // namespace taco

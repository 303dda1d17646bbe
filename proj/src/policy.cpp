#include "taco/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "taco/errors.hpp"

namespace taco {

namespace {

void validate_dims(const Dims& dims) {
    if (dims.vocab < 2) throw DimError("vocabulary size must be >= 2");
    if (dims.embed < 2) throw DimError("embedding dimension must be >= 2");
    if (dims.depth > 0 && dims.embed % 2 != 0)
        throw DimError("embedding dimension must be even when depth > 0");
}

double stable_sigmoid(double u) {
    if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
    double e = std::exp(u);
    return e / (1.0 + e);
}

// Everything the backward pass needs from one forward evaluation.
struct ForwardTrace {
    std::vector<Matrix> inputs;      // depth+1 matrices, each n x d; inputs[0] = embeddings
    std::vector<Matrix> fwd_states;  // depth matrices, n x h
    std::vector<Matrix> bwd_states;  // depth matrices, n x h
    Vector logit;                    // n, keep-vs-drop logit difference
    KeepProbabilities p;             // n
};

ForwardTrace run_forward(const PolicyParameters& params, const TokenSequence& seq) {
    const std::size_t n = seq.size();
    const std::size_t d = params.dims.embed;
    const std::size_t h = d / 2;
    if (n == 0) throw EmptyInputError("forward on empty sequence");

    ForwardTrace tr;
    tr.inputs.reserve(params.layers.size() + 1);

    Matrix x(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        int id = seq.ids[i];
        if (id < 0 || static_cast<std::size_t>(id) >= params.dims.vocab)
            throw VocabError("token id " + std::to_string(id) + " outside vocabulary of size " +
                             std::to_string(params.dims.vocab));
        for (std::size_t j = 0; j < d; ++j) x(i, j) = params.embedding(static_cast<std::size_t>(id), j);
    }
    tr.inputs.push_back(std::move(x));

    for (const auto& layer : params.layers) {
        const Matrix& in = tr.inputs.back();
        Matrix f(n, h), b(n, h), out(n, d);

        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < h; ++k) {
                double acc = layer.bias_fwd[k];
                for (std::size_t j = 0; j < d; ++j) acc += layer.in_fwd(k, j) * in(i, j);
                if (i > 0)
                    for (std::size_t j = 0; j < h; ++j) acc += layer.rec_fwd(k, j) * f(i - 1, j);
                f(i, k) = std::tanh(acc);
            }
        }
        for (std::size_t ii = n; ii-- > 0;) {
            for (std::size_t k = 0; k < h; ++k) {
                double acc = layer.bias_bwd[k];
                for (std::size_t j = 0; j < d; ++j) acc += layer.in_bwd(k, j) * in(ii, j);
                if (ii + 1 < n)
                    for (std::size_t j = 0; j < h; ++j) acc += layer.rec_bwd(k, j) * b(ii + 1, j);
                b(ii, k) = std::tanh(acc);
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < h; ++k) {
                out(i, k) = f(i, k);
                out(i, h + k) = b(i, k);
            }
        }
        tr.fwd_states.push_back(std::move(f));
        tr.bwd_states.push_back(std::move(b));
        tr.inputs.push_back(std::move(out));
    }

    const Matrix& hidden = tr.inputs.back();
    tr.logit.resize(n);
    tr.p.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double u = params.classifier_b[1] - params.classifier_b[0];
        for (std::size_t j = 0; j < d; ++j)
            u += (params.classifier_w(1, j) - params.classifier_w(0, j)) * hidden(i, j);
        if (!std::isfinite(u)) throw NumericalError("logits");
        tr.logit[i] = u;
        tr.p[i] = stable_sigmoid(u);
    }
    return tr;
}

}  // namespace

PolicyParameters init_params(std::uint64_t seed, const Dims& dims) {
    validate_dims(dims);
    const std::size_t V = dims.vocab, d = dims.embed, h = d / 2;

    PolicyParameters p;
    p.dims = dims;
    p.embedding = Matrix(V, d);
    p.layers.resize(dims.depth);
    for (auto& layer : p.layers) {
        layer.in_fwd = Matrix(h, d);
        layer.rec_fwd = Matrix(h, h);
        layer.bias_fwd.assign(h, 0.0);
        layer.in_bwd = Matrix(h, d);
        layer.rec_bwd = Matrix(h, h);
        layer.bias_bwd.assign(h, 0.0);
    }
    p.classifier_w = Matrix(2, d);
    p.classifier_b.assign(2, 0.0);

    Rng rng(mix64(seed));
    auto fill = [&](Vector& v, std::size_t fan_in, std::size_t fan_out) {
        double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (auto& x : v) x = rng.uniform(-s, s);
    };
    fill(p.embedding.v, V, d);
    for (auto& layer : p.layers) {
        fill(layer.in_fwd.v, d, h);
        fill(layer.rec_fwd.v, h, h);
        fill(layer.in_bwd.v, d, h);
        fill(layer.rec_bwd.v, h, h);
        // bias vectors stay zero
    }
    fill(p.classifier_w.v, d, 2);
    return p;
}

GradientBundle zeros_like(const PolicyParameters& params) {
    GradientBundle g = params;
    visit_tensors(g, [](const std::string&, Vector& v) { std::fill(v.begin(), v.end(), 0.0); });
    return g;
}

KeepProbabilities forward(const PolicyParameters& params, const TokenSequence& seq) {
    return run_forward(params, seq).p;
}

ActionMask sample_actions(const KeepProbabilities& p, Rng& rng) {
    ActionMask mask;
    mask.keep.resize(p.size(), 0);
    bool any = false;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (rng.bernoulli(p[i])) {
            mask.keep[i] = 1;
            any = true;
        }
    }
    if (!any && !p.empty()) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < p.size(); ++i)
            if (p[i] > p[best]) best = i;
        mask.keep[best] = 1;
    }
    return mask;
}

ActionMask select_topk(const KeepProbabilities& p, double rate) {
    const std::size_t n = p.size();
    auto k = static_cast<std::size_t>(std::max<long long>(1, std::llround(rate * static_cast<double>(n))));
    k = std::min(k, n);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (p[a] != p[b]) return p[a] > p[b];
        return a < b;
    });
    ActionMask mask;
    mask.keep.resize(n, 0);
    for (std::size_t i = 0; i < k; ++i) mask.keep[order[i]] = 1;
    return mask;
}

ActionMask threshold_select(const KeepProbabilities& p) {
    ActionMask mask;
    mask.keep.resize(p.size(), 0);
    for (std::size_t i = 0; i < p.size(); ++i) mask.keep[i] = p[i] >= 0.5 ? 1 : 0;
    return mask;
}

double log_prob(const KeepProbabilities& p, const ActionMask& mask) {
    if (p.size() != mask.keep.size()) throw DimError("mask length does not match probabilities");
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        acc += mask.keep[i] ? std::log(p[i]) : std::log1p(-p[i]);
    return acc;
}

double entropy(const KeepProbabilities& p) {
    double acc = 0.0;
    for (double pi : p) acc += -pi * std::log(pi) - (1.0 - pi) * std::log1p(-pi);
    return acc;
}

std::pair<double, GradientBundle> loss_and_gradient(const PolicyParameters& params,
                                                    const TokenSequence& seq,
                                                    const ActionMask& mask,
                                                    double reward,
                                                    double entropy_weight) {
    const std::size_t n = seq.size();
    if (mask.keep.size() != n) throw DimError("mask length does not match sequence");
    const std::size_t d = params.dims.embed;
    const std::size_t h = d / 2;

    ForwardTrace tr = run_forward(params, seq);
    double loss = -reward * log_prob(tr.p, mask) - entropy_weight * entropy(tr.p);

    GradientBundle grads = zeros_like(params);

    // dL/du_i; ln((1-p)/p) == -u, which sidesteps the log of a tiny p.
    Vector du(n);
    for (std::size_t i = 0; i < n; ++i) {
        double pi = tr.p[i];
        du[i] = -reward * (static_cast<double>(mask.keep[i]) - pi) +
                entropy_weight * pi * (1.0 - pi) * tr.logit[i];
    }

    const Matrix& hidden = tr.inputs.back();
    Matrix dx(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            grads.classifier_w(1, j) += du[i] * hidden(i, j);
            grads.classifier_w(0, j) -= du[i] * hidden(i, j);
            dx(i, j) = du[i] * (params.classifier_w(1, j) - params.classifier_w(0, j));
        }
        grads.classifier_b[1] += du[i];
        grads.classifier_b[0] -= du[i];
    }

    for (std::size_t l = params.layers.size(); l-- > 0;) {
        const auto& layer = params.layers[l];
        auto& glayer = grads.layers[l];
        const Matrix& in = tr.inputs[l];
        const Matrix& f = tr.fwd_states[l];
        const Matrix& b = tr.bwd_states[l];
        Matrix din(n, d);

        // forward direction: gradient flows from position i+1 back to i
        Vector carry(h, 0.0), t(h);
        for (std::size_t ii = n; ii-- > 0;) {
            for (std::size_t k = 0; k < h; ++k) {
                double c = dx(ii, k) + carry[k];
                t[k] = c * (1.0 - f(ii, k) * f(ii, k));
            }
            for (std::size_t k = 0; k < h; ++k) {
                glayer.bias_fwd[k] += t[k];
                for (std::size_t j = 0; j < d; ++j) glayer.in_fwd(k, j) += t[k] * in(ii, j);
                if (ii > 0)
                    for (std::size_t j = 0; j < h; ++j) glayer.rec_fwd(k, j) += t[k] * f(ii - 1, j);
            }
            for (std::size_t j = 0; j < d; ++j) {
                double acc = 0.0;
                for (std::size_t k = 0; k < h; ++k) acc += layer.in_fwd(k, j) * t[k];
                din(ii, j) += acc;
            }
            for (std::size_t j = 0; j < h; ++j) {
                double acc = 0.0;
                for (std::size_t k = 0; k < h; ++k) acc += layer.rec_fwd(k, j) * t[k];
                carry[j] = acc;
            }
        }

        // backward direction: gradient flows from position i-1 forward to i
        std::fill(carry.begin(), carry.end(), 0.0);
        for (std::size_t ii = 0; ii < n; ++ii) {
            for (std::size_t k = 0; k < h; ++k) {
                double c = dx(ii, h + k) + carry[k];
                t[k] = c * (1.0 - b(ii, k) * b(ii, k));
            }
            for (std::size_t k = 0; k < h; ++k) {
                glayer.bias_bwd[k] += t[k];
                for (std::size_t j = 0; j < d; ++j) glayer.in_bwd(k, j) += t[k] * in(ii, j);
                if (ii + 1 < n)
                    for (std::size_t j = 0; j < h; ++j) glayer.rec_bwd(k, j) += t[k] * b(ii + 1, j);
            }
            for (std::size_t j = 0; j < d; ++j) {
                double acc = 0.0;
                for (std::size_t k = 0; k < h; ++k) acc += layer.in_bwd(k, j) * t[k];
                din(ii, j) += acc;
            }
            for (std::size_t j = 0; j < h; ++j) {
                double acc = 0.0;
                for (std::size_t k = 0; k < h; ++k) acc += layer.rec_bwd(k, j) * t[k];
                carry[j] = acc;
            }
        }
        dx = std::move(din);
    }

    for (std::size_t i = 0; i < n; ++i) {
        auto row = static_cast<std::size_t>(seq.ids[i]);
        for (std::size_t j = 0; j < d; ++j) grads.embedding(row, j) += dx(i, j);
    }

    if (!std::isfinite(loss)) throw NumericalError("loss");
    visit_tensors(grads, [](const std::string& name, const Vector& v) {
        for (double x : v)
            if (!std::isfinite(x)) throw NumericalError(name);
    });
    return {loss, std::move(grads)};
}

PolicyParameters apply_update(const PolicyParameters& params, const GradientBundle& grads, double lr) {
    std::vector<const Vector*> gv;
    visit_tensors(grads, [&](const std::string&, const Vector& v) { gv.push_back(&v); });

    PolicyParameters out = params;
    std::size_t idx = 0;
    visit_tensors(out, [&](const std::string& name, Vector& v) {
        if (idx >= gv.size() || gv[idx]->size() != v.size())
            throw DimError("gradient shape mismatch for tensor '" + name + "'");
        const Vector& g = *gv[idx++];
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr * g[i];
    });
    if (idx != gv.size()) throw DimError("gradient bundle has extra tensors");
    return out;
}

PolicyParameters supervised_bootstrap(PolicyParameters params,
                                      const std::vector<LabeledSequence>& data,
                                      std::size_t epochs,
                                      double lr,
                                      std::uint64_t seed) {
    for (const auto& item : data)
        if (item.labels.size() != item.seq.size())
            throw SchemaError("label vector length does not match token count");

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        Rng rng = rng_for_step(seed, epoch);
        rng.shuffle(order);
        for (std::size_t idx : order) {
            const auto& item = data[idx];
            ActionMask mask;
            mask.keep = item.labels;
            // reward 1/n turns the REINFORCE loss into mean cross-entropy
            auto [loss, grads] = loss_and_gradient(params, item.seq, mask,
                                                   1.0 / static_cast<double>(item.seq.size()), 0.0);
            (void)loss;
            params = apply_update(params, grads, lr);
        }
    }
    return params;
}

}  // namespace taco

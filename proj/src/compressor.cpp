#include "taco/compressor.hpp"

#include "taco/errors.hpp"

namespace taco {

std::pair<CompressedPrompt, CompressionStats> compress(const TokenSequence& seq, const ActionMask& mask) {
    if (mask.keep.size() != seq.size()) throw DimError("mask length does not match sequence");
    CompressedPrompt out;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (!mask.keep[i]) continue;
        out.seq.tokens.push_back(seq.tokens[i]);
        out.seq.ids.push_back(seq.ids[i]);
        out.kept_indices.push_back(i);
    }
    if (out.kept_indices.empty()) throw EmptyCompressionError("mask keeps no tokens");

    CompressionStats stats;
    stats.original_n = seq.size();
    stats.compressed_n = out.kept_indices.size();
    stats.rate = static_cast<double>(stats.compressed_n) / static_cast<double>(stats.original_n);
    stats.ratio = 1.0 / stats.rate;
    return {std::move(out), stats};
}

std::pair<CompressedPrompt, CompressionStats> compress_document(const TokenSequence& seq,
                                                                const PolicyParameters& params,
                                                                double rate,
                                                                SelectMode mode,
                                                                std::size_t chunk_len) {
    CompressedPrompt out;
    std::size_t offset = 0;
    for (const auto& piece : chunk(seq, chunk_len)) {
        KeepProbabilities p = forward(params, piece);
        ActionMask mask = mode == SelectMode::topk ? select_topk(p, rate) : threshold_select(p);
        // threshold mode can reject a whole chunk; compress then raises
        // EmptyCompressionError, which propagates to the caller
        auto [cp, cs] = compress(piece, mask);
        (void)cs;
        for (std::size_t i = 0; i < cp.seq.size(); ++i) {
            out.seq.tokens.push_back(cp.seq.tokens[i]);
            out.seq.ids.push_back(cp.seq.ids[i]);
            out.kept_indices.push_back(offset + cp.kept_indices[i]);
        }
        offset += piece.size();
    }

    CompressionStats stats;
    stats.original_n = seq.size();
    stats.compressed_n = out.kept_indices.size();
    stats.rate = static_cast<double>(stats.compressed_n) / static_cast<double>(stats.original_n);
    stats.ratio = 1.0 / stats.rate;
    return {std::move(out), stats};
}

}  // namespace taco

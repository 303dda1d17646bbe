#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "taco/corpus.hpp"
#include "taco/policy.hpp"

namespace taco {

struct CompressedPrompt {
    TokenSequence seq;
    std::vector<std::size_t> kept_indices;  // strictly increasing original positions
};

struct CompressionStats {
    std::size_t original_n = 0;
    std::size_t compressed_n = 0;
    double rate = 0.0;   // tau = compressed / original
    double ratio = 0.0;  // 1 / tau
};

enum class SelectMode { topk, threshold };

// Order-preserving subsequence of the tokens where the mask is 1.
// EmptyCompressionError on an all-zero mask.
std::pair<CompressedPrompt, CompressionStats> compress(const TokenSequence& seq, const ActionMask& mask);

// Chunk, score, and select per chunk, then concatenate the compressed
// chunks in order. Stats cover the whole document.
std::pair<CompressedPrompt, CompressionStats> compress_document(const TokenSequence& seq,
                                                                const PolicyParameters& params,
                                                                double rate,
                                                                SelectMode mode,
                                                                std::size_t chunk_len = 512);

}  // namespace taco

// Copyright 2026-present the latesearch project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "latesearch/embstore.h"
#include "latesearch/kmeans.h"
#include "latesearch/residual_codec.h"
#include "latesearch/scoring.h"

namespace latesearch {

struct PlaidConfig {
    /// 0 selects 2^ceil(log2(4 * sqrt(total_tokens))), capped by the
    /// number of training tokens.
    std::size_t n_centroids{0};
    std::size_t nbits{2};
    std::size_t nprobe{4};
    std::size_t n_candidate_docs{4096};
    std::size_t n_full_docs{512};
    std::size_t kmeans_iters{20};
    std::uint64_t seed{42};
    std::size_t sample_size{std::size_t{1} << 18};
};

/// Per-call overrides of the search-time knobs in PlaidConfig.
struct PlaidSearchParams {
    std::optional<std::size_t> nprobe;
    std::optional<std::size_t> n_candidate_docs;
    std::optional<std::size_t> n_full_docs;
};

std::size_t
AutoCentroidCount(std::size_t total_tokens);

/// Codes, packed residuals and document directory of a quantized corpus.
struct CompressedCorpus {
    std::size_t dim{0};
    ResidualCodec codec;
    std::vector<std::string> doc_ids;
    std::vector<std::uint64_t> doc_offsets;  // first token of each doc
    std::vector<std::uint32_t> doc_lens;
    std::vector<std::uint32_t> codes;      // centroid id per token
    std::vector<std::uint8_t> residuals;   // total_tokens * dim * nbits / 8

    std::size_t
    n_docs() const noexcept {
        return doc_ids.size();
    }

    std::size_t
    total_tokens() const noexcept {
        return codes.size();
    }
};

/// Fits a residual codec on the corpus residuals (stride-sampled to at most
/// 2^18 tokens) and encodes every token against its nearest centroid.
/// Throws DimNotPackable when dim * nbits is not a multiple of 8.
CompressedCorpus
QuantizeCorpus(const EmbeddingSet& docs, const Centroids& centroids, std::size_t nbits);

/// Encodes additional documents with the corpus' existing codec.
void
AppendToCorpus(CompressedCorpus& corpus, const EmbeddingSet& docs, const Centroids& centroids);

/// Centroid plus bucket midpoints, re-normalized. Throws OrdinalOutOfRange.
TokenMatrix
DecompressDoc(const CompressedCorpus& corpus, const Centroids& centroids, std::size_t ordinal);

/// Centroid-coded multi-vector index with staged search:
///   1. per query token, the nprobe closest centroids; their inverted lists
///      give the candidate documents;
///   2. candidates are ranked by a centroid-only MaxSim (each document token
///      replaced by its centroid), keeping n_candidate_docs;
///   3. the best n_full_docs of those are decompressed and scored with exact
///      MaxSim on the reconstructions.
/// Immutable once built; concurrent Search calls are safe.
class PlaidIndex {
public:
    static PlaidIndex
    Build(const EmbeddingSet& docs, const PlaidConfig& cfg);

    std::vector<ScoredDoc>
    Search(const TokenMatrix& query, std::size_t k, const PlaidSearchParams& params = {}) const;

    /// Stage-1 candidate ordinals, ascending.
    std::vector<std::uint32_t>
    CandidateOrdinals(const TokenMatrix& query, std::size_t nprobe) const;

    TokenMatrix
    Decompress(std::size_t ordinal) const {
        return DecompressDoc(corpus_, centroids_, ordinal);
    }

    /// New index holding the current documents plus `docs`, quantized against
    /// the existing centroids. Throws DuplicateId, DimMismatch.
    PlaidIndex
    WithDocuments(const EmbeddingSet& docs) const;

    void
    Save(const std::filesystem::path& dir) const;

    static PlaidIndex
    Load(const std::filesystem::path& dir);

    const PlaidConfig&
    config() const noexcept {
        return config_;
    }

    const Centroids&
    centroids() const noexcept {
        return centroids_;
    }

    const CompressedCorpus&
    corpus() const noexcept {
        return corpus_;
    }

    const std::vector<std::vector<std::uint32_t>>&
    inverted_lists() const noexcept {
        return ivf_;
    }

    std::size_t
    dim() const noexcept {
        return corpus_.dim;
    }

    std::size_t
    n_docs() const noexcept {
        return corpus_.n_docs();
    }

    std::size_t
    total_tokens() const noexcept {
        return corpus_.total_tokens();
    }

    std::size_t
    residual_bytes() const noexcept {
        return corpus_.residuals.size();
    }

private:
    void
    RebuildInvertedLists();

    PlaidConfig config_;
    Centroids centroids_;
    CompressedCorpus corpus_;
    std::vector<std::vector<std::uint32_t>> ivf_;
};

/// Free-function form of PlaidIndex::WithDocuments.
inline PlaidIndex
AddDocuments(const PlaidIndex& index, const EmbeddingSet& docs) {
    return index.WithDocuments(docs);
}

}  // namespace latesearch

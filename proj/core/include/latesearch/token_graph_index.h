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
#include <span>
#include <vector>

#include "latesearch/embstore.h"
#include "latesearch/hnsw.h"
#include "latesearch/scoring.h"

namespace latesearch {

struct TokenPayload {
    std::uint32_t doc_ordinal;
    std::uint32_t token_position;

    friend bool
    operator==(const TokenPayload&, const TokenPayload&) = default;
};

/// Every document token is a node of one HNSW graph. A query gathers the
/// documents owning the nearest tokens of each of its tokens, then reranks
/// them with exact MaxSim on the stored original embeddings.
class TokenGraphIndex {
public:
    static constexpr std::size_t kDefaultTokenNeighbors = 100;

    TokenGraphIndex() = default;
    TokenGraphIndex(std::size_t dim, HnswConfig cfg);

    /// Inserts all tokens of `docs` in document order.
    static TokenGraphIndex
    Build(const EmbeddingSet& docs, HnswConfig cfg);

    /// Appends a document and inserts each of its tokens.
    /// Throws DuplicateId, DimMismatch.
    void
    AddDocument(std::string id, TokenMatrix matrix);

    /// Inserts one vector tagged with `payload`; payload.doc_ordinal must
    /// name a stored document.
    std::uint32_t
    InsertToken(std::span<const float> vec, TokenPayload payload);

    std::vector<Neighbor>
    SearchTokens(std::span<const float> query, std::size_t k, std::size_t ef) const;

    /// Throws EmptyIndex, DimMismatch.
    std::vector<ScoredDoc>
    Retrieve(const TokenMatrix& query, std::size_t k, std::size_t k_token = kDefaultTokenNeighbors) const;

    void
    Save(const std::filesystem::path& dir) const;

    static TokenGraphIndex
    Load(const std::filesystem::path& dir);

    const HnswGraph&
    graph() const noexcept {
        return graph_;
    }

    const std::vector<TokenPayload>&
    payloads() const noexcept {
        return payloads_;
    }

    const EmbeddingSet&
    documents() const noexcept {
        return docs_;
    }

private:
    HnswGraph graph_;
    std::vector<TokenPayload> payloads_;
    EmbeddingSet docs_;
};

}  // namespace latesearch

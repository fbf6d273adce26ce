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

#include "latesearch/embstore.h"

namespace latesearch {

enum class Linkage {
    kAverage,
};

struct PoolingConfig {
    std::size_t pool_factor{1};
    Linkage linkage{Linkage::kAverage};
    /// Keep the first token out of clustering (e.g. a [CLS]-like marker).
    bool protect_first_token{false};
};

/// max(1, ceil(n_tokens / pool_factor)), plus one when the first token is
/// protected and n_tokens >= 2 and pool_factor > 1.
std::size_t
PooledTokenCount(std::size_t n_tokens, const PoolingConfig& cfg);

/// Agglomerative clustering of document tokens (average linkage over cosine
/// distance 1 - dot) down to PooledTokenCount rows. Each output row is the
/// re-normalized mean of one cluster; clusters are emitted in order of their
/// lowest original token index. pool_factor == 1 returns the input as is.
TokenMatrix
PoolTokens(const TokenMatrix& doc, const PoolingConfig& cfg);

/// Per-document PoolTokens. Throws KindMismatch on a query set.
EmbeddingSet
PoolCorpus(const EmbeddingSet& set, const PoolingConfig& cfg);

}  // namespace latesearch

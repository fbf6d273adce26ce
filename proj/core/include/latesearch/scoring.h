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
#include <span>
#include <string>
#include <vector>

#include "latesearch/embstore.h"

namespace latesearch {

struct ScoredDoc {
    std::string doc_id;
    double score{0.0};

    friend bool
    operator==(const ScoredDoc&, const ScoredDoc&) = default;
};

/// Row-major n_queries x n_docs MaxSim scores.
class ScoreMatrix {
public:
    ScoreMatrix() = default;
    ScoreMatrix(std::size_t n_queries, std::size_t n_docs)
        : n_queries_(n_queries), n_docs_(n_docs), values_(n_queries * n_docs, 0.0) {
    }

    std::size_t
    n_queries() const noexcept {
        return n_queries_;
    }

    std::size_t
    n_docs() const noexcept {
        return n_docs_;
    }

    double
    operator()(std::size_t q, std::size_t d) const {
        return values_[q * n_docs_ + d];
    }

    double&
    operator()(std::size_t q, std::size_t d) {
        return values_[q * n_docs_ + d];
    }

    const std::vector<double>&
    values() const noexcept {
        return values_;
    }

private:
    std::size_t n_queries_{0};
    std::size_t n_docs_{0};
    std::vector<double> values_;
};

struct MaxSimOptions {
    /// Divide the sum by the number of query tokens. Off by default: the
    /// late-interaction score is an unnormalized sum.
    bool normalize_by_query_length{false};
};

/// Sum over query tokens of the best dot product against any document
/// token, accumulated in double. Throws DimMismatch or EmptyMatrix.
double
MaxSim(const TokenMatrix& query, const TokenMatrix& doc, MaxSimOptions opts = {});

/// values(i, j) == MaxSim(queries[i], docs[j]).
ScoreMatrix
MaxSimBatch(std::span<const TokenMatrix> queries,
            std::span<const TokenMatrix> docs,
            MaxSimOptions opts = {});

/// Score descending, then doc id ascending.
bool
RanksBefore(const ScoredDoc& a, const ScoredDoc& b);

void
SortScoredDocs(std::vector<ScoredDoc>& docs);

/// Scores every candidate with exact MaxSim and returns them best first.
/// Throws DimMismatch, DuplicateId.
std::vector<ScoredDoc>
Rerank(const TokenMatrix& query,
       std::span<const std::string> candidate_ids,
       std::span<const TokenMatrix> candidate_matrices,
       MaxSimOptions opts = {});

std::vector<ScoredDoc>
Rerank(const TokenMatrix& query, const EmbeddingSet& candidates, MaxSimOptions opts = {});

}  // namespace latesearch

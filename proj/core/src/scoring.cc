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

#include "latesearch/scoring.h"

#include <algorithm>
#include <limits>
#include <unordered_set>

#include "latesearch/parallel.h"
#include "latesearch/status.h"

namespace latesearch {

namespace {

void
CheckPair(const TokenMatrix& q, const TokenMatrix& d) {
    if (q.empty() || d.empty()) {
        Throw(ErrorCode::kEmptyMatrix, "MaxSim needs at least one query and one document token");
    }
    if (q.dim() != d.dim()) {
        Throw(ErrorCode::kDimMismatch,
              "query dim " + std::to_string(q.dim()) + " vs doc dim " + std::to_string(d.dim()));
    }
}

double
MaxSimUnchecked(const TokenMatrix& q, const TokenMatrix& d, MaxSimOptions opts) {
    const std::size_t dim = q.dim();
    const float* qv = q.values().data();
    const float* dv = d.values().data();
    double total = 0.0;
    for (std::size_t i = 0; i < q.n_tokens(); ++i) {
        const float* qi = qv + i * dim;
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < d.n_tokens(); ++j) {
            const float* dj = dv + j * dim;
            double dot = 0.0;
            for (std::size_t k = 0; k < dim; ++k) {
                dot += static_cast<double>(qi[k]) * dj[k];
            }
            best = std::max(best, dot);
        }
        total += best;
    }
    if (opts.normalize_by_query_length) {
        total /= static_cast<double>(q.n_tokens());
    }
    return total;
}

}  // namespace

double
MaxSim(const TokenMatrix& query, const TokenMatrix& doc, MaxSimOptions opts) {
    CheckPair(query, doc);
    return MaxSimUnchecked(query, doc, opts);
}

ScoreMatrix
MaxSimBatch(std::span<const TokenMatrix> queries,
            std::span<const TokenMatrix> docs,
            MaxSimOptions opts) {
    for (const auto& q : queries) {
        for (const auto& d : docs) {
            CheckPair(q, d);
        }
    }
    ScoreMatrix out(queries.size(), docs.size());
    const std::size_t pairs = queries.size() * docs.size();
    ParallelFor(pairs, 64, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            const auto qi = p / docs.size();
            const auto dj = p % docs.size();
            out(qi, dj) = MaxSimUnchecked(queries[qi], docs[dj], opts);
        }
    });
    return out;
}

bool
RanksBefore(const ScoredDoc& a, const ScoredDoc& b) {
    if (a.score != b.score) {
        return a.score > b.score;
    }
    return a.doc_id < b.doc_id;
}

void
SortScoredDocs(std::vector<ScoredDoc>& docs) {
    std::sort(docs.begin(), docs.end(), RanksBefore);
}

std::vector<ScoredDoc>
Rerank(const TokenMatrix& query,
       std::span<const std::string> candidate_ids,
       std::span<const TokenMatrix> candidate_matrices,
       MaxSimOptions opts) {
    if (candidate_ids.size() != candidate_matrices.size()) {
        Throw(ErrorCode::kInvalidArgument, "candidate ids and matrices differ in length");
    }
    std::unordered_set<std::string_view> seen;
    for (const auto& id : candidate_ids) {
        if (!seen.insert(id).second) {
            Throw(ErrorCode::kDuplicateId, "candidate '" + id + "' appears twice");
        }
    }
    for (const auto& m : candidate_matrices) {
        CheckPair(query, m);
    }
    std::vector<ScoredDoc> out(candidate_ids.size());
    ParallelFor(out.size(), 32, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            out[i] = {candidate_ids[i], MaxSimUnchecked(query, candidate_matrices[i], opts)};
        }
    });
    SortScoredDocs(out);
    return out;
}

std::vector<ScoredDoc>
Rerank(const TokenMatrix& query, const EmbeddingSet& candidates, MaxSimOptions opts) {
    return Rerank(query, candidates.ids(), candidates.matrices(), opts);
}

}  // namespace latesearch

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

#include "latesearch/pooling.h"

#include <cmath>
#include <limits>
#include <vector>

#include "latesearch/parallel.h"
#include "latesearch/status.h"

namespace latesearch {

namespace {

// Clusters rows [first, n) of `doc` into `target` groups and appends their
// normalized means to `out`.
void
ClusterRange(const TokenMatrix& doc, std::size_t first, std::size_t target, std::vector<float>& out) {
    const std::size_t n = doc.n_tokens() - first;
    const std::size_t dim = doc.dim();

    // Pairwise cosine distance, indexed by slot (slot s == row first + s).
    // A cluster lives in the slot of its lowest member.
    std::vector<double> dist(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto a = doc.row(first + i);
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto b = doc.row(first + j);
            double dot = 0.0;
            for (std::size_t k = 0; k < dim; ++k) {
                dot += static_cast<double>(a[k]) * b[k];
            }
            dist[i * n + j] = dist[j * n + i] = 1.0 - dot;
        }
    }

    std::vector<std::size_t> size(n, 1);
    std::vector<std::size_t> owner(n);
    std::vector<bool> active(n, true);
    for (std::size_t i = 0; i < n; ++i) {
        owner[i] = i;
    }

    for (std::size_t clusters = n; clusters > target; --clusters) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0;
        std::size_t bj = 0;
        // Strict '<' in (i, j) scan order keeps the lexicographically
        // smallest pair among equal distances.
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i]) {
                continue;
            }
            for (std::size_t j = i + 1; j < n; ++j) {
                if (active[j] && dist[i * n + j] < best) {
                    best = dist[i * n + j];
                    bi = i;
                    bj = j;
                }
            }
        }
        // Lance-Williams update for average linkage.
        const double wi = static_cast<double>(size[bi]);
        const double wj = static_cast<double>(size[bj]);
        for (std::size_t k = 0; k < n; ++k) {
            if (!active[k] || k == bi || k == bj) {
                continue;
            }
            const double d = (wi * dist[bi * n + k] + wj * dist[bj * n + k]) / (wi + wj);
            dist[bi * n + k] = dist[k * n + bi] = d;
        }
        size[bi] += size[bj];
        active[bj] = false;
        for (auto& o : owner) {
            if (o == bj) {
                o = bi;
            }
        }
    }

    std::vector<double> acc(dim);
    for (std::size_t c = 0; c < n; ++c) {
        if (!active[c]) {
            continue;
        }
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t r = 0; r < n; ++r) {
            if (owner[r] != c) {
                continue;
            }
            const auto row = doc.row(first + r);
            for (std::size_t k = 0; k < dim; ++k) {
                acc[k] += row[k];
            }
        }
        double sq = 0.0;
        for (double v : acc) {
            sq += v * v;
        }
        const double norm = std::sqrt(sq);
        if (norm < 1e-12) {
            // Antipodal members cancelled out; fall back to the lowest member.
            const auto row = doc.row(first + c);
            out.insert(out.end(), row.begin(), row.end());
            continue;
        }
        for (double v : acc) {
            out.push_back(static_cast<float>(v / norm));
        }
    }
}

}  // namespace

std::size_t
PooledTokenCount(std::size_t n_tokens, const PoolingConfig& cfg) {
    if (cfg.pool_factor <= 1 || n_tokens <= 1) {
        return n_tokens;
    }
    const std::size_t target = std::max<std::size_t>(1, (n_tokens + cfg.pool_factor - 1) / cfg.pool_factor);
    return cfg.protect_first_token ? target + 1 : target;
}

TokenMatrix
PoolTokens(const TokenMatrix& doc, const PoolingConfig& cfg) {
    if (cfg.pool_factor == 0) {
        Throw(ErrorCode::kInvalidArgument, "pool_factor must be >= 1");
    }
    if (cfg.pool_factor == 1 || doc.n_tokens() <= 1) {
        return doc;
    }
    const std::size_t n = doc.n_tokens();
    const std::size_t target = std::max<std::size_t>(1, (n + cfg.pool_factor - 1) / cfg.pool_factor);
    std::vector<float> out;
    std::size_t first = 0;
    if (cfg.protect_first_token) {
        const auto row0 = doc.row(0);
        out.insert(out.end(), row0.begin(), row0.end());
        first = 1;
    }
    ClusterRange(doc, first, target, out);
    const std::size_t rows = out.size() / doc.dim();
    return TokenMatrix(rows, doc.dim(), std::move(out));
}

EmbeddingSet
PoolCorpus(const EmbeddingSet& set, const PoolingConfig& cfg) {
    if (set.kind() != EmbeddingKind::kDocument) {
        Throw(ErrorCode::kKindMismatch, "pooling applies to document embeddings only");
    }
    std::vector<TokenMatrix> pooled(set.size());
    ParallelFor(set.size(), 16, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            pooled[i] = PoolTokens(set.matrix(i), cfg);
        }
    });
    EmbeddingSet out(set.kind(), set.dim());
    for (std::size_t i = 0; i < set.size(); ++i) {
        out.Add(set.id(i), std::move(pooled[i]));
    }
    return out;
}

}  // namespace latesearch

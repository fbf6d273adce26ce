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

#include "latesearch/hnsw.h"

#include <algorithm>
#include <cmath>
#include <queue>

#include "latesearch/status.h"

namespace latesearch {

namespace {

// "a ranks ahead of b": higher similarity, then lower id.
bool
Better(const Neighbor& a, const Neighbor& b) {
    if (a.similarity != b.similarity) {
        return a.similarity > b.similarity;
    }
    return a.id < b.id;
}

struct WorseOnTop {
    bool
    operator()(const Neighbor& a, const Neighbor& b) const {
        return Better(a, b);
    }
};

struct BetterOnTop {
    bool
    operator()(const Neighbor& a, const Neighbor& b) const {
        return Better(b, a);
    }
};

float
Dot(const float* a, const float* b, std::size_t dim) {
    float s0 = 0.0f, s1 = 0.0f, s2 = 0.0f, s3 = 0.0f;
    std::size_t i = 0;
    for (; i + 4 <= dim; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < dim; ++i) {
        s0 += a[i] * b[i];
    }
    return (s0 + s1) + (s2 + s3);
}

}  // namespace

HnswGraph::HnswGraph(std::size_t dim, HnswConfig cfg) : dim_(dim), cfg_(cfg), rng_(cfg.seed) {
    if (cfg_.m < 2) {
        Throw(ErrorCode::kInvalidArgument, "HNSW m must be >= 2");
    }
    if (cfg_.ef_search == 0 || cfg_.ef_construction == 0) {
        Throw(ErrorCode::kInvalidArgument, "HNSW ef must be >= 1");
    }
    level_mult_ = cfg_.level_norm_factor > 0.0 ? cfg_.level_norm_factor
                                               : 1.0 / std::log(static_cast<double>(cfg_.m));
}

float
HnswGraph::Similarity(std::span<const float> a, std::uint32_t node) const {
    return Dot(a.data(), vectors_.data() + static_cast<std::size_t>(node) * dim_, dim_);
}

std::uint32_t
HnswGraph::GreedyClosest(std::span<const float> query, std::uint32_t start, int from_layer, int to_layer) const {
    Neighbor cur{start, Similarity(query, start)};
    for (int layer = from_layer; layer > to_layer; --layer) {
        bool moved = true;
        while (moved) {
            moved = false;
            for (auto nb : links_[cur.id][static_cast<std::size_t>(layer)]) {
                const Neighbor cand{nb, Similarity(query, nb)};
                if (Better(cand, cur)) {
                    cur = cand;
                    moved = true;
                }
            }
        }
    }
    return cur.id;
}

std::vector<Neighbor>
HnswGraph::SearchLayer(std::span<const float> query, std::uint32_t start, std::size_t ef, int layer) const {
    std::vector<bool> visited(size(), false);
    std::priority_queue<Neighbor, std::vector<Neighbor>, BetterOnTop> frontier;
    std::priority_queue<Neighbor, std::vector<Neighbor>, WorseOnTop> best;

    const Neighbor first{start, Similarity(query, start)};
    visited[start] = true;
    frontier.push(first);
    best.push(first);
    while (!frontier.empty()) {
        const auto c = frontier.top();
        if (best.size() >= ef && Better(best.top(), c)) {
            break;
        }
        frontier.pop();
        for (auto nb : links_[c.id][static_cast<std::size_t>(layer)]) {
            if (visited[nb]) {
                continue;
            }
            visited[nb] = true;
            const Neighbor cand{nb, Similarity(query, nb)};
            if (best.size() < ef || Better(cand, best.top())) {
                frontier.push(cand);
                best.push(cand);
                if (best.size() > ef) {
                    best.pop();
                }
            }
        }
    }
    std::vector<Neighbor> out;
    out.reserve(best.size());
    while (!best.empty()) {
        out.push_back(best.top());
        best.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
}

void
HnswGraph::Link(std::uint32_t from, std::uint32_t to, int layer) {
    auto& list = links_[from][static_cast<std::size_t>(layer)];
    list.push_back(to);
    const std::size_t cap = LayerCap(layer);
    if (list.size() <= cap) {
        return;
    }
    std::vector<Neighbor> ranked;
    ranked.reserve(list.size());
    const auto base = vector(from);
    for (auto id : list) {
        ranked.push_back({id, Similarity(base, id)});
    }
    std::sort(ranked.begin(), ranked.end(), Better);
    list.clear();
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (i < cap) {
            list.push_back(ranked[i].id);
            continue;
        }
        // Drop the reverse edge as well to keep layers symmetric.
        auto& back = links_[ranked[i].id][static_cast<std::size_t>(layer)];
        back.erase(std::remove(back.begin(), back.end(), from), back.end());
    }
}

std::uint32_t
HnswGraph::Insert(std::span<const float> vec) {
    if (vec.size() != dim_) {
        Throw(ErrorCode::kDimMismatch,
              "vector dim " + std::to_string(vec.size()) + ", graph dim " + std::to_string(dim_));
    }
    const double u = 1.0 - static_cast<double>(rng_() >> 11) * 0x1.0p-53;  // (0, 1]
    const int level = static_cast<int>(std::floor(-std::log(u) * level_mult_));
    const auto node = static_cast<std::uint32_t>(size());
    vectors_.insert(vectors_.end(), vec.begin(), vec.end());
    levels_.push_back(level);
    links_.emplace_back(static_cast<std::size_t>(level) + 1);

    if (max_level_ < 0) {
        entry_ = node;
        max_level_ = level;
        return node;
    }

    std::uint32_t cur = GreedyClosest(vec, entry_, max_level_, level);
    for (int layer = std::min(level, max_level_); layer >= 0; --layer) {
        auto found = SearchLayer(vec, cur, cfg_.ef_construction, layer);
        cur = found.front().id;
        const std::size_t take = std::min(cfg_.m, found.size());
        auto& mine = links_[node][static_cast<std::size_t>(layer)];
        for (std::size_t i = 0; i < take; ++i) {
            mine.push_back(found[i].id);
        }
        for (std::size_t i = 0; i < take; ++i) {
            Link(found[i].id, node, layer);
        }
    }
    if (level > max_level_) {
        entry_ = node;
        max_level_ = level;
    }
    return node;
}

std::vector<Neighbor>
HnswGraph::Search(std::span<const float> query, std::size_t k, std::size_t ef) const {
    if (size() == 0) {
        Throw(ErrorCode::kEmptyIndex, "graph holds no vectors");
    }
    if (query.size() != dim_) {
        Throw(ErrorCode::kDimMismatch,
              "query dim " + std::to_string(query.size()) + ", graph dim " + std::to_string(dim_));
    }
    if (k == 0) {
        return {};
    }
    if (k >= size()) {
        std::vector<Neighbor> all(size());
        for (std::uint32_t i = 0; i < size(); ++i) {
            all[i] = {i, Similarity(query, i)};
        }
        std::sort(all.begin(), all.end(), Better);
        return all;
    }
    const auto start = GreedyClosest(query, entry_, max_level_, 0);
    auto found = SearchLayer(query, start, std::max(ef, k), 0);
    if (found.size() > k) {
        found.resize(k);
    }
    return found;
}

HnswGraph
HnswGraph::FromParts(std::size_t dim,
                     HnswConfig cfg,
                     std::vector<float> vectors,
                     std::vector<int> levels,
                     std::vector<std::vector<std::vector<std::uint32_t>>> links,
                     std::uint32_t entry) {
    HnswGraph g(dim, cfg);
    if (vectors.size() != levels.size() * dim || links.size() != levels.size()) {
        Throw(ErrorCode::kShapeMismatch, "graph parts disagree on node count");
    }
    g.vectors_ = std::move(vectors);
    g.levels_ = std::move(levels);
    g.links_ = std::move(links);
    g.entry_ = entry;
    g.max_level_ = g.levels_.empty() ? -1 : g.levels_.at(entry);
    // Continue the level sequence deterministically after a reload.
    g.rng_.seed(cfg.seed + g.levels_.size());
    return g;
}

}  // namespace latesearch

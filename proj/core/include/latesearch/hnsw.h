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
#include <random>
#include <span>
#include <vector>

namespace latesearch {

struct HnswConfig {
    std::size_t m{16};
    std::size_t ef_construction{128};
    std::size_t ef_search{256};
    std::uint64_t seed{42};
    /// Multiplier for the geometric level draw; 0 means 1 / ln(m).
    double level_norm_factor{0.0};
};

struct Neighbor {
    std::uint32_t id;
    float similarity;
};

/// Hierarchical navigable small-world graph over unit vectors with
/// inner-product similarity. Neighbor selection keeps the plain top-m by
/// similarity. Links are kept symmetric: when a full list evicts a node the
/// reverse edge goes too. Layer caps are m above layer 0 and 2m on layer 0.
/// Single writer; a graph that is not being modified can be searched
/// concurrently.
class HnswGraph {
public:
    HnswGraph() = default;
    HnswGraph(std::size_t dim, HnswConfig cfg);

    /// Adds a vector and returns its node id. Throws DimMismatch.
    std::uint32_t
    Insert(std::span<const float> vec);

    /// Top-k nodes by dot product, best first, ties to the lower node id.
    /// k >= size() scans every node. Throws EmptyIndex.
    std::vector<Neighbor>
    Search(std::span<const float> query, std::size_t k, std::size_t ef) const;

    std::size_t
    size() const noexcept {
        return levels_.size();
    }

    std::size_t
    dim() const noexcept {
        return dim_;
    }

    const HnswConfig&
    config() const noexcept {
        return cfg_;
    }

    int
    max_level() const noexcept {
        return max_level_;
    }

    std::uint32_t
    entry_point() const noexcept {
        return entry_;
    }

    int
    level(std::uint32_t node) const {
        return levels_.at(node);
    }

    const std::vector<std::uint32_t>&
    neighbors(std::uint32_t node, int layer) const {
        return links_.at(node).at(static_cast<std::size_t>(layer));
    }

    std::span<const float>
    vector(std::uint32_t node) const noexcept {
        return {vectors_.data() + static_cast<std::size_t>(node) * dim_, dim_};
    }

    std::size_t
    LayerCap(int layer) const noexcept {
        return layer == 0 ? 2 * cfg_.m : cfg_.m;
    }

    /// Reassembles a graph from stored parts (see TokenGraphIndex::Load).
    static HnswGraph
    FromParts(std::size_t dim,
              HnswConfig cfg,
              std::vector<float> vectors,
              std::vector<int> levels,
              std::vector<std::vector<std::vector<std::uint32_t>>> links,
              std::uint32_t entry);

private:
    float
    Similarity(std::span<const float> a, std::uint32_t node) const;

    std::uint32_t
    GreedyClosest(std::span<const float> query, std::uint32_t start, int from_layer, int to_layer) const;

    std::vector<Neighbor>
    SearchLayer(std::span<const float> query, std::uint32_t start, std::size_t ef, int layer) const;

    void
    Link(std::uint32_t from, std::uint32_t to, int layer);

    std::size_t dim_{0};
    HnswConfig cfg_;
    double level_mult_{0.0};
    std::mt19937_64 rng_;
    std::vector<float> vectors_;
    std::vector<int> levels_;
    std::vector<std::vector<std::vector<std::uint32_t>>> links_;  // node -> layer -> ids
    std::uint32_t entry_{0};
    int max_level_{-1};
};

}  // namespace latesearch

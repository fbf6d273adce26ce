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
#include <span>
#include <vector>

namespace latesearch {

/// k unit-norm prototypes, row-major k x dim.
struct Centroids {
    std::size_t k{0};
    std::size_t dim{0};
    std::vector<float> vectors;

    std::span<const float>
    row(std::size_t i) const noexcept {
        return {vectors.data() + i * dim, dim};
    }
};

/// Spherical k-means over unit-norm points (row-major n x dim): assignment
/// by largest dot product, update to the normalized member mean. Seeding is
/// k-means++ (squared chord distance) driven by `seed`. An empty cluster is
/// re-seeded with the member of the largest cluster farthest from its
/// centroid. Stops after `iters` updates or when assignments stop changing.
/// Throws KTooLarge when k exceeds the number of points.
Centroids
TrainCentroids(std::span<const float> points,
               std::size_t dim,
               std::size_t k,
               std::size_t iters,
               std::uint64_t seed);

/// Index of the centroid with the largest dot product per point; ties go to
/// the lowest centroid id.
std::vector<std::uint32_t>
AssignNearest(std::span<const float> points, std::size_t dim, const Centroids& centroids);

/// Per-point (id, dot) of the best centroid.
void
AssignNearest(std::span<const float> points,
              std::size_t dim,
              const Centroids& centroids,
              std::vector<std::uint32_t>& ids,
              std::vector<float>& dots);

}  // namespace latesearch

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

#include "latesearch/kmeans.h"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "latesearch/parallel.h"
#include "latesearch/status.h"

namespace latesearch {

namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMatrix>;

constexpr std::size_t kAssignBlock = 256;

double
Uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

float
Dot(const float* a, const float* b, std::size_t dim) {
    float s = 0.0f;
    for (std::size_t i = 0; i < dim; ++i) {
        s += a[i] * b[i];
    }
    return s;
}

std::vector<std::size_t>
PlusPlusSeeds(std::span<const float> points, std::size_t n, std::size_t dim, std::size_t k,
              std::mt19937_64& rng) {
    std::vector<std::size_t> chosen;
    chosen.reserve(k);
    std::vector<bool> taken(n, false);
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());

    auto take = [&](std::size_t idx) {
        chosen.push_back(idx);
        taken[idx] = true;
        const float* c = points.data() + idx * dim;
        ParallelFor(n, 4096, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                // |x - c|^2 = 2 - 2 x.c on the unit sphere.
                const double d = std::max(0.0, 2.0 - 2.0 * Dot(points.data() + i * dim, c, dim));
                d2[i] = std::min(d2[i], d);
            }
        });
        d2[idx] = 0.0;
    };

    take(static_cast<std::size_t>(Uniform01(rng) * static_cast<double>(n)));
    while (chosen.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!taken[i]) {
                total += d2[i];
            }
        }
        std::size_t pick = n;
        if (total > 0.0) {
            const double target = Uniform01(rng) * total;
            double run = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (taken[i] || d2[i] <= 0.0) {
                    continue;
                }
                run += d2[i];
                pick = i;
                if (run > target) {
                    break;
                }
            }
        }
        if (pick == n) {
            // Remaining points coincide with chosen ones.
            pick = static_cast<std::size_t>(std::find(taken.begin(), taken.end(), false) - taken.begin());
        }
        take(pick);
    }
    return chosen;
}

}  // namespace

void
AssignNearest(std::span<const float> points,
              std::size_t dim,
              const Centroids& centroids,
              std::vector<std::uint32_t>& ids,
              std::vector<float>& dots) {
    if (dim != centroids.dim) {
        Throw(ErrorCode::kDimMismatch, "points and centroids differ in dim");
    }
    const std::size_t n = points.size() / dim;
    ids.assign(n, 0);
    dots.assign(n, 0.0f);
    const ConstRowMap cmat(centroids.vectors.data(), static_cast<Eigen::Index>(centroids.k),
                           static_cast<Eigen::Index>(dim));
    ParallelFor(n, kAssignBlock, [&](std::size_t begin, std::size_t end) {
        const ConstRowMap pmat(points.data() + begin * dim, static_cast<Eigen::Index>(end - begin),
                               static_cast<Eigen::Index>(dim));
        const RowMatrix sims = pmat * cmat.transpose();
        for (std::size_t r = 0; r < end - begin; ++r) {
            Eigen::Index best = 0;
            float best_sim = sims(static_cast<Eigen::Index>(r), 0);
            for (Eigen::Index c = 1; c < sims.cols(); ++c) {
                const float s = sims(static_cast<Eigen::Index>(r), c);
                if (s > best_sim) {
                    best_sim = s;
                    best = c;
                }
            }
            ids[begin + r] = static_cast<std::uint32_t>(best);
            dots[begin + r] = best_sim;
        }
    });
}

std::vector<std::uint32_t>
AssignNearest(std::span<const float> points, std::size_t dim, const Centroids& centroids) {
    std::vector<std::uint32_t> ids;
    std::vector<float> dots;
    AssignNearest(points, dim, centroids, ids, dots);
    return ids;
}

Centroids
TrainCentroids(std::span<const float> points,
               std::size_t dim,
               std::size_t k,
               std::size_t iters,
               std::uint64_t seed) {
    if (dim == 0 || points.size() % dim != 0) {
        Throw(ErrorCode::kDimMismatch, "point buffer is not a multiple of dim");
    }
    const std::size_t n = points.size() / dim;
    if (n == 0) {
        Throw(ErrorCode::kInvalidArgument, "k-means needs at least one point");
    }
    if (k == 0 || k > n) {
        Throw(ErrorCode::kKTooLarge,
              "k = " + std::to_string(k) + " with " + std::to_string(n) + " points");
    }

    std::mt19937_64 rng(seed);
    Centroids c{k, dim, std::vector<float>(k * dim)};
    const auto seeds = PlusPlusSeeds(points, n, dim, k, rng);
    for (std::size_t j = 0; j < k; ++j) {
        std::copy_n(points.data() + seeds[j] * dim, dim, c.vectors.data() + j * dim);
    }

    std::vector<std::uint32_t> assign;
    std::vector<float> dots;
    AssignNearest(points, dim, c, assign, dots);

    std::vector<double> sums(k * dim);
    std::vector<std::size_t> counts(k);
    for (std::size_t it = 0; it < iters; ++it) {
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto a = assign[i];
            ++counts[a];
            const float* p = points.data() + i * dim;
            double* s = sums.data() + a * dim;
            for (std::size_t d = 0; d < dim; ++d) {
                s[d] += p[d];
            }
        }
        for (std::size_t j = 0; j < k; ++j) {
            if (counts[j] == 0) {
                continue;
            }
            const double* s = sums.data() + j * dim;
            double sq = 0.0;
            for (std::size_t d = 0; d < dim; ++d) {
                sq += s[d] * s[d];
            }
            const double norm = std::sqrt(sq);
            if (norm < 1e-12) {
                continue;
            }
            for (std::size_t d = 0; d < dim; ++d) {
                c.vectors[j * dim + d] = static_cast<float>(s[d] / norm);
            }
        }
        for (std::size_t j = 0; j < k; ++j) {
            if (counts[j] != 0) {
                continue;
            }
            const auto largest = static_cast<std::uint32_t>(
                std::max_element(counts.begin(), counts.end()) - counts.begin());
            if (counts[largest] < 2) {
                break;
            }
            std::size_t far = n;
            float far_dot = std::numeric_limits<float>::infinity();
            for (std::size_t i = 0; i < n; ++i) {
                if (assign[i] != largest) {
                    continue;
                }
                const float d = Dot(points.data() + i * dim, c.vectors.data() + largest * dim, dim);
                if (d < far_dot) {
                    far_dot = d;
                    far = i;
                }
            }
            std::copy_n(points.data() + far * dim, dim, c.vectors.data() + j * dim);
            assign[far] = static_cast<std::uint32_t>(j);
            --counts[largest];
            counts[j] = 1;
        }

        std::vector<std::uint32_t> next;
        AssignNearest(points, dim, c, next, dots);
        if (next == assign) {
            break;
        }
        assign = std::move(next);
    }
    return c;
}

}  // namespace latesearch

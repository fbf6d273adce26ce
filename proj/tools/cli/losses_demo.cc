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

#include "losses_demo.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "latesearch/losses.h"

namespace latesearch::cli {

namespace {

using losses::Matrix;

Matrix
RandomUnitRows(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> normal;
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = normal(rng);
        }
        m.row(r).normalize();
    }
    return m;
}

// Smallest gap between the best and second-best document token over all
// query tokens.
double
ArgmaxGap(const Matrix& q, const Matrix& d) {
    double gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a < q.rows(); ++a) {
        Eigen::VectorXd s = d * q.row(a).transpose();
        std::sort(s.data(), s.data() + s.size(), std::greater<>());
        if (s.size() > 1) {
            gap = std::min(gap, s(0) - s(1));
        }
    }
    return gap;
}

losses::ContrastiveBatch
TieFreeContrastive(std::mt19937_64& rng, std::size_t b, std::size_t g, Eigen::Index dim) {
    std::uniform_int_distribution<int> tokens(1, 6);
    for (;;) {
        losses::ContrastiveBatch batch;
        batch.temperature = 0.5;
        for (std::size_t i = 0; i < b; ++i) {
            batch.queries.push_back(RandomUnitRows(rng, tokens(rng), dim));
            auto& group = batch.doc_groups.emplace_back();
            for (std::size_t j = 0; j < g; ++j) {
                group.push_back(RandomUnitRows(rng, tokens(rng), dim));
            }
        }
        double gap = std::numeric_limits<double>::infinity();
        for (const auto& q : batch.queries) {
            for (const auto& group : batch.doc_groups) {
                for (const auto& d : group) {
                    gap = std::min(gap, ArgmaxGap(q, d));
                }
            }
        }
        if (gap > 1e-3) {
            return batch;
        }
    }
}

losses::DistillBatch
TieFreeDistill(std::mt19937_64& rng, std::size_t b, std::size_t n_way, Eigen::Index dim) {
    std::uniform_int_distribution<int> tokens(1, 6);
    std::normal_distribution<double> normal;
    for (;;) {
        losses::DistillBatch batch;
        batch.teacher_scores.resize(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(n_way));
        double gap = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < b; ++i) {
            batch.queries.push_back(RandomUnitRows(rng, tokens(rng), dim));
            auto& docs = batch.docs.emplace_back();
            for (std::size_t j = 0; j < n_way; ++j) {
                docs.push_back(RandomUnitRows(rng, tokens(rng), dim));
                gap = std::min(gap, ArgmaxGap(batch.queries.back(), docs.back()));
                batch.teacher_scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 2.0 * normal(rng);
            }
        }
        if (gap > 1e-3) {
            return batch;
        }
    }
}

}  // namespace

nlohmann::json
LossesDemo(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    nlohmann::json report;

    auto contrastive = nlohmann::json::array();
    double worst_contrastive = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        const auto batch = TieFreeContrastive(rng, 2 + trial % 3, 1 + trial % 2, 8);
        const auto check = losses::CheckContrastiveGradient(batch);
        worst_contrastive = std::max(worst_contrastive, check.max_rel_error);
        contrastive.push_back({{"batch", batch.queries.size()},
                               {"group", batch.group_size()},
                               {"loss", losses::ContrastiveForward(batch).loss},
                               {"coordinates", check.coordinates},
                               {"max_rel_error", check.max_rel_error}});
    }
    report["contrastive_grad_check"] = {{"trials", contrastive}, {"max_rel_error", worst_contrastive},
                                        {"pass", worst_contrastive < 1e-4}};

    auto distill = nlohmann::json::array();
    double worst_distill = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        const auto batch = TieFreeDistill(rng, 1 + trial % 3, 2 + trial % 3, 8);
        const auto check = losses::CheckDistillGradient(batch);
        worst_distill = std::max(worst_distill, check.max_rel_error);
        distill.push_back({{"batch", batch.queries.size()},
                           {"n_way", batch.teacher_scores.cols()},
                           {"loss", losses::DistillForward(batch)},
                           {"coordinates", check.coordinates},
                           {"max_rel_error", check.max_rel_error}});
    }
    report["distill_grad_check"] = {{"trials", distill}, {"max_rel_error", worst_distill},
                                    {"pass", worst_distill < 1e-4}};

    // Cached-gradient equivalence on a linear encoder.
    const Eigen::Index d_in = 12;
    const Eigen::Index d_out = 8;
    losses::ToyEncoder encoder{RandomUnitRows(rng, d_in, d_out)};
    const auto raw = TieFreeContrastive(rng, 6, 2, d_in);
    const auto full = losses::FullBatchRun(encoder, raw);
    auto chunks = nlohmann::json::array();
    bool chunk_pass = true;
    for (std::size_t chunk : {std::size_t{1}, std::size_t{2}, raw.queries.size()}) {
        const auto cached = losses::GradCacheRun(encoder, raw, chunk);
        const double diff = (cached.weight_grad - full.weight_grad).cwiseAbs().maxCoeff();
        const bool same_loss = cached.loss == full.loss;
        chunk_pass = chunk_pass && same_loss && diff <= 1e-10;
        chunks.push_back({{"chunk_size", chunk}, {"max_abs_diff", diff}, {"loss_bitwise_equal", same_loss}});
    }
    report["gradcache"] = {{"batch", raw.queries.size()}, {"chunks", chunks}, {"pass", chunk_pass}};

    // Gathering two shards is the same batch as presenting it whole.
    const auto whole = TieFreeContrastive(rng, 4, 2, 8);
    losses::ContrastiveBatch left;
    losses::ContrastiveBatch right;
    left.temperature = right.temperature = whole.temperature;
    for (std::size_t i = 0; i < 4; ++i) {
        auto& dst = i < 2 ? left : right;
        dst.queries.push_back(whole.queries[i]);
        dst.doc_groups.push_back(whole.doc_groups[i]);
    }
    const std::vector<losses::ContrastiveBatch> shards{left, right};
    const auto gathered = losses::GatherShards(shards);
    const double gathered_loss = losses::ContrastiveForward(gathered).loss;
    const double whole_loss = losses::ContrastiveForward(whole).loss;
    report["gather"] = {{"shards", shards.size()},
                        {"loss", gathered_loss},
                        {"pass", gathered_loss == whole_loss}};
    return report;
}

}  // namespace latesearch::cli

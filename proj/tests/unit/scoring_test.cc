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

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "common/fixtures.h"
#include "latesearch/parallel.h"
#include "latesearch/status.h"

namespace latesearch {
namespace {

using testing::NaiveMaxSim;
using testing::RandomUnitMatrix;
using testing::Rng;

TEST(MaxSim, HandExample) {
    const auto q = TokenMatrix::FromRows({{1.0f, 0.0f}, {0.0f, 1.0f}});
    const auto d = TokenMatrix::FromRows({{0.6f, 0.8f}, {1.0f, 0.0f}});
    EXPECT_NEAR(MaxSim(q, d), 1.8, 1e-7);
}

TEST(MaxSim, IdenticalAndAntipodal) {
    const auto q = TokenMatrix::FromRows({{1.0f, 0.0f}});
    EXPECT_DOUBLE_EQ(MaxSim(q, TokenMatrix::FromRows({{1.0f, 0.0f}})), 1.0);
    EXPECT_DOUBLE_EQ(MaxSim(q, TokenMatrix::FromRows({{-1.0f, 0.0f}})), -1.0);
}

TEST(MaxSim, Errors) {
    const auto q = TokenMatrix::FromRows({{1.0f, 0.0f}});
    try {
        MaxSim(q, TokenMatrix::FromRows({{1.0f, 0.0f, 0.0f}}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kDimMismatch);
    }
    try {
        MaxSim(q, TokenMatrix(0, 2));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kEmptyMatrix);
    }
}

TEST(MaxSim, MatchesNaiveTripleLoop) {
    Rng rng(17);
    std::uniform_int_distribution<std::size_t> tokens(1, 32);
    std::uniform_int_distribution<std::size_t> dims(1, 16);
    for (int i = 0; i < 100; ++i) {
        const auto dim = dims(rng);
        const auto q = RandomUnitMatrix(rng, tokens(rng), dim);
        const auto d = RandomUnitMatrix(rng, tokens(rng), dim);
        EXPECT_NEAR(MaxSim(q, d), NaiveMaxSim(q, d), 1e-5);
    }
}

TEST(MaxSim, NormalizeByQueryLength) {
    Rng rng(2);
    const auto q = RandomUnitMatrix(rng, 5, 8);
    const auto d = RandomUnitMatrix(rng, 9, 8);
    EXPECT_NEAR(MaxSim(q, d, {true}), MaxSim(q, d) / 5.0, 1e-12);
}

TEST(MaxSimProperties, PermutationInvariance) {
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const auto q = RandomUnitMatrix(rng, 7, 6);
        const auto d = RandomUnitMatrix(rng, 11, 6);
        std::vector<std::size_t> order(d.n_tokens());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        TokenMatrix shuffled(d.n_tokens(), d.dim());
        for (std::size_t i = 0; i < order.size(); ++i) {
            std::copy(d.row(order[i]).begin(), d.row(order[i]).end(), shuffled.row(i).begin());
        }
        EXPECT_NEAR(MaxSim(q, shuffled), MaxSim(q, d), 1e-6);
        TokenMatrix q_rev(q.n_tokens(), q.dim());
        for (std::size_t i = 0; i < q.n_tokens(); ++i) {
            const auto src = q.row(q.n_tokens() - 1 - i);
            std::copy(src.begin(), src.end(), q_rev.row(i).begin());
        }
        EXPECT_NEAR(MaxSim(q_rev, d), MaxSim(q, d), 1e-6);
    }
}

TEST(MaxSimProperties, AppendingDocRowNeverDecreases) {
    Rng rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        const auto q = RandomUnitMatrix(rng, 4, 5);
        auto d = RandomUnitMatrix(rng, 3, 5);
        const double before = MaxSim(q, d);
        const auto extra = RandomUnitMatrix(rng, 1, 5);
        std::vector<float> values = d.values();
        values.insert(values.end(), extra.values().begin(), extra.values().end());
        const TokenMatrix grown(4, 5, values);
        EXPECT_GE(MaxSim(q, grown), before);
    }
}

TEST(MaxSimProperties, SelfScoreEqualsLength) {
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const auto q = RandomUnitMatrix(rng, 1 + trial, 12);
        EXPECT_NEAR(MaxSim(q, q), static_cast<double>(q.n_tokens()), 1e-4);
        EXPECT_LE(std::abs(MaxSim(q, RandomUnitMatrix(rng, 5, 12))), static_cast<double>(q.n_tokens()) + 1e-6);
    }
}

TEST(MaxSimBatch, MatchesPerPair) {
    const std::vector<TokenMatrix> queries{TokenMatrix::FromRows({{1.0f, 0.0f}, {0.0f, 1.0f}}),
                                           TokenMatrix::FromRows({{0.6f, 0.8f}})};
    const std::vector<TokenMatrix> docs{TokenMatrix::FromRows({{0.6f, 0.8f}, {1.0f, 0.0f}}),
                                        TokenMatrix::FromRows({{1.0f, 0.0f}}),
                                        TokenMatrix::FromRows({{-1.0f, 0.0f}, {0.0f, -1.0f}})};
    const auto m = MaxSimBatch(queries, docs);
    ASSERT_EQ(m.n_queries(), 2u);
    ASSERT_EQ(m.n_docs(), 3u);
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            EXPECT_NEAR(m(i, j), NaiveMaxSim(queries[i], docs[j]), 1e-6);
        }
    }
}

TEST(MaxSimBatch, DegenerateShapes) {
    const std::vector<TokenMatrix> one{TokenMatrix::FromRows({{1.0f, 0.0f}})};
    const auto m = MaxSimBatch(one, one);
    EXPECT_EQ(m(0, 0), MaxSim(one[0], one[0]));
    const std::vector<TokenMatrix> two{one[0], one[0]};
    const auto empty = MaxSimBatch(two, {});
    EXPECT_EQ(empty.n_queries(), 2u);
    EXPECT_EQ(empty.n_docs(), 0u);
}

TEST(MaxSimBatch, RandomOracleAndThreadIndependence) {
    Rng rng(12);
    std::vector<TokenMatrix> queries;
    std::vector<TokenMatrix> docs;
    for (int i = 0; i < 7; ++i) {
        queries.push_back(RandomUnitMatrix(rng, 1 + i * 3, 16));
    }
    for (int i = 0; i < 50; ++i) {
        docs.push_back(RandomUnitMatrix(rng, 1 + i % 32, 16));
    }
    SetThreadCount(1);
    const auto single = MaxSimBatch(queries, docs);
    SetThreadCount(8);
    const auto multi = MaxSimBatch(queries, docs);
    SetThreadCount(0);
    EXPECT_EQ(single.values(), multi.values());
    for (std::size_t i = 0; i < queries.size(); ++i) {
        for (std::size_t j = 0; j < docs.size(); ++j) {
            EXPECT_NEAR(single(i, j), NaiveMaxSim(queries[i], docs[j]), 1e-5);
        }
    }
}

TEST(MaxSimBatch, DimMismatch) {
    const std::vector<TokenMatrix> q{TokenMatrix::FromRows({{1.0f, 0.0f}})};
    const std::vector<TokenMatrix> d{TokenMatrix::FromRows({{1.0f}})};
    EXPECT_THROW(MaxSimBatch(q, d), Error);
}

TEST(Rerank, OrdersByScore) {
    const auto q = TokenMatrix::FromRows({{1.0f, 0.0f}, {0.0f, 1.0f}});
    const std::vector<std::string> ids{"B", "A"};
    const std::vector<TokenMatrix> mats{TokenMatrix::FromRows({{1.0f, 0.0f}}),
                                        TokenMatrix::FromRows({{0.6f, 0.8f}, {1.0f, 0.0f}})};
    const auto out = Rerank(q, ids, mats);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].doc_id, "A");
    EXPECT_NEAR(out[0].score, 1.8, 1e-7);
    EXPECT_EQ(out[1].doc_id, "B");
    EXPECT_NEAR(out[1].score, 1.0, 1e-7);
}

TEST(Rerank, TiesByAscendingId) {
    const auto q = TokenMatrix::FromRows({{1.0f, 0.0f}});
    const auto m = TokenMatrix::FromRows({{0.6f, 0.8f}});
    const std::vector<std::string> ids{"b", "a"};
    const std::vector<TokenMatrix> mats{m, m};
    const auto out = Rerank(q, ids, mats);
    EXPECT_EQ(out[0].doc_id, "a");
    EXPECT_EQ(out[1].doc_id, "b");
}

TEST(Rerank, SingletonAndSetOverload) {
    const auto q = TokenMatrix::FromRows({{1.0f, 0.0f}});
    EmbeddingSet set(EmbeddingKind::kDocument, 2);
    set.Add("only", TokenMatrix::FromRows({{0.6f, 0.8f}}));
    const auto out = Rerank(q, set);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].doc_id, "only");
    EXPECT_NEAR(out[0].score, 0.6, 1e-7);
}

TEST(Rerank, Errors) {
    const auto q = TokenMatrix::FromRows({{1.0f, 0.0f}});
    const std::vector<std::string> ids{"x", "x"};
    const std::vector<TokenMatrix> mats{q, q};
    try {
        Rerank(q, ids, mats);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kDuplicateId);
    }
    const std::vector<std::string> one{"y"};
    const std::vector<TokenMatrix> bad{TokenMatrix::FromRows({{1.0f}})};
    try {
        Rerank(q, one, bad);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kDimMismatch);
    }
}

TEST(SortScoredDocs, ScoreThenId) {
    std::vector<ScoredDoc> docs{{"c", 1.0}, {"a", 2.0}, {"b", 1.0}, {"d", 3.0}};
    SortScoredDocs(docs);
    EXPECT_EQ(docs, (std::vector<ScoredDoc>{{"d", 3.0}, {"a", 2.0}, {"b", 1.0}, {"c", 1.0}}));
    EXPECT_TRUE(RanksBefore({"b", 1.0}, {"c", 1.0}));
    EXPECT_FALSE(RanksBefore({"c", 1.0}, {"b", 1.0}));
}

}  // namespace
}  // namespace latesearch

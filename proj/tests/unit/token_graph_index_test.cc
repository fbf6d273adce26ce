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

#include "latesearch/token_graph_index.h"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "common/fixtures.h"
#include "json.hpp"
#include "latesearch/plaid_index.h"
#include "latesearch/status.h"

namespace latesearch {
namespace {

namespace fs = std::filesystem;
using testing::BruteForceTopK;
using testing::ClusteredCorpus;
using testing::CorpusSpec;
using testing::FragmentQueries;
using testing::Rng;

template <typename Fn>
ErrorCode
CodeOf(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no latesearch::Error thrown";
    return ErrorCode::kInvalidArgument;
}

EmbeddingSet
SmallCorpus(std::size_t n_docs, std::uint64_t seed = 7) {
    CorpusSpec spec;
    spec.n_docs = n_docs;
    spec.max_tokens = 24;
    spec.seed = seed;
    return ClusteredCorpus(spec);
}

class TokenGraphFixture : public ::testing::Test {
protected:
    static void
    SetUpTestSuite() {
        docs_ = new EmbeddingSet(SmallCorpus(150));
        queries_ = new EmbeddingSet(FragmentQueries(*docs_, 20, 0.03, 3));
        index_ = new TokenGraphIndex(TokenGraphIndex::Build(*docs_, HnswConfig{}));
    }
    static void
    TearDownTestSuite() {
        delete index_;
        delete queries_;
        delete docs_;
    }
    static EmbeddingSet* docs_;
    static EmbeddingSet* queries_;
    static TokenGraphIndex* index_;
};

EmbeddingSet* TokenGraphFixture::docs_ = nullptr;
EmbeddingSet* TokenGraphFixture::queries_ = nullptr;
TokenGraphIndex* TokenGraphFixture::index_ = nullptr;

TEST_F(TokenGraphFixture, EveryTokenIsANode) {
    EXPECT_EQ(index_->graph().size(), docs_->total_tokens());
    ASSERT_EQ(index_->payloads().size(), docs_->total_tokens());
    std::size_t node = 0;
    for (std::uint32_t d = 0; d < docs_->size(); ++d) {
        for (std::uint32_t t = 0; t < docs_->matrix(d).n_tokens(); ++t, ++node) {
            EXPECT_EQ(index_->payloads()[node], (TokenPayload{d, t}));
        }
    }
}

TEST_F(TokenGraphFixture, PlantedDocumentScoresQueryLength) {
    const auto& q = docs_->matrix(42);
    const auto hits = index_->Retrieve(q, 3);
    ASSERT_FALSE(hits.empty());
    EXPECT_EQ(hits[0].doc_id, docs_->id(42));
    EXPECT_NEAR(hits[0].score, static_cast<double>(q.n_tokens()), 1e-4);
}

TEST_F(TokenGraphFixture, ExhaustiveLimitEqualsRerank) {
    for (const auto& q : queries_->matrices()) {
        const auto got = index_->Retrieve(q, docs_->size(), docs_->total_tokens());
        const auto want = Rerank(q, *docs_);
        ASSERT_EQ(got, want);
    }
}

TEST_F(TokenGraphFixture, RerankFidelity) {
    for (const auto& q : queries_->matrices()) {
        for (const auto& hit : index_->Retrieve(q, 10)) {
            const auto* doc = docs_->Find(hit.doc_id);
            ASSERT_NE(doc, nullptr);
            EXPECT_NEAR(hit.score, MaxSim(q, *doc), 1e-6);
        }
    }
}

TEST_F(TokenGraphFixture, MatchesBruteForceOnSmallCorpus) {
    double overlap = 0.0;
    for (const auto& q : queries_->matrices()) {
        overlap += testing::TopKOverlap(BruteForceTopK(q, *docs_, 10), index_->Retrieve(q, 10), 10);
    }
    EXPECT_GE(overlap / static_cast<double>(queries_->size()), 0.9);
}

TEST_F(TokenGraphFixture, KLargerThanCandidatesIsClamped) {
    const auto hits = index_->Retrieve(queries_->matrix(0), 100000, 2);
    EXPECT_LE(hits.size(), docs_->size());
    for (std::size_t i = 1; i < hits.size(); ++i) {
        EXPECT_TRUE(RanksBefore(hits[i - 1], hits[i]));
    }
}

TEST_F(TokenGraphFixture, SaveLoadRoundTrip) {
    const auto dir = fs::path(testing::TempDir("hnsw_roundtrip"));
    index_->Save(dir);
    for (const char* f : {"manifest.json", "graph.bin", "payloads.bin", "originals.plem"}) {
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    }
    const auto loaded = TokenGraphIndex::Load(dir);
    EXPECT_EQ(loaded.payloads(), index_->payloads());
    EXPECT_EQ(loaded.graph().entry_point(), index_->graph().entry_point());
    for (std::uint32_t n = 0; n < loaded.graph().size(); ++n) {
        ASSERT_EQ(loaded.graph().level(n), index_->graph().level(n));
        for (int l = 0; l <= loaded.graph().level(n); ++l) {
            ASSERT_EQ(loaded.graph().neighbors(n, l), index_->graph().neighbors(n, l));
        }
    }
    for (const auto& q : queries_->matrices()) {
        EXPECT_EQ(loaded.Retrieve(q, 10), index_->Retrieve(q, 10));
    }
}

TEST_F(TokenGraphFixture, LoadGuards) {
    const auto dir = fs::path(testing::TempDir("hnsw_guards"));
    EXPECT_EQ(CodeOf([&] { TokenGraphIndex::Load(dir); }), ErrorCode::kBadManifest);

    index_->Save(dir);
    fs::remove(dir / "payloads.bin");
    EXPECT_EQ(CodeOf([&] { TokenGraphIndex::Load(dir); }), ErrorCode::kBadManifest);

    index_->Save(dir);
    auto manifest = nlohmann::json::parse(std::ifstream(dir / "manifest.json"));
    manifest.erase("entry_point");
    std::ofstream(dir / "manifest.json") << manifest.dump();
    EXPECT_EQ(CodeOf([&] { TokenGraphIndex::Load(dir); }), ErrorCode::kBadManifest);

    index_->Save(dir);
    {
        std::fstream f(dir / "graph.bin", std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(3);
        f.put('\x7f');
    }
    EXPECT_EQ(CodeOf([&] { TokenGraphIndex::Load(dir); }), ErrorCode::kChecksumMismatch);

    const auto plaid_dir = fs::path(testing::TempDir("hnsw_wrong_type"));
    PlaidIndex::Build(*docs_, PlaidConfig{}).Save(plaid_dir);
    EXPECT_EQ(CodeOf([&] { TokenGraphIndex::Load(plaid_dir); }), ErrorCode::kBadManifest);
}

TEST(TokenGraphIndex, AddDocument) {
    auto index = TokenGraphIndex::Build(SmallCorpus(40), HnswConfig{});
    const auto extra = SmallCorpus(1, 123);
    const std::size_t before = index.graph().size();
    index.AddDocument("added", extra.matrix(0));
    EXPECT_EQ(index.graph().size(), before + extra.matrix(0).n_tokens());
    const auto hits = index.Retrieve(extra.matrix(0), 1);
    ASSERT_EQ(hits.size(), 1u);
    EXPECT_EQ(hits[0].doc_id, "added");

    EXPECT_EQ(CodeOf([&] { index.AddDocument("added", extra.matrix(0)); }), ErrorCode::kDuplicateId);
    EXPECT_EQ(index.graph().size(), before + extra.matrix(0).n_tokens());
    Rng rng(1);
    EXPECT_EQ(CodeOf([&] { index.AddDocument("bad-dim", testing::RandomUnitMatrix(rng, 2, 5)); }),
              ErrorCode::kDimMismatch);
}

TEST(TokenGraphIndex, RetrieveGuards) {
    const TokenGraphIndex empty(8, HnswConfig{});
    Rng rng(2);
    EXPECT_EQ(CodeOf([&] { empty.Retrieve(testing::RandomUnitMatrix(rng, 2, 8), 5); }), ErrorCode::kEmptyIndex);
    const auto index = TokenGraphIndex::Build(SmallCorpus(10), HnswConfig{});
    EXPECT_EQ(CodeOf([&] { index.Retrieve(testing::RandomUnitMatrix(rng, 2, 8), 5); }), ErrorCode::kDimMismatch);
}

TEST(TokenGraphIndex, DeterministicBuild) {
    const auto docs = SmallCorpus(60);
    const auto a = TokenGraphIndex::Build(docs, HnswConfig{});
    const auto b = TokenGraphIndex::Build(docs, HnswConfig{});
    for (std::uint32_t n = 0; n < a.graph().size(); ++n) {
        ASSERT_EQ(a.graph().level(n), b.graph().level(n));
        for (int l = 0; l <= a.graph().level(n); ++l) {
            ASSERT_EQ(a.graph().neighbors(n, l), b.graph().neighbors(n, l));
        }
    }
}

}  // namespace
}  // namespace latesearch

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

#include <benchmark/benchmark.h>

#include "common/fixtures.h"
#include "latesearch/parallel.h"
#include "latesearch/plaid_index.h"
#include "latesearch/token_graph_index.h"

namespace latesearch {
namespace {

struct Data {
    EmbeddingSet docs;
    EmbeddingSet queries;
};

const Data&
Shared() {
    static const Data data = [] {
        testing::CorpusSpec spec;
        spec.n_docs = 1000;
        auto docs = testing::ClusteredCorpus(spec);
        auto queries = testing::FragmentQueries(docs, 50, 0.03, 11);
        return Data{std::move(docs), std::move(queries)};
    }();
    return data;
}

void
BM_PlaidBuild(benchmark::State& state) {
    SetThreadCount(1);
    PlaidConfig cfg;
    cfg.nbits = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(PlaidIndex::Build(Shared().docs, cfg));
    }
}
BENCHMARK(BM_PlaidBuild)->Arg(2)->Unit(benchmark::kMillisecond);

void
BM_PlaidSearch(benchmark::State& state) {
    SetThreadCount(1);
    static const auto index = PlaidIndex::Build(Shared().docs, PlaidConfig{});
    PlaidSearchParams params;
    params.nprobe = static_cast<std::size_t>(state.range(0));
    const auto& queries = Shared().queries;
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(index.Search(queries.matrix(i++ % queries.size()), 10, params));
    }
}
BENCHMARK(BM_PlaidSearch)->Arg(1)->Arg(2)->Arg(8)->Unit(benchmark::kMicrosecond);

void
BM_TokenGraphBuild(benchmark::State& state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(TokenGraphIndex::Build(Shared().docs, HnswConfig{}));
    }
}
BENCHMARK(BM_TokenGraphBuild)->Unit(benchmark::kMillisecond)->Iterations(1);

void
BM_TokenGraphRetrieve(benchmark::State& state) {
    static const auto index = TokenGraphIndex::Build(Shared().docs, HnswConfig{});
    const auto k_token = static_cast<std::size_t>(state.range(0));
    const auto& queries = Shared().queries;
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(index.Retrieve(queries.matrix(i++ % queries.size()), 10, k_token));
    }
}
BENCHMARK(BM_TokenGraphRetrieve)->Arg(10)->Arg(100)->Unit(benchmark::kMicrosecond);

}  // namespace
}  // namespace latesearch

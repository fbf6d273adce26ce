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

#include "fixtures.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

namespace latesearch::testing {

namespace {

void
Normalize(std::vector<float>& v) {
    double s = 0.0;
    for (float x : v) {
        s += double(x) * x;
    }
    const double inv = 1.0 / std::sqrt(s);
    for (float& x : v) {
        x = static_cast<float>(x * inv);
    }
}

}  // namespace

std::vector<float>
RandomUnitVector(Rng& rng, std::size_t dim) {
    std::normal_distribution<float> g(0.0F, 1.0F);
    std::vector<float> v(dim);
    for (auto& x : v) {
        x = g(rng);
    }
    Normalize(v);
    return v;
}

TokenMatrix
RandomUnitMatrix(Rng& rng, std::size_t n_tokens, std::size_t dim) {
    TokenMatrix m(n_tokens, dim);
    for (std::size_t i = 0; i < n_tokens; ++i) {
        const auto v = RandomUnitVector(rng, dim);
        std::copy(v.begin(), v.end(), m.row(i).begin());
    }
    return m;
}

EmbeddingSet
ClusteredCorpus(const CorpusSpec& spec) {
    Rng rng(spec.seed);
    std::vector<std::vector<float>> centers;
    for (std::size_t b = 0; b < spec.n_blobs; ++b) {
        centers.push_back(RandomUnitVector(rng, spec.dim));
    }
    std::normal_distribution<float> g(0.0F, 1.0F);
    auto around = [&](const std::vector<float>& c, double noise) {
        std::vector<float> v(spec.dim);
        for (std::size_t j = 0; j < spec.dim; ++j) {
            v[j] = c[j] + static_cast<float>(noise) * g(rng);
        }
        Normalize(v);
        return v;
    };
    std::vector<std::vector<std::vector<float>>> vocab(spec.n_blobs);
    for (std::size_t b = 0; b < spec.n_blobs; ++b) {
        for (std::size_t w = 0; w < spec.vocabulary; ++w) {
            vocab[b].push_back(around(centers[b], spec.concept_noise));
        }
    }
    std::uniform_int_distribution<std::size_t> word(0, std::max<std::size_t>(spec.vocabulary, 1) - 1);
    std::uniform_int_distribution<std::size_t> len(spec.min_tokens, spec.max_tokens);
    std::uniform_int_distribution<std::size_t> blob(0, spec.n_blobs - 1);
    std::uniform_int_distribution<std::size_t> n_topics(1, 3);
    EmbeddingSet set(EmbeddingKind::kDocument, spec.dim);
    for (std::size_t d = 0; d < spec.n_docs; ++d) {
        std::vector<std::size_t> topics(n_topics(rng));
        for (auto& t : topics) {
            t = blob(rng);
        }
        std::uniform_int_distribution<std::size_t> pick(0, topics.size() - 1);
        const std::size_t n = len(rng);
        const std::size_t n_concepts = (n + spec.tokens_per_concept - 1) / spec.tokens_per_concept;
        std::vector<std::vector<float>> concepts;
        for (std::size_t k = 0; k < n_concepts; ++k) {
            const std::size_t b = topics[pick(rng)];
            concepts.push_back(spec.vocabulary > 0 ? vocab[b][word(rng)] : around(centers[b], spec.concept_noise));
        }
        std::uniform_int_distribution<std::size_t> pick_concept(0, n_concepts - 1);
        TokenMatrix m(n, spec.dim);
        for (std::size_t i = 0; i < n; ++i) {
            const auto v = around(concepts[pick_concept(rng)], spec.token_noise);
            std::copy(v.begin(), v.end(), m.row(i).begin());
        }
        set.Add(DocId(d), std::move(m));
    }
    return set;
}

EmbeddingSet
FragmentQueries(const EmbeddingSet& docs,
                std::size_t n_queries,
                double noise,
                std::uint64_t seed,
                std::size_t min_len,
                std::size_t max_len) {
    Rng rng(seed);
    std::normal_distribution<float> g(0.0F, 1.0F);
    std::uniform_int_distribution<std::size_t> pick_doc(0, docs.size() - 1);
    std::uniform_int_distribution<std::size_t> frag_len(min_len, max_len);
    EmbeddingSet queries(EmbeddingKind::kQuery, docs.dim());
    for (std::size_t q = 0; q < n_queries; ++q) {
        const auto& doc = docs.matrix(pick_doc(rng));
        const std::size_t n = std::min(frag_len(rng), doc.n_tokens());
        std::uniform_int_distribution<std::size_t> start(0, doc.n_tokens() - n);
        const std::size_t s = start(rng);
        TokenMatrix m(n, docs.dim());
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<float> v(doc.row(s + i).begin(), doc.row(s + i).end());
            for (auto& x : v) {
                x += static_cast<float>(noise) * g(rng);
            }
            Normalize(v);
            std::copy(v.begin(), v.end(), m.row(i).begin());
        }
        char name[32];
        std::snprintf(name, sizeof(name), "q%03zu", q);
        queries.Add(name, std::move(m));
    }
    return queries;
}

double
NaiveMaxSim(const TokenMatrix& q, const TokenMatrix& d) {
    double total = 0.0;
    for (std::size_t i = 0; i < q.n_tokens(); ++i) {
        double best = -INFINITY;
        for (std::size_t j = 0; j < d.n_tokens(); ++j) {
            double dot = 0.0;
            for (std::size_t c = 0; c < q.dim(); ++c) {
                dot += double(q.row(i)[c]) * double(d.row(j)[c]);
            }
            best = std::max(best, dot);
        }
        total += best;
    }
    return total;
}

std::vector<ScoredDoc>
BruteForceTopK(const TokenMatrix& q, const EmbeddingSet& docs, std::size_t k) {
    std::vector<ScoredDoc> all;
    all.reserve(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
        all.push_back({docs.id(i), NaiveMaxSim(q, docs.matrix(i))});
    }
    std::sort(all.begin(), all.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
        return a.score != b.score ? a.score > b.score : a.doc_id < b.doc_id;
    });
    all.resize(std::min(k, all.size()));
    return all;
}

double
TopKOverlap(const std::vector<ScoredDoc>& a, const std::vector<ScoredDoc>& b, std::size_t k) {
    std::set<std::string> top;
    for (std::size_t i = 0; i < std::min(k, a.size()); ++i) {
        top.insert(a[i].doc_id);
    }
    std::size_t hit = 0;
    for (std::size_t i = 0; i < std::min(k, b.size()); ++i) {
        hit += top.count(b[i].doc_id);
    }
    return static_cast<double>(hit) / static_cast<double>(k);
}

std::string
DocId(std::size_t i) {
    char name[32];
    std::snprintf(name, sizeof(name), "d%05zu", i);
    return name;
}

std::string
TempDir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("latesearch_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

}  // namespace latesearch::testing

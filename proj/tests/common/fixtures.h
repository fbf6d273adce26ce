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
#include <string>
#include <vector>

#include "latesearch/embstore.h"
#include "latesearch/scoring.h"

namespace latesearch::testing {

using Rng = std::mt19937_64;

/// n rows of i.i.d. N(0, 1) components, each row scaled to unit length.
TokenMatrix
RandomUnitMatrix(Rng& rng, std::size_t n_tokens, std::size_t dim);

std::vector<float>
RandomUnitVector(Rng& rng, std::size_t dim);

/// Gaussian blobs on the unit sphere. Each blob owns `vocabulary` concepts
/// normalize(center + concept_noise * N(0, I)). A document picks one to
/// three blobs, draws ceil(n_tokens / tokens_per_concept) concepts from their
/// vocabularies, and each token is normalize(concept + token_noise * N(0, I))
/// for a random one of them. vocabulary == 0 gives every document fresh
/// concepts of its own.
struct CorpusSpec {
    std::size_t n_docs{2000};
    std::size_t min_tokens{8};
    std::size_t max_tokens{64};
    std::size_t dim{32};
    std::size_t n_blobs{16};
    double concept_noise{0.25};
    double token_noise{0.04};
    std::size_t tokens_per_concept{4};
    std::size_t vocabulary{64};
    std::uint64_t seed{7};
};

EmbeddingSet
ClusteredCorpus(const CorpusSpec& spec);

/// Queries made from random contiguous fragments (min_len to max_len
/// tokens) of documents, each token perturbed by `noise` * N(0, I) and
/// re-normalized.
EmbeddingSet
FragmentQueries(const EmbeddingSet& docs,
                std::size_t n_queries,
                double noise,
                std::uint64_t seed,
                std::size_t min_len = 4,
                std::size_t max_len = 8);

/// Triple loop in double precision.
double
NaiveMaxSim(const TokenMatrix& q, const TokenMatrix& d);

/// Exhaustive ranking with NaiveMaxSim, ties to the smaller doc id.
std::vector<ScoredDoc>
BruteForceTopK(const TokenMatrix& q, const EmbeddingSet& docs, std::size_t k);

/// |top-k(a) ∩ top-k(b)| / k over doc ids.
double
TopKOverlap(const std::vector<ScoredDoc>& a, const std::vector<ScoredDoc>& b, std::size_t k);

std::string
DocId(std::size_t i);

/// Fresh empty directory under the system temp dir.
std::string
TempDir(const std::string& name);

}  // namespace latesearch::testing

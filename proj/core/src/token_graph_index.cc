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

#include <algorithm>
#include <sstream>

#include "file_util.h"
#include "latesearch/parallel.h"
#include "latesearch/status.h"
#include "manifest.h"

namespace latesearch {

namespace {
constexpr int kHnswFormatVersion = 1;
}

TokenGraphIndex::TokenGraphIndex(std::size_t dim, HnswConfig cfg)
    : graph_(dim, cfg), docs_(EmbeddingKind::kDocument, dim) {
}

TokenGraphIndex
TokenGraphIndex::Build(const EmbeddingSet& docs, HnswConfig cfg) {
    if (docs.kind() != EmbeddingKind::kDocument) {
        Throw(ErrorCode::kKindMismatch, "token graph indexes document embeddings");
    }
    TokenGraphIndex index(docs.dim(), cfg);
    for (std::size_t i = 0; i < docs.size(); ++i) {
        index.AddDocument(docs.id(i), docs.matrix(i));
    }
    return index;
}

void
TokenGraphIndex::AddDocument(std::string id, TokenMatrix matrix) {
    const auto ordinal = static_cast<std::uint32_t>(docs_.size());
    docs_.Add(std::move(id), std::move(matrix));
    const auto& stored = docs_.matrix(ordinal);
    for (std::size_t t = 0; t < stored.n_tokens(); ++t) {
        InsertToken(stored.row(t), {ordinal, static_cast<std::uint32_t>(t)});
    }
}

std::uint32_t
TokenGraphIndex::InsertToken(std::span<const float> vec, TokenPayload payload) {
    if (payload.doc_ordinal >= docs_.size()) {
        Throw(ErrorCode::kOrdinalOutOfRange, "payload names document " + std::to_string(payload.doc_ordinal));
    }
    const auto node = graph_.Insert(vec);
    payloads_.push_back(payload);
    return node;
}

std::vector<Neighbor>
TokenGraphIndex::SearchTokens(std::span<const float> query, std::size_t k, std::size_t ef) const {
    return graph_.Search(query, k, ef);
}

std::vector<ScoredDoc>
TokenGraphIndex::Retrieve(const TokenMatrix& query, std::size_t k, std::size_t k_token) const {
    if (docs_.empty()) {
        Throw(ErrorCode::kEmptyIndex, "index holds no documents");
    }
    if (query.empty()) {
        Throw(ErrorCode::kEmptyMatrix, "query has no tokens");
    }
    if (query.dim() != graph_.dim()) {
        Throw(ErrorCode::kDimMismatch,
              "query dim " + std::to_string(query.dim()) + ", index dim " + std::to_string(graph_.dim()));
    }
    std::vector<bool> hit(docs_.size(), false);
    if (k_token >= graph_.size()) {
        std::fill(hit.begin(), hit.end(), true);
    } else {
        const std::size_t ef = std::max(graph_.config().ef_search, k_token);
        std::vector<std::vector<Neighbor>> per_token(query.n_tokens());
        ParallelFor(query.n_tokens(), 1, [&](std::size_t begin, std::size_t end) {
            for (std::size_t t = begin; t < end; ++t) {
                per_token[t] = graph_.Search(query.row(t), k_token, ef);
            }
        });
        for (const auto& found : per_token) {
            for (const auto& nb : found) {
                hit[payloads_[nb.id].doc_ordinal] = true;
            }
        }
    }
    std::vector<std::uint32_t> candidates;
    for (std::size_t d = 0; d < hit.size(); ++d) {
        if (hit[d]) {
            candidates.push_back(static_cast<std::uint32_t>(d));
        }
    }
    std::vector<ScoredDoc> ranked(candidates.size());
    ParallelFor(candidates.size(), 32, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            ranked[i] = {docs_.id(candidates[i]), MaxSim(query, docs_.matrix(candidates[i]))};
        }
    });
    SortScoredDocs(ranked);
    if (ranked.size() > k) {
        ranked.resize(k);
    }
    return ranked;
}

void
TokenGraphIndex::Save(const std::filesystem::path& dir) const {
    detail::ByteWriter graph;
    for (std::uint32_t node = 0; node < graph_.size(); ++node) {
        const int level = graph_.level(node);
        graph.Put<std::uint8_t>(static_cast<std::uint8_t>(level));
        for (int layer = 0; layer <= level; ++layer) {
            const auto& nbs = graph_.neighbors(node, layer);
            graph.Put<std::uint16_t>(static_cast<std::uint16_t>(nbs.size()));
            graph.PutArray(std::span<const std::uint32_t>(nbs));
        }
    }
    detail::ByteWriter payloads;
    for (const auto& p : payloads_) {
        payloads.Put<std::uint32_t>(p.doc_ordinal);
        payloads.Put<std::uint32_t>(p.token_position);
    }
    std::ostringstream originals;
    WriteEmbeddings(docs_, originals);

    const auto& cfg = graph_.config();
    nlohmann::json manifest = {
        {"type", "hnsw"},
        {"version", kHnswFormatVersion},
        {"dim", graph_.dim()},
        {"n_nodes", graph_.size()},
        {"n_docs", docs_.size()},
        {"entry_point", graph_.entry_point()},
        {"max_level", graph_.max_level()},
        {"config",
         {{"m", cfg.m},
          {"ef_construction", cfg.ef_construction},
          {"ef_search", cfg.ef_search},
          {"seed", cfg.seed},
          {"level_norm_factor", cfg.level_norm_factor}}},
    };
    detail::WriteWithManifest(dir, std::move(manifest),
                              {{"graph.bin", std::move(graph.buffer())},
                               {"payloads.bin", std::move(payloads.buffer())},
                               {"originals.plem", std::move(originals).str()}});
}

TokenGraphIndex
TokenGraphIndex::Load(const std::filesystem::path& dir) {
    const auto m = detail::LoadManifest(dir, "hnsw", kHnswFormatVersion);
    HnswConfig cfg;
    std::size_t dim = 0;
    std::size_t n_nodes = 0;
    std::uint32_t entry = 0;
    try {
        dim = m.at("dim").get<std::size_t>();
        n_nodes = m.at("n_nodes").get<std::size_t>();
        entry = m.at("entry_point").get<std::uint32_t>();
        const auto& c = m.at("config");
        cfg.m = c.at("m").get<std::size_t>();
        cfg.ef_construction = c.at("ef_construction").get<std::size_t>();
        cfg.ef_search = c.at("ef_search").get<std::size_t>();
        cfg.seed = c.at("seed").get<std::uint64_t>();
        cfg.level_norm_factor = c.at("level_norm_factor").get<double>();
    } catch (const nlohmann::json::exception& e) {
        Throw(ErrorCode::kBadManifest, std::string("manifest field: ") + e.what());
    }

    const auto original_bytes = detail::ReadChecked(dir, m, "originals.plem");
    std::istringstream originals(original_bytes);
    TokenGraphIndex index;
    index.docs_ = ReadEmbeddings(originals);
    if (index.docs_.dim() != dim || index.docs_.total_tokens() != n_nodes) {
        Throw(ErrorCode::kBadManifest, "stored documents disagree with the manifest");
    }

    const auto payload_bytes = detail::ReadChecked(dir, m, "payloads.bin");
    if (payload_bytes.size() != n_nodes * 8) {
        Throw(ErrorCode::kBadManifest, "payloads.bin has the wrong size");
    }
    detail::ByteReader pr(payload_bytes);
    std::vector<float> vectors;
    vectors.reserve(n_nodes * dim);
    for (std::size_t i = 0; i < n_nodes; ++i) {
        TokenPayload p{pr.Get<std::uint32_t>(), pr.Get<std::uint32_t>()};
        if (p.doc_ordinal >= index.docs_.size() ||
            p.token_position >= index.docs_.matrix(p.doc_ordinal).n_tokens()) {
            Throw(ErrorCode::kBadManifest, "payload " + std::to_string(i) + " points outside the corpus");
        }
        const auto row = index.docs_.matrix(p.doc_ordinal).row(p.token_position);
        vectors.insert(vectors.end(), row.begin(), row.end());
        index.payloads_.push_back(p);
    }

    const auto graph_bytes = detail::ReadChecked(dir, m, "graph.bin");
    detail::ByteReader gr(graph_bytes);
    std::vector<int> levels(n_nodes);
    std::vector<std::vector<std::vector<std::uint32_t>>> links(n_nodes);
    try {
        for (std::size_t node = 0; node < n_nodes; ++node) {
            levels[node] = gr.Get<std::uint8_t>();
            links[node].resize(static_cast<std::size_t>(levels[node]) + 1);
            for (auto& layer : links[node]) {
                layer.resize(gr.Get<std::uint16_t>());
                gr.GetArray(std::span<std::uint32_t>(layer));
                for (auto nb : layer) {
                    if (nb >= n_nodes) {
                        Throw(ErrorCode::kBadManifest, "graph edge to unknown node");
                    }
                }
            }
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::kTruncatedFile) {
            Throw(ErrorCode::kBadManifest, "graph.bin is truncated");
        }
        throw;
    }
    if (gr.remaining() != 0 || (n_nodes > 0 && entry >= n_nodes)) {
        Throw(ErrorCode::kBadManifest, "graph.bin does not match the manifest");
    }
    index.graph_ = HnswGraph::FromParts(dim, cfg, std::move(vectors), std::move(levels), std::move(links), entry);
    return index;
}

}  // namespace latesearch

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

#include "latesearch/plaid_index.h"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include "file_util.h"
#include "latesearch/parallel.h"
#include "latesearch/status.h"
#include "manifest.h"

namespace latesearch {

namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMatrix>;

constexpr int kPlaidFormatVersion = 1;
constexpr std::size_t kCodecSampleTokens = std::size_t{1} << 18;

void
CheckPackable(std::size_t dim, std::size_t nbits) {
    if (nbits != 1 && nbits != 2 && nbits != 4) {
        Throw(ErrorCode::kInvalidArgument, "nbits must be 1, 2 or 4, got " + std::to_string(nbits));
    }
    if ((dim * nbits) % 8 != 0) {
        Throw(ErrorCode::kDimNotPackable,
              "dim " + std::to_string(dim) + " x nbits " + std::to_string(nbits) + " is not a multiple of 8");
    }
}

std::vector<float>
FlattenTokens(const EmbeddingSet& docs) {
    std::vector<float> flat;
    flat.reserve(docs.total_tokens() * docs.dim());
    for (const auto& m : docs.matrices()) {
        flat.insert(flat.end(), m.values().begin(), m.values().end());
    }
    return flat;
}

void
EncodeTokens(const std::vector<float>& flat,
             std::size_t dim,
             const Centroids& centroids,
             const std::vector<std::uint32_t>& codes,
             const ResidualCodec& codec,
             std::uint8_t* out) {
    const std::size_t n = codes.size();
    const std::size_t bytes = codec.PackedBytes(dim);
    ParallelFor(n, 1024, [&](std::size_t begin, std::size_t end) {
        std::vector<float> residual(dim);
        for (std::size_t t = begin; t < end; ++t) {
            const float* x = flat.data() + t * dim;
            const auto c = centroids.row(codes[t]);
            for (std::size_t d = 0; d < dim; ++d) {
                residual[d] = x[d] - c[d];
            }
            codec.Encode(residual, std::span<std::uint8_t>(out + t * bytes, bytes));
        }
    });
}

void
AppendDirectory(CompressedCorpus& corpus, const EmbeddingSet& docs) {
    std::uint64_t offset = corpus.codes.size();
    for (std::size_t i = 0; i < docs.size(); ++i) {
        corpus.doc_ids.push_back(docs.id(i));
        corpus.doc_offsets.push_back(offset);
        corpus.doc_lens.push_back(static_cast<std::uint32_t>(docs.matrix(i).n_tokens()));
        offset += docs.matrix(i).n_tokens();
    }
}

struct Ranked {
    double score;
    std::uint32_t ordinal;
};

bool
RankedBefore(const Ranked& a, const Ranked& b) {
    if (a.score != b.score) {
        return a.score > b.score;
    }
    return a.ordinal < b.ordinal;
}

void
KeepTop(std::vector<Ranked>& v, std::size_t n) {
    if (v.size() > n) {
        std::partial_sort(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n), v.end(), RankedBefore);
        v.resize(n);
    } else {
        std::sort(v.begin(), v.end(), RankedBefore);
    }
}

}  // namespace

std::size_t
AutoCentroidCount(std::size_t total_tokens) {
    const double target = 4.0 * std::sqrt(static_cast<double>(total_tokens));
    std::size_t k = 1;
    while (static_cast<double>(k) < target) {
        k <<= 1;
    }
    return k;
}

CompressedCorpus
QuantizeCorpus(const EmbeddingSet& docs, const Centroids& centroids, std::size_t nbits) {
    if (docs.dim() != centroids.dim) {
        Throw(ErrorCode::kDimMismatch, "documents and centroids differ in dim");
    }
    const std::size_t dim = docs.dim();
    CheckPackable(dim, nbits);

    const auto flat = FlattenTokens(docs);
    const auto codes = AssignNearest(flat, dim, centroids);
    const std::size_t n = codes.size();

    const std::size_t stride = std::max<std::size_t>(1, (n + kCodecSampleTokens - 1) / kCodecSampleTokens);
    std::vector<float> sample;
    sample.reserve((n / stride + 1) * dim);
    for (std::size_t t = 0; t < n; t += stride) {
        const auto c = centroids.row(codes[t]);
        for (std::size_t d = 0; d < dim; ++d) {
            sample.push_back(flat[t * dim + d] - c[d]);
        }
    }

    CompressedCorpus corpus;
    corpus.dim = dim;
    corpus.codec = ResidualCodec::Fit(sample, nbits);
    AppendDirectory(corpus, docs);
    corpus.codes = codes;
    corpus.residuals.assign(n * corpus.codec.PackedBytes(dim), 0);
    EncodeTokens(flat, dim, centroids, codes, corpus.codec, corpus.residuals.data());
    return corpus;
}

void
AppendToCorpus(CompressedCorpus& corpus, const EmbeddingSet& docs, const Centroids& centroids) {
    if (docs.empty()) {
        return;
    }
    if (docs.dim() != corpus.dim || centroids.dim != corpus.dim) {
        Throw(ErrorCode::kDimMismatch,
              "new documents have dim " + std::to_string(docs.dim()) + ", index dim is " + std::to_string(corpus.dim));
    }
    const auto flat = FlattenTokens(docs);
    const auto codes = AssignNearest(flat, corpus.dim, centroids);
    const std::size_t bytes = corpus.codec.PackedBytes(corpus.dim);
    const std::size_t old_bytes = corpus.residuals.size();
    AppendDirectory(corpus, docs);
    corpus.codes.insert(corpus.codes.end(), codes.begin(), codes.end());
    corpus.residuals.resize(old_bytes + codes.size() * bytes, 0);
    EncodeTokens(flat, corpus.dim, centroids, codes, corpus.codec, corpus.residuals.data() + old_bytes);
}

TokenMatrix
DecompressDoc(const CompressedCorpus& corpus, const Centroids& centroids, std::size_t ordinal) {
    if (ordinal >= corpus.n_docs()) {
        Throw(ErrorCode::kOrdinalOutOfRange,
              "ordinal " + std::to_string(ordinal) + " with " + std::to_string(corpus.n_docs()) + " documents");
    }
    const std::size_t dim = corpus.dim;
    const std::size_t bytes = corpus.codec.PackedBytes(dim);
    const std::size_t n = corpus.doc_lens[ordinal];
    const std::size_t first = corpus.doc_offsets[ordinal];
    TokenMatrix out(n, dim);
    for (std::size_t t = 0; t < n; ++t) {
        auto row = out.row(t);
        const std::size_t token = first + t;
        corpus.codec.Decode(std::span<const std::uint8_t>(corpus.residuals.data() + token * bytes, bytes), row);
        const auto c = centroids.row(corpus.codes[token]);
        double sq = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            row[d] += c[d];
            sq += static_cast<double>(row[d]) * row[d];
        }
        const double norm = std::sqrt(sq);
        if (norm >= 1e-12) {
            for (auto& v : row) {
                v = static_cast<float>(v / norm);
            }
        }
    }
    return out;
}

PlaidIndex
PlaidIndex::Build(const EmbeddingSet& docs, const PlaidConfig& cfg) {
    if (docs.kind() != EmbeddingKind::kDocument) {
        Throw(ErrorCode::kKindMismatch, "PLAID indexes document embeddings");
    }
    if (docs.empty()) {
        Throw(ErrorCode::kEmptyIndex, "cannot build an index over zero documents");
    }
    CheckPackable(docs.dim(), cfg.nbits);
    if (cfg.nprobe == 0 || cfg.n_full_docs == 0 || cfg.n_full_docs > cfg.n_candidate_docs) {
        Throw(ErrorCode::kInvalidArgument, "need nprobe >= 1 and 1 <= n_full_docs <= n_candidate_docs");
    }
    if (cfg.n_centroids != 0 && cfg.nprobe > cfg.n_centroids) {
        Throw(ErrorCode::kInvalidArgument, "nprobe exceeds n_centroids");
    }
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (!IsNormalized(docs.matrix(i))) {
            Throw(ErrorCode::kInvalidArgument, "document '" + docs.id(i) + "' is not unit-normalized");
        }
    }

    const std::size_t dim = docs.dim();
    const auto flat = FlattenTokens(docs);
    const std::size_t total = docs.total_tokens();

    std::vector<float> sample;
    const std::size_t n_sample = std::min(std::max<std::size_t>(1, cfg.sample_size), total);
    if (n_sample == total) {
        sample = flat;
    } else {
        std::vector<std::size_t> idx(total);
        std::iota(idx.begin(), idx.end(), 0);
        std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
        for (std::size_t i = 0; i < n_sample; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng() % (total - i));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(n_sample);
        std::sort(idx.begin(), idx.end());
        sample.reserve(n_sample * dim);
        for (auto t : idx) {
            sample.insert(sample.end(), flat.begin() + static_cast<std::ptrdiff_t>(t * dim),
                          flat.begin() + static_cast<std::ptrdiff_t>((t + 1) * dim));
        }
    }

    std::size_t k = cfg.n_centroids;
    if (k == 0) {
        k = std::min(AutoCentroidCount(total), n_sample);
    }

    PlaidIndex index;
    index.config_ = cfg;
    index.config_.n_centroids = k;
    index.centroids_ = TrainCentroids(sample, dim, k, cfg.kmeans_iters, cfg.seed);
    index.corpus_ = QuantizeCorpus(docs, index.centroids_, cfg.nbits);
    index.RebuildInvertedLists();
    return index;
}

void
PlaidIndex::RebuildInvertedLists() {
    ivf_.assign(centroids_.k, {});
    for (std::size_t doc = 0; doc < corpus_.n_docs(); ++doc) {
        const auto first = corpus_.doc_offsets[doc];
        for (std::size_t t = 0; t < corpus_.doc_lens[doc]; ++t) {
            auto& list = ivf_[corpus_.codes[first + t]];
            if (list.empty() || list.back() != doc) {
                list.push_back(static_cast<std::uint32_t>(doc));
            }
        }
    }
}

std::vector<std::uint32_t>
PlaidIndex::CandidateOrdinals(const TokenMatrix& query, std::size_t nprobe) const {
    if (n_docs() == 0) {
        Throw(ErrorCode::kEmptyIndex, "index holds no documents");
    }
    if (query.empty()) {
        Throw(ErrorCode::kEmptyMatrix, "query has no tokens");
    }
    if (query.dim() != dim()) {
        Throw(ErrorCode::kDimMismatch,
              "query dim " + std::to_string(query.dim()) + ", index dim " + std::to_string(dim()));
    }
    nprobe = std::clamp<std::size_t>(nprobe, 1, centroids_.k);
    const ConstRowMap q(query.values().data(), static_cast<Eigen::Index>(query.n_tokens()),
                        static_cast<Eigen::Index>(dim()));
    const ConstRowMap c(centroids_.vectors.data(), static_cast<Eigen::Index>(centroids_.k),
                        static_cast<Eigen::Index>(dim()));
    const RowMatrix qc = q * c.transpose();

    std::vector<bool> hit(n_docs(), false);
    std::vector<std::uint32_t> order(centroids_.k);
    for (Eigen::Index i = 0; i < qc.rows(); ++i) {
        std::iota(order.begin(), order.end(), 0u);
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(nprobe), order.end(),
                          [&](std::uint32_t a, std::uint32_t b) {
                              const float sa = qc(i, a);
                              const float sb = qc(i, b);
                              return sa != sb ? sa > sb : a < b;
                          });
        for (std::size_t p = 0; p < nprobe; ++p) {
            for (auto doc : ivf_[order[p]]) {
                hit[doc] = true;
            }
        }
    }
    std::vector<std::uint32_t> out;
    for (std::size_t d = 0; d < hit.size(); ++d) {
        if (hit[d]) {
            out.push_back(static_cast<std::uint32_t>(d));
        }
    }
    return out;
}

std::vector<ScoredDoc>
PlaidIndex::Search(const TokenMatrix& query, std::size_t k, const PlaidSearchParams& params) const {
    if (k == 0) {
        Throw(ErrorCode::kInvalidArgument, "k must be >= 1");
    }
    const std::size_t nprobe = params.nprobe.value_or(config_.nprobe);
    const std::size_t n_candidates = std::max<std::size_t>(1, params.n_candidate_docs.value_or(config_.n_candidate_docs));
    const std::size_t n_full = std::min(n_candidates, std::max<std::size_t>(1, params.n_full_docs.value_or(config_.n_full_docs)));

    const auto candidates = CandidateOrdinals(query, nprobe);

    // Centroid-only MaxSim: every document token stands in as its centroid.
    const ConstRowMap q(query.values().data(), static_cast<Eigen::Index>(query.n_tokens()),
                        static_cast<Eigen::Index>(dim()));
    const ConstRowMap c(centroids_.vectors.data(), static_cast<Eigen::Index>(centroids_.k),
                        static_cast<Eigen::Index>(dim()));
    const RowMatrix qc = q * c.transpose();
    std::vector<Ranked> ranked(candidates.size());
    ParallelFor(candidates.size(), 256, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto doc = candidates[i];
            const auto first = corpus_.doc_offsets[doc];
            const auto len = corpus_.doc_lens[doc];
            double total = 0.0;
            for (Eigen::Index r = 0; r < qc.rows(); ++r) {
                float best = -std::numeric_limits<float>::infinity();
                for (std::size_t t = 0; t < len; ++t) {
                    best = std::max(best, qc(r, corpus_.codes[first + t]));
                }
                total += best;
            }
            ranked[i] = {total, doc};
        }
    });
    KeepTop(ranked, n_candidates);
    ranked.resize(std::min(ranked.size(), n_full));

    std::vector<ScoredDoc> scored(ranked.size());
    ParallelFor(ranked.size(), 16, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto doc = ranked[i].ordinal;
            scored[i] = {corpus_.doc_ids[doc], MaxSim(query, Decompress(doc))};
        }
    });
    SortScoredDocs(scored);
    if (scored.size() > k) {
        scored.resize(k);
    }
    return scored;
}

PlaidIndex
PlaidIndex::WithDocuments(const EmbeddingSet& docs) const {
    PlaidIndex out = *this;
    if (docs.empty()) {
        return out;
    }
    if (docs.kind() != EmbeddingKind::kDocument) {
        Throw(ErrorCode::kKindMismatch, "only document embeddings can be added");
    }
    if (docs.dim() != dim()) {
        Throw(ErrorCode::kDimMismatch,
              "new documents have dim " + std::to_string(docs.dim()) + ", index dim is " + std::to_string(dim()));
    }
    std::unordered_set<std::string_view> existing(corpus_.doc_ids.begin(), corpus_.doc_ids.end());
    for (const auto& id : docs.ids()) {
        if (existing.count(id) != 0) {
            Throw(ErrorCode::kDuplicateId, "document '" + id + "' is already indexed");
        }
    }
    AppendToCorpus(out.corpus_, docs, centroids_);
    out.RebuildInvertedLists();
    return out;
}

void
PlaidIndex::Save(const std::filesystem::path& dir) const {
    detail::ByteWriter centroids;
    centroids.PutArray(std::span<const float>(centroids_.vectors));

    detail::ByteWriter codes;
    codes.PutArray(std::span<const std::uint32_t>(corpus_.codes));

    std::string residuals(reinterpret_cast<const char*>(corpus_.residuals.data()), corpus_.residuals.size());

    detail::ByteWriter buckets;
    buckets.PutArray(std::span<const float>(corpus_.codec.cutoffs()));
    buckets.PutArray(std::span<const float>(corpus_.codec.midpoints()));

    detail::ByteWriter doclens;
    doclens.PutArray(std::span<const std::uint32_t>(corpus_.doc_lens));

    std::string ids;
    for (std::size_t i = 0; i < corpus_.n_docs(); ++i) {
        ids += std::to_string(i);
        ids += '\t';
        ids += detail::EscapeField(corpus_.doc_ids[i]);
        ids += '\n';
    }

    nlohmann::json manifest = {
        {"type", "plaid"},
        {"version", kPlaidFormatVersion},
        {"dim", corpus_.dim},
        {"k", centroids_.k},
        {"nbits", corpus_.codec.nbits()},
        {"seed", config_.seed},
        {"n_docs", corpus_.n_docs()},
        {"total_tokens", corpus_.total_tokens()},
        {"residual_bytes", corpus_.residuals.size()},
        {"config",
         {{"n_centroids", config_.n_centroids},
          {"nbits", config_.nbits},
          {"nprobe", config_.nprobe},
          {"n_candidate_docs", config_.n_candidate_docs},
          {"n_full_docs", config_.n_full_docs},
          {"kmeans_iters", config_.kmeans_iters},
          {"seed", config_.seed},
          {"sample_size", config_.sample_size}}},
    };
    detail::WriteWithManifest(dir, std::move(manifest),
                              {{"centroids.bin", std::move(centroids.buffer())},
                               {"codes.bin", std::move(codes.buffer())},
                               {"residuals.bin", std::move(residuals)},
                               {"buckets.bin", std::move(buckets.buffer())},
                               {"doclens.bin", std::move(doclens.buffer())},
                               {"ids.tsv", std::move(ids)}});
}

PlaidIndex
PlaidIndex::Load(const std::filesystem::path& dir) {
    const auto m = detail::LoadManifest(dir, "plaid", kPlaidFormatVersion);
    PlaidIndex index;
    std::size_t dim = 0;
    std::size_t k = 0;
    std::size_t nbits = 0;
    std::size_t n_docs = 0;
    std::size_t total = 0;
    try {
        dim = m.at("dim").get<std::size_t>();
        k = m.at("k").get<std::size_t>();
        nbits = m.at("nbits").get<std::size_t>();
        n_docs = m.at("n_docs").get<std::size_t>();
        total = m.at("total_tokens").get<std::size_t>();
        const auto& c = m.at("config");
        auto& cfg = index.config_;
        cfg.n_centroids = c.at("n_centroids").get<std::size_t>();
        cfg.nbits = c.at("nbits").get<std::size_t>();
        cfg.nprobe = c.at("nprobe").get<std::size_t>();
        cfg.n_candidate_docs = c.at("n_candidate_docs").get<std::size_t>();
        cfg.n_full_docs = c.at("n_full_docs").get<std::size_t>();
        cfg.kmeans_iters = c.at("kmeans_iters").get<std::size_t>();
        cfg.seed = c.at("seed").get<std::uint64_t>();
        cfg.sample_size = c.at("sample_size").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        Throw(ErrorCode::kBadManifest, std::string("manifest field: ") + e.what());
    }
    if (dim == 0 || k == 0 || nbits == 0 || 8 % nbits != 0 || (dim * nbits) % 8 != 0) {
        Throw(ErrorCode::kBadManifest, "inconsistent dim/k/nbits");
    }
    const std::size_t buckets = std::size_t{1} << nbits;

    auto expect_size = [](const std::string& name, std::size_t got, std::size_t want) {
        if (got != want) {
            Throw(ErrorCode::kBadManifest,
                  name + " holds " + std::to_string(got) + " bytes, expected " + std::to_string(want));
        }
    };

    const auto centroid_bytes = detail::ReadChecked(dir, m, "centroids.bin");
    expect_size("centroids.bin", centroid_bytes.size(), k * dim * sizeof(float));
    index.centroids_ = Centroids{k, dim, std::vector<float>(k * dim)};
    detail::ByteReader(centroid_bytes).GetArray(std::span<float>(index.centroids_.vectors));

    const auto code_bytes = detail::ReadChecked(dir, m, "codes.bin");
    expect_size("codes.bin", code_bytes.size(), total * sizeof(std::uint32_t));
    auto& corpus = index.corpus_;
    corpus.dim = dim;
    corpus.codes.resize(total);
    detail::ByteReader(code_bytes).GetArray(std::span<std::uint32_t>(corpus.codes));
    for (auto code : corpus.codes) {
        if (code >= k) {
            Throw(ErrorCode::kBadManifest, "centroid code out of range");
        }
    }

    const auto residual_bytes = detail::ReadChecked(dir, m, "residuals.bin");
    expect_size("residuals.bin", residual_bytes.size(), total * dim * nbits / 8);
    corpus.residuals.assign(residual_bytes.begin(), residual_bytes.end());

    const auto bucket_bytes = detail::ReadChecked(dir, m, "buckets.bin");
    expect_size("buckets.bin", bucket_bytes.size(), (2 * buckets - 1) * sizeof(float));
    std::vector<float> cutoffs(buckets - 1);
    std::vector<float> midpoints(buckets);
    detail::ByteReader br(bucket_bytes);
    br.GetArray(std::span<float>(cutoffs));
    br.GetArray(std::span<float>(midpoints));
    corpus.codec = ResidualCodec(nbits, std::move(cutoffs), std::move(midpoints));

    const auto len_bytes = detail::ReadChecked(dir, m, "doclens.bin");
    expect_size("doclens.bin", len_bytes.size(), n_docs * sizeof(std::uint32_t));
    corpus.doc_lens.resize(n_docs);
    detail::ByteReader(len_bytes).GetArray(std::span<std::uint32_t>(corpus.doc_lens));
    std::uint64_t offset = 0;
    for (auto len : corpus.doc_lens) {
        corpus.doc_offsets.push_back(offset);
        offset += len;
    }
    if (offset != total) {
        Throw(ErrorCode::kBadManifest, "document lengths do not sum to total_tokens");
    }

    const auto id_text = detail::ReadChecked(dir, m, "ids.tsv");
    std::istringstream lines(id_text);
    std::string line;
    while (std::getline(lines, line)) {
        const auto tab = line.find('\t');
        if (tab == std::string::npos || line.substr(0, tab) != std::to_string(corpus.doc_ids.size())) {
            Throw(ErrorCode::kBadManifest, "malformed ids.tsv line " + std::to_string(corpus.doc_ids.size() + 1));
        }
        corpus.doc_ids.push_back(detail::UnescapeField(std::string_view(line).substr(tab + 1)));
    }
    if (corpus.doc_ids.size() != n_docs) {
        Throw(ErrorCode::kBadManifest, "ids.tsv lists " + std::to_string(corpus.doc_ids.size()) + " documents");
    }
    index.RebuildInvertedLists();
    return index;
}

}  // namespace latesearch

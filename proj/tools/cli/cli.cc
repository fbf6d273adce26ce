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

#include "cli.h"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "json.hpp"
#include "latesearch/embstore.h"
#include "latesearch/evaluation.h"
#include "latesearch/parallel.h"
#include "latesearch/plaid_index.h"
#include "latesearch/pooling.h"
#include "latesearch/scoring.h"
#include "latesearch/status.h"
#include "latesearch/token_graph_index.h"
#include "losses_demo.h"

namespace latesearch::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
    std::string embeddings;
    std::string queries;
    std::string index;
    std::string out;
    std::string run;
    std::string qrels;
    std::string type{"plaid"};
    std::string metrics{"map,ndcg@10,ndcg@100,recall@10,recall@100"};
    std::string kmeans_k{"auto"};
    std::size_t k{10};
    std::size_t nbits{2};
    std::optional<std::size_t> nprobe;
    std::size_t k_token{TokenGraphIndex::kDefaultTokenNeighbors};
    std::size_t pool_factor{1};
    bool protect_first_token{false};
    std::uint64_t seed{42};
    std::size_t threads{0};
    bool no_normalize{false};
};

std::uint64_t
DirectoryBytes(const fs::path& dir) {
    std::uint64_t total = 0;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file()) {
            total += e.file_size();
        }
    }
    return total;
}

std::string
IndexType(const fs::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) {
        Throw(ErrorCode::kBadManifest, "no manifest.json in " + dir.string());
    }
    try {
        return json::parse(in).at("type").get<std::string>();
    } catch (const json::exception& e) {
        Throw(ErrorCode::kBadManifest, std::string("unreadable manifest: ") + e.what());
    }
}

EmbeddingSet
LoadEmbeddings(const std::string& path, EmbeddingKind expected, bool normalize) {
    auto set = ReadEmbeddings(fs::path(path));
    if (set.kind() != expected) {
        Throw(ErrorCode::kKindMismatch, path + " holds " + std::string(EmbeddingKindName(set.kind())) +
                                            " embeddings, expected " + std::string(EmbeddingKindName(expected)));
    }
    return normalize ? NormalizeAll(set) : set;
}

std::size_t
ParseKmeansK(const std::string& s) {
    if (s == "auto") {
        return 0;
    }
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != s.size() || v == 0) {
        Throw(ErrorCode::kInvalidArgument, "--kmeans-k expects 'auto' or a positive integer");
    }
    return static_cast<std::size_t>(v);
}

std::vector<std::string>
SplitCsv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

int
CmdIndex(const Options& o, std::ostream& out, std::ostream& err) {
    const std::size_t kmeans_k = ParseKmeansK(o.kmeans_k);
    auto docs = LoadEmbeddings(o.embeddings, EmbeddingKind::kDocument, !o.no_normalize);
    const std::size_t tokens_in = docs.total_tokens();
    if (o.pool_factor > 1) {
        docs = PoolCorpus(docs, PoolingConfig{o.pool_factor, Linkage::kAverage, o.protect_first_token});
        err << "pooled " << tokens_in << " tokens to " << docs.total_tokens() << "\n";
    }
    const fs::path dir(o.out);
    json summary{{"type", o.type},
                 {"documents", docs.size()},
                 {"tokens", docs.total_tokens()},
                 {"tokens_before_pooling", tokens_in},
                 {"dim", docs.dim()}};
    if (o.type == "plaid") {
        PlaidConfig cfg;
        cfg.n_centroids = kmeans_k;
        cfg.nbits = o.nbits;
        cfg.nprobe = o.nprobe.value_or(cfg.nprobe);
        cfg.seed = o.seed;
        err << "building PLAID index over " << docs.size() << " documents\n";
        const auto index = PlaidIndex::Build(docs, cfg);
        index.Save(dir);
        summary["k"] = index.centroids().k;
        summary["nbits"] = index.corpus().codec.nbits();
        summary["residual_bytes"] = index.residual_bytes();
    } else {
        HnswConfig cfg;
        cfg.seed = o.seed;
        err << "building HNSW token graph over " << docs.total_tokens() << " tokens\n";
        const auto index = TokenGraphIndex::Build(docs, cfg);
        index.Save(dir);
        summary["nodes"] = index.graph().size();
    }
    summary["index_bytes"] = DirectoryBytes(dir);
    out << summary.dump() << "\n";
    return kExitOk;
}

int
CmdSearch(const Options& o, std::ostream& out, std::ostream& err) {
    if (o.k == 0) {
        Throw(ErrorCode::kInvalidArgument, "--k must be >= 1");
    }
    const fs::path dir(o.index);
    const auto type = IndexType(dir);
    const auto queries = LoadEmbeddings(o.queries, EmbeddingKind::kQuery, !o.no_normalize);
    eval::Run run;
    if (type == "plaid") {
        const auto index = PlaidIndex::Load(dir);
        if (queries.dim() != index.dim()) {
            Throw(ErrorCode::kDimMismatch, "queries have dim " + std::to_string(queries.dim()) + ", index has " +
                                               std::to_string(index.dim()));
        }
        PlaidSearchParams params;
        params.nprobe = o.nprobe;
        for (std::size_t i = 0; i < queries.size(); ++i) {
            run[queries.id(i)] = index.Search(queries.matrix(i), o.k, params);
        }
    } else if (type == "hnsw") {
        const auto index = TokenGraphIndex::Load(dir);
        if (queries.dim() != index.graph().dim()) {
            Throw(ErrorCode::kDimMismatch, "queries have dim " + std::to_string(queries.dim()) + ", index has " +
                                               std::to_string(index.graph().dim()));
        }
        for (std::size_t i = 0; i < queries.size(); ++i) {
            run[queries.id(i)] = index.Retrieve(queries.matrix(i), o.k, o.k_token);
        }
    } else {
        Throw(ErrorCode::kBadManifest, "unknown index type '" + type + "'");
    }
    eval::WriteRun(run, fs::path(o.out), type);
    err << "searched " << queries.size() << " queries\n";
    out << json{{"type", type}, {"queries", queries.size()}, {"k", o.k}, {"run", o.out}}.dump() << "\n";
    return kExitOk;
}

int
CmdRerank(const Options& o, std::ostream& out, std::ostream& err) {
    const auto queries = LoadEmbeddings(o.queries, EmbeddingKind::kQuery, !o.no_normalize);
    const auto docs = LoadEmbeddings(o.embeddings, EmbeddingKind::kDocument, !o.no_normalize);
    const auto candidates = eval::LoadRun(fs::path(o.run));
    eval::Run reranked;
    for (const auto& [qid, list] : candidates) {
        const auto* query = queries.Find(qid);
        if (query == nullptr) {
            Throw(ErrorCode::kInvalidArgument, "query '" + qid + "' is in the run but not in " + o.queries);
        }
        std::vector<std::string> ids;
        std::vector<TokenMatrix> mats;
        for (const auto& c : list) {
            const auto* m = docs.Find(c.doc_id);
            if (m == nullptr) {
                Throw(ErrorCode::kMissingDoc, "document '" + c.doc_id + "' not found in " + o.embeddings);
            }
            ids.push_back(c.doc_id);
            mats.push_back(*m);
        }
        reranked[qid] = Rerank(*query, ids, mats);
    }
    eval::WriteRun(reranked, fs::path(o.out), "maxsim");
    err << "reranked " << reranked.size() << " queries\n";
    out << json{{"queries", reranked.size()}, {"run", o.out}}.dump() << "\n";
    return kExitOk;
}

int
CmdPool(const Options& o, std::ostream& out, std::ostream&) {
    if (o.pool_factor == 0) {
        Throw(ErrorCode::kInvalidArgument, "--pool-factor must be >= 1");
    }
    const auto docs = LoadEmbeddings(o.embeddings, EmbeddingKind::kDocument, !o.no_normalize);
    const auto pooled = PoolCorpus(docs, PoolingConfig{o.pool_factor, Linkage::kAverage, o.protect_first_token});
    WriteEmbeddings(pooled, fs::path(o.out));
    out << json{{"documents", pooled.size()},
                {"pool_factor", o.pool_factor},
                {"tokens_before", docs.total_tokens()},
                {"tokens_after", pooled.total_tokens()}}
               .dump()
        << "\n";
    return kExitOk;
}

int
CmdEvaluate(const Options& o, std::ostream& out, std::ostream& err) {
    const auto metrics = SplitCsv(o.metrics);
    for (const auto& m : metrics) {
        eval::ParseMetric(m);
    }
    const auto run = eval::LoadRun(fs::path(o.run));
    const auto loaded = eval::LoadQrels(fs::path(o.qrels));
    if (loaded.duplicate_lines > 0) {
        err << loaded.duplicate_lines << " duplicate qrels lines; kept the last grade\n";
    }
    json result = json::object();
    for (const auto& [name, value] : eval::Evaluate(run, loaded.qrels, metrics)) {
        result[name] = value;
    }
    out << result.dump() << "\n";
    return kExitOk;
}

int
CmdInfo(const Options& o, std::ostream& out, std::ostream&) {
    if (!o.index.empty()) {
        const fs::path dir(o.index);
        const auto type = IndexType(dir);
        json info{{"type", type}, {"index_bytes", DirectoryBytes(dir)}};
        if (type == "plaid") {
            const auto index = PlaidIndex::Load(dir);
            const std::size_t expected = index.total_tokens() * index.dim() * index.corpus().codec.nbits() / 8;
            info["documents"] = index.n_docs();
            info["tokens"] = index.total_tokens();
            info["dim"] = index.dim();
            info["k"] = index.centroids().k;
            info["nbits"] = index.corpus().codec.nbits();
            info["residual_bytes"] = index.residual_bytes();
            info["residual_bytes_expected"] = expected;
            info["footprint_law_holds"] = index.residual_bytes() == expected;
        } else if (type == "hnsw") {
            const auto index = TokenGraphIndex::Load(dir);
            info["documents"] = index.documents().size();
            info["tokens"] = index.documents().total_tokens();
            info["dim"] = index.graph().dim();
            info["nodes"] = index.graph().size();
            info["max_level"] = index.graph().max_level();
        } else {
            Throw(ErrorCode::kBadManifest, "unknown index type '" + type + "'");
        }
        out << info.dump() << "\n";
        return kExitOk;
    }
    if (o.embeddings.empty()) {
        Throw(ErrorCode::kInvalidArgument, "info needs --index or --embeddings");
    }
    const auto set = ReadEmbeddings(fs::path(o.embeddings));
    out << json{{"kind", std::string(EmbeddingKindName(set.kind()))},
                {"dim", set.dim()},
                {"entries", set.size()},
                {"tokens", set.total_tokens()}}
               .dump()
        << "\n";
    return kExitOk;
}

void
AddThreads(CLI::App* cmd, Options& o) {
    cmd->add_option("--threads", o.threads, "Worker thread cap (0 = all cores)")->envname("LATESEARCH_THREADS");
}

void
AddNormalize(CLI::App* cmd, Options& o) {
    cmd->add_flag("--no-normalize", o.no_normalize, "Use embeddings as stored, without L2 normalization");
}

}  // namespace

int
Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Late-interaction retrieval engine over precomputed token embeddings", "latesearch"};
    app.require_subcommand(1, 1);

    auto* index = app.add_subcommand("index", "Build a PLAID or HNSW index from document embeddings");
    index->add_option("--embeddings", o.embeddings, "Document embeddings (PLEM)")->required();
    index->add_option("--out", o.out, "Index directory to write")->required();
    index->add_option("--type", o.type, "Index type")->check(CLI::IsMember({"plaid", "hnsw"}))->envname("LATESEARCH_TYPE");
    index->add_option("--nbits", o.nbits, "Residual bits per dimension")->check(CLI::IsMember({1, 2, 4}))->envname("LATESEARCH_NBITS");
    index->add_option("--nprobe", o.nprobe, "Default centroids probed per query token")->check(CLI::PositiveNumber)->envname("LATESEARCH_NPROBE");
    index->add_option("--kmeans-k", o.kmeans_k, "Number of centroids, or 'auto'")->envname("LATESEARCH_KMEANS_K");
    index->add_option("--pool-factor", o.pool_factor, "Pool document tokens by this factor first")->check(CLI::PositiveNumber)->envname("LATESEARCH_POOL_FACTOR");
    index->add_flag("--protect-first-token", o.protect_first_token, "Keep the first token out of pooling");
    index->add_option("--seed", o.seed, "RNG seed")->envname("LATESEARCH_SEED");
    AddThreads(index, o);
    AddNormalize(index, o);

    auto* search = app.add_subcommand("search", "Retrieve the top-k documents per query into a TREC run");
    search->add_option("--index", o.index, "Index directory")->required();
    search->add_option("--queries", o.queries, "Query embeddings (PLEM)")->required();
    search->add_option("--out", o.out, "Run file to write")->required();
    search->add_option("--k", o.k, "Documents per query")->check(CLI::PositiveNumber)->envname("LATESEARCH_K");
    search->add_option("--nprobe", o.nprobe, "PLAID: centroids probed per query token")->check(CLI::PositiveNumber)->envname("LATESEARCH_NPROBE");
    search->add_option("--k-token", o.k_token, "HNSW: token neighbors per query token")->check(CLI::PositiveNumber)->envname("LATESEARCH_K_TOKEN");
    AddThreads(search, o);
    AddNormalize(search, o);

    auto* rerank = app.add_subcommand("rerank", "Rescore a candidate run with exact MaxSim");
    rerank->add_option("--queries", o.queries, "Query embeddings (PLEM)")->required();
    rerank->add_option("--run", o.run, "Candidate run (TREC)")->required();
    rerank->add_option("--embeddings", o.embeddings, "Document embeddings (PLEM)")->required();
    rerank->add_option("--out", o.out, "Run file to write")->required();
    AddThreads(rerank, o);
    AddNormalize(rerank, o);

    auto* pool = app.add_subcommand("pool", "Pool document token embeddings");
    pool->add_option("--embeddings", o.embeddings, "Document embeddings (PLEM)")->required();
    pool->add_option("--out", o.out, "Pooled PLEM file to write")->required();
    pool->add_option("--pool-factor", o.pool_factor, "Target token reduction factor")->required()->check(CLI::PositiveNumber);
    pool->add_flag("--protect-first-token", o.protect_first_token, "Keep the first token out of pooling");
    AddThreads(pool, o);
    AddNormalize(pool, o);

    auto* evaluate = app.add_subcommand("evaluate", "Compute IR metrics for a run against qrels");
    evaluate->add_option("--run", o.run, "Run file (TREC)")->required();
    evaluate->add_option("--qrels", o.qrels, "Qrels file (TREC)")->required();
    evaluate->add_option("--metrics", o.metrics, std::string("Comma-separated metrics: ") + std::string(eval::kMetricGrammar))
        ->envname("LATESEARCH_METRICS");

    auto* demo = app.add_subcommand("losses-demo", "Report gradient checks for the training losses");
    demo->add_option("--seed", o.seed, "RNG seed")->envname("LATESEARCH_SEED");

    auto* info = app.add_subcommand("info", "Describe an index directory or a PLEM file");
    info->add_option("--index", o.index, "Index directory");
    info->add_option("--embeddings", o.embeddings, "PLEM file");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    SetThreadCount(o.threads);
    try {
        if (*index) {
            return CmdIndex(o, out, err);
        }
        if (*search) {
            return CmdSearch(o, out, err);
        }
        if (*rerank) {
            return CmdRerank(o, out, err);
        }
        if (*pool) {
            return CmdPool(o, out, err);
        }
        if (*evaluate) {
            return CmdEvaluate(o, out, err);
        }
        if (*demo) {
            out << LossesDemo(o.seed).dump() << "\n";
            return kExitOk;
        }
        if (*info) {
            return CmdInfo(o, out, err);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        if (e.code() == ErrorCode::kUnknownMetric) {
            err << "supported metrics: " << eval::kMetricGrammar << "\n";
        }
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitInternal;
}

}  // namespace latesearch::cli

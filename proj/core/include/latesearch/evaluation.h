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
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "latesearch/scoring.h"

namespace latesearch::eval {

/// query id -> doc id -> graded relevance.
using Qrels = std::map<std::string, std::map<std::string, int>>;

/// query id -> ranked (doc id, score), best first.
using Run = std::map<std::string, std::vector<ScoredDoc>>;

struct QrelsLoad {
    Qrels qrels;
    /// (qid, did) pairs seen more than once; the last grade wins.
    std::size_t duplicate_lines{0};
};

/// TREC qrels: "qid iter did grade" per line. Throws ParseError naming the
/// 1-based line.
QrelsLoad
LoadQrels(const std::filesystem::path& path);

QrelsLoad
ParseQrels(std::istream& in);

/// TREC run: "qid Q0 did rank score tag". Entries are ordered by the rank
/// column. Throws ParseError, including on a doc repeated within a query.
Run
LoadRun(const std::filesystem::path& path);

Run
ParseRun(std::istream& in);

/// Writes ranks from 1 and scores with six decimals; query ids ascending.
void
WriteRun(const Run& run, const std::filesystem::path& path, std::string_view tag);

void
WriteRun(const Run& run, std::ostream& out, std::string_view tag);

struct MetricResult {
    std::map<std::string, double> per_query;
    double mean{0.0};
};

/// DCG@k with linear gain grade / log2(rank + 1), normalized by the ideal
/// ordering of the judged documents.
MetricResult
NdcgAtK(const Run& run, const Qrels& qrels, std::size_t k);

/// Mean average precision, grades > 0 count as relevant. Unretrieved
/// relevant documents add zero precision but stay in the denominator.
MetricResult
AveragePrecision(const Run& run, const Qrels& qrels);

MetricResult
RecallAtK(const Run& run, const Qrels& qrels, std::size_t k);

enum class MetricKind {
    kMap,
    kNdcg,
    kRecall,
};

struct MetricSpec {
    MetricKind kind;
    std::size_t k{0};
    std::string name;
};

/// Grammar: "map" | "ndcg@K" | "recall@K" with integer K >= 1.
/// Throws UnknownMetric with the supported grammar in the message.
MetricSpec
ParseMetric(std::string_view name);

/// Mean value per requested metric name.
std::map<std::string, double>
Evaluate(const Run& run, const Qrels& qrels, const std::vector<std::string>& metrics);

inline constexpr std::string_view kMetricGrammar = "map | ndcg@K | recall@K (K >= 1)";

}  // namespace latesearch::eval

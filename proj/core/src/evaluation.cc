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

#include "latesearch/evaluation.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "latesearch/status.h"

namespace latesearch::eval {

namespace {

std::vector<std::string_view>
SplitWhitespace(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) {
            ++i;
        }
        const std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) {
            ++i;
        }
        if (i > start) {
            out.push_back(line.substr(start, i - start));
        }
    }
    return out;
}

template <typename T>
bool
ParseNumber(std::string_view s, T& out) {
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && ptr == end;
}

[[noreturn]] void
ParseFail(std::size_t line_no, const std::string& why) {
    Throw(ErrorCode::kParseError, "line " + std::to_string(line_no) + ": " + why);
}

std::ifstream
OpenText(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        Throw(ErrorCode::kIo, "cannot open " + path.string());
    }
    return in;
}

// Queries that appear in the run and have at least one positive judgment.
std::vector<std::string>
JudgedQueries(const Run& run, const Qrels& qrels) {
    std::vector<std::string> out;
    for (const auto& [qid, docs] : run) {
        auto it = qrels.find(qid);
        if (it == qrels.end()) {
            continue;
        }
        const bool any = std::any_of(it->second.begin(), it->second.end(),
                                     [](const auto& kv) { return kv.second > 0; });
        if (any) {
            out.push_back(qid);
        }
    }
    if (out.empty()) {
        Throw(ErrorCode::kNoJudgedQueries, "no run query has a positive judgment");
    }
    return out;
}

int
Grade(const std::map<std::string, int>& judged, const std::string& doc) {
    auto it = judged.find(doc);
    return it == judged.end() ? 0 : it->second;
}

template <typename PerQuery>
MetricResult
Aggregate(const Run& run, const Qrels& qrels, const PerQuery& per_query) {
    MetricResult out;
    double sum = 0.0;
    for (const auto& qid : JudgedQueries(run, qrels)) {
        const double v = per_query(run.at(qid), qrels.at(qid));
        out.per_query[qid] = v;
        sum += v;
    }
    out.mean = sum / static_cast<double>(out.per_query.size());
    return out;
}

}  // namespace

QrelsLoad
ParseQrels(std::istream& in) {
    QrelsLoad out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto fields = SplitWhitespace(line);
        if (fields.empty()) {
            continue;
        }
        if (fields.size() != 4) {
            ParseFail(line_no, "expected 'qid iter did grade'");
        }
        int grade = 0;
        if (!ParseNumber(fields[3], grade) || grade < 0) {
            ParseFail(line_no, "grade must be a non-negative integer");
        }
        auto& judged = out.qrels[std::string(fields[0])];
        auto [it, inserted] = judged.insert_or_assign(std::string(fields[2]), grade);
        if (!inserted) {
            ++out.duplicate_lines;
        }
    }
    return out;
}

QrelsLoad
LoadQrels(const std::filesystem::path& path) {
    auto in = OpenText(path);
    return ParseQrels(in);
}

Run
ParseRun(std::istream& in) {
    struct Row {
        std::size_t rank;
        std::size_t line;
        ScoredDoc doc;
    };
    std::map<std::string, std::vector<Row>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto f = SplitWhitespace(line);
        if (f.empty()) {
            continue;
        }
        if (f.size() != 6) {
            ParseFail(line_no, "expected 'qid Q0 did rank score tag'");
        }
        std::size_t rank = 0;
        if (!ParseNumber(f[3], rank)) {
            ParseFail(line_no, "rank must be an integer");
        }
        double score = 0.0;
        if (!ParseNumber(f[4], score) || !std::isfinite(score)) {
            ParseFail(line_no, "score must be a finite number");
        }
        rows[std::string(f[0])].push_back({rank, line_no, {std::string(f[2]), score}});
    }
    Run run;
    for (auto& [qid, list] : rows) {
        std::stable_sort(list.begin(), list.end(), [](const Row& a, const Row& b) { return a.rank < b.rank; });
        std::unordered_set<std::string> seen;
        auto& docs = run[qid];
        for (auto& r : list) {
            if (!seen.insert(r.doc.doc_id).second) {
                ParseFail(r.line, "document '" + r.doc.doc_id + "' repeated for query '" + qid + "'");
            }
            docs.push_back(std::move(r.doc));
        }
    }
    return run;
}

Run
LoadRun(const std::filesystem::path& path) {
    auto in = OpenText(path);
    return ParseRun(in);
}

void
WriteRun(const Run& run, std::ostream& out, std::string_view tag) {
    char score[64];
    for (const auto& [qid, docs] : run) {
        std::size_t rank = 1;
        for (const auto& d : docs) {
            std::snprintf(score, sizeof(score), "%.6f", d.score);
            out << qid << " Q0 " << d.doc_id << ' ' << rank++ << ' ' << score << ' ' << tag << '\n';
        }
    }
}

void
WriteRun(const Run& run, const std::filesystem::path& path, std::string_view tag) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        Throw(ErrorCode::kIo, "cannot open for writing: " + path.string());
    }
    WriteRun(run, out, tag);
    out.flush();
    if (!out) {
        Throw(ErrorCode::kIo, "write failed: " + path.string());
    }
}

MetricResult
NdcgAtK(const Run& run, const Qrels& qrels, std::size_t k) {
    if (k == 0) {
        Throw(ErrorCode::kInvalidArgument, "ndcg cutoff must be >= 1");
    }
    return Aggregate(run, qrels, [k](const std::vector<ScoredDoc>& ranked, const std::map<std::string, int>& judged) {
        double dcg = 0.0;
        for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) {
            dcg += Grade(judged, ranked[i].doc_id) / std::log2(static_cast<double>(i) + 2.0);
        }
        std::vector<int> ideal;
        for (const auto& [doc, g] : judged) {
            if (g > 0) {
                ideal.push_back(g);
            }
        }
        std::sort(ideal.begin(), ideal.end(), std::greater<>());
        double idcg = 0.0;
        for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i) {
            idcg += ideal[i] / std::log2(static_cast<double>(i) + 2.0);
        }
        return dcg / idcg;
    });
}

MetricResult
AveragePrecision(const Run& run, const Qrels& qrels) {
    return Aggregate(run, qrels, [](const std::vector<ScoredDoc>& ranked, const std::map<std::string, int>& judged) {
        std::size_t relevant = 0;
        for (const auto& [doc, g] : judged) {
            relevant += g > 0 ? 1 : 0;
        }
        std::size_t hits = 0;
        double sum = 0.0;
        for (std::size_t i = 0; i < ranked.size(); ++i) {
            if (Grade(judged, ranked[i].doc_id) > 0) {
                ++hits;
                sum += static_cast<double>(hits) / static_cast<double>(i + 1);
            }
        }
        return sum / static_cast<double>(relevant);
    });
}

MetricResult
RecallAtK(const Run& run, const Qrels& qrels, std::size_t k) {
    if (k == 0) {
        Throw(ErrorCode::kInvalidArgument, "recall cutoff must be >= 1");
    }
    return Aggregate(run, qrels, [k](const std::vector<ScoredDoc>& ranked, const std::map<std::string, int>& judged) {
        std::size_t relevant = 0;
        for (const auto& [doc, g] : judged) {
            relevant += g > 0 ? 1 : 0;
        }
        std::size_t hits = 0;
        for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) {
            hits += Grade(judged, ranked[i].doc_id) > 0 ? 1 : 0;
        }
        return static_cast<double>(hits) / static_cast<double>(relevant);
    });
}

MetricSpec
ParseMetric(std::string_view name) {
    auto unknown = [&]() -> MetricSpec {
        Throw(ErrorCode::kUnknownMetric,
              "'" + std::string(name) + "'; supported: " + std::string(kMetricGrammar));
    };
    if (name == "map") {
        return {MetricKind::kMap, 0, std::string(name)};
    }
    const auto at = name.find('@');
    if (at == std::string_view::npos) {
        return unknown();
    }
    const auto base = name.substr(0, at);
    const auto cutoff = name.substr(at + 1);
    std::size_t k = 0;
    if (cutoff.empty() || !std::all_of(cutoff.begin(), cutoff.end(), [](char c) { return c >= '0' && c <= '9'; }) ||
        !ParseNumber(cutoff, k) || k == 0) {
        return unknown();
    }
    if (base == "ndcg") {
        return {MetricKind::kNdcg, k, std::string(name)};
    }
    if (base == "recall") {
        return {MetricKind::kRecall, k, std::string(name)};
    }
    return unknown();
}

std::map<std::string, double>
Evaluate(const Run& run, const Qrels& qrels, const std::vector<std::string>& metrics) {
    std::vector<MetricSpec> specs;
    for (const auto& m : metrics) {
        specs.push_back(ParseMetric(m));
    }
    std::map<std::string, double> out;
    for (const auto& s : specs) {
        switch (s.kind) {
            case MetricKind::kMap: out[s.name] = AveragePrecision(run, qrels).mean; break;
            case MetricKind::kNdcg: out[s.name] = NdcgAtK(run, qrels, s.k).mean; break;
            case MetricKind::kRecall: out[s.name] = RecallAtK(run, qrels, s.k).mean; break;
        }
    }
    return out;
}

}  // namespace latesearch::eval

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

#include "latesearch/losses.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "latesearch/status.h"

namespace latesearch::losses {

namespace {

using Eigen::Index;

struct PairScore {
    double score;
    std::vector<Index> argmax;  // best doc token per query token
};

PairScore
ScorePair(const Matrix& q, const Matrix& d) {
    PairScore out{0.0, std::vector<Index>(static_cast<std::size_t>(q.rows()), 0)};
    for (Index a = 0; a < q.rows(); ++a) {
        double best = -std::numeric_limits<double>::infinity();
        Index arg = 0;
        for (Index b = 0; b < d.rows(); ++b) {
            const double s = q.row(a).dot(d.row(b));
            if (s > best) {
                best = s;
                arg = b;
            }
        }
        out.argmax[static_cast<std::size_t>(a)] = arg;
        out.score += best;
    }
    return out;
}

double
LogSumExp(const Eigen::RowVectorXd& row) {
    // log1p over the non-max terms keeps relative precision when they are tiny.
    Eigen::Index arg = 0;
    const double m = row.maxCoeff(&arg);
    double rest = 0.0;
    for (Eigen::Index j = 0; j < row.size(); ++j) {
        if (j != arg) {
            rest += std::exp(row(j) - m);
        }
    }
    return m + std::log1p(rest);
}

/// -log softmax(row)[col] without cancelling against a large row maximum.
double
NegLogSoftmax(const Eigen::RowVectorXd& row, Eigen::Index col) {
    Eigen::Index arg = 0;
    const double m = row.maxCoeff(&arg);
    double rest = 0.0;
    for (Eigen::Index j = 0; j < row.size(); ++j) {
        if (j != arg) {
            rest += std::exp(row(j) - m);
        }
    }
    return (m - row(col)) + std::log1p(rest);
}

Index
CheckSequences(const std::vector<Matrix>& seqs, Index dim, const char* what) {
    for (const auto& m : seqs) {
        if (m.rows() == 0) {
            Throw(ErrorCode::kDegenerateBatch, std::string(what) + " with no tokens");
        }
        if (dim < 0) {
            dim = m.cols();
        } else if (m.cols() != dim) {
            Throw(ErrorCode::kDimMismatch, std::string(what) + " dim differs from the batch");
        }
        if (!m.allFinite()) {
            Throw(ErrorCode::kDegenerateBatch, std::string(what) + " holds non-finite values");
        }
    }
    return dim;
}

void
ValidateContrastive(const ContrastiveBatch& batch) {
    const std::size_t b = batch.queries.size();
    if (b == 0 || batch.doc_groups.size() != b) {
        Throw(ErrorCode::kDegenerateBatch, "need one document group per query");
    }
    const std::size_t g = batch.group_size();
    if (g == 0) {
        Throw(ErrorCode::kDegenerateBatch, "document groups are empty");
    }
    for (const auto& group : batch.doc_groups) {
        if (group.size() != g) {
            Throw(ErrorCode::kDegenerateBatch, "document groups differ in size");
        }
    }
    if (b * g < 2) {
        Throw(ErrorCode::kDegenerateBatch, "batch has no negatives");
    }
    if (!(batch.temperature > 0.0) || !std::isfinite(batch.temperature)) {
        Throw(ErrorCode::kDegenerateBatch, "temperature must be positive");
    }
    Index dim = CheckSequences(batch.queries, -1, "query");
    for (const auto& group : batch.doc_groups) {
        dim = CheckSequences(group, dim, "document");
    }
}

void
ValidateDistill(const DistillBatch& batch) {
    const std::size_t b = batch.queries.size();
    if (b == 0 || batch.docs.size() != b) {
        Throw(ErrorCode::kDegenerateBatch, "need one candidate list per query");
    }
    const std::size_t n_way = batch.docs.front().size();
    if (n_way < 2) {
        Throw(ErrorCode::kDegenerateBatch, "distillation needs at least two candidates per query");
    }
    for (const auto& docs : batch.docs) {
        if (docs.size() != n_way) {
            Throw(ErrorCode::kDegenerateBatch, "candidate lists differ in size");
        }
    }
    if (batch.teacher_scores.rows() != static_cast<Index>(b) ||
        batch.teacher_scores.cols() != static_cast<Index>(n_way)) {
        Throw(ErrorCode::kDegenerateBatch, "teacher scores must be B x n_way");
    }
    if (!batch.teacher_scores.allFinite()) {
        Throw(ErrorCode::kDegenerateBatch, "teacher scores must be finite");
    }
    Index dim = CheckSequences(batch.queries, -1, "query");
    for (const auto& docs : batch.docs) {
        dim = CheckSequences(docs, dim, "document");
    }
}

// Scores every query against every flattened document, keeping argmaxes.
std::vector<std::vector<PairScore>>
ScoreAll(const ContrastiveBatch& batch) {
    std::vector<std::vector<PairScore>> out(batch.queries.size());
    for (std::size_t i = 0; i < batch.queries.size(); ++i) {
        for (const auto& group : batch.doc_groups) {
            for (const auto& doc : group) {
                out[i].push_back(ScorePair(batch.queries[i], doc));
            }
        }
    }
    return out;
}

double
ContrastiveLoss(const Eigen::MatrixXd& scores, std::size_t g) {
    double loss = 0.0;
    for (Index i = 0; i < scores.rows(); ++i) {
        loss += NegLogSoftmax(scores.row(i), i * static_cast<Index>(g));
    }
    return loss / static_cast<double>(scores.rows());
}

// Accumulates dL/dS(i, j) * dS/d(query i, doc j) into the gradient slots.
void
Backprop(const Matrix& q, const Matrix& d, const PairScore& ps, double coeff, Matrix& gq, Matrix& gd) {
    for (Index a = 0; a < q.rows(); ++a) {
        const Index b = ps.argmax[static_cast<std::size_t>(a)];
        gq.row(a) += coeff * d.row(b);
        gd.row(b) += coeff * q.row(a);
    }
}

double
DistillLossFromScores(const Eigen::MatrixXd& student, const Eigen::MatrixXd& teacher) {
    double loss = 0.0;
    for (Index i = 0; i < student.rows(); ++i) {
        const Eigen::RowVectorXd log_p = teacher.row(i).array() - LogSumExp(teacher.row(i));
        const Eigen::RowVectorXd log_q = student.row(i).array() - LogSumExp(student.row(i));
        for (Index j = 0; j < student.cols(); ++j) {
            const double p = std::exp(log_p(j));
            if (p > 0.0) {
                loss += p * (log_p(j) - log_q(j));
            }
        }
    }
    return loss / static_cast<double>(student.rows());
}

}  // namespace

ContrastiveOutput
ContrastiveForward(const ContrastiveBatch& batch) {
    ValidateContrastive(batch);
    const auto all = ScoreAll(batch);
    const auto b = static_cast<Index>(batch.queries.size());
    const auto n = static_cast<Index>(all.front().size());
    ContrastiveOutput out;
    out.scores.resize(b, n);
    for (Index i = 0; i < b; ++i) {
        for (Index j = 0; j < n; ++j) {
            out.scores(i, j) = all[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].score / batch.temperature;
        }
    }
    out.loss = ContrastiveLoss(out.scores, batch.group_size());
    return out;
}

ContrastiveGradients
ContrastiveGrad(const ContrastiveBatch& batch) {
    ValidateContrastive(batch);
    const auto all = ScoreAll(batch);
    const std::size_t b = batch.queries.size();
    const std::size_t g = batch.group_size();
    const std::size_t n = b * g;

    Eigen::MatrixXd scores(static_cast<Index>(b), static_cast<Index>(n));
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            scores(static_cast<Index>(i), static_cast<Index>(j)) = all[i][j].score / batch.temperature;
        }
    }

    ContrastiveGradients out;
    out.loss = ContrastiveLoss(scores, g);
    for (const auto& q : batch.queries) {
        out.queries.push_back(Matrix::Zero(q.rows(), q.cols()));
    }
    for (const auto& group : batch.doc_groups) {
        auto& slots = out.doc_groups.emplace_back();
        for (const auto& d : group) {
            slots.push_back(Matrix::Zero(d.rows(), d.cols()));
        }
    }

    for (std::size_t i = 0; i < b; ++i) {
        const auto row = scores.row(static_cast<Index>(i));
        const Eigen::RowVectorXd softmax = (row.array() - LogSumExp(row)).exp();
        for (std::size_t j = 0; j < n; ++j) {
            double dl_ds = softmax(static_cast<Index>(j));
            if (j == i * g) {
                dl_ds -= 1.0;
            }
            const double coeff = dl_ds / static_cast<double>(b) / batch.temperature;
            Backprop(batch.queries[i], batch.doc_groups[j / g][j % g], all[i][j], coeff, out.queries[i],
                     out.doc_groups[j / g][j % g]);
        }
    }
    return out;
}

double
DistillForward(const DistillBatch& batch) {
    ValidateDistill(batch);
    const auto b = static_cast<Index>(batch.queries.size());
    const auto n = batch.teacher_scores.cols();
    Eigen::MatrixXd student(b, n);
    for (Index i = 0; i < b; ++i) {
        for (Index j = 0; j < n; ++j) {
            student(i, j) = ScorePair(batch.queries[static_cast<std::size_t>(i)],
                                      batch.docs[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)])
                                .score;
        }
    }
    return DistillLossFromScores(student, batch.teacher_scores);
}

DistillGradients
DistillGrad(const DistillBatch& batch) {
    ValidateDistill(batch);
    const std::size_t b = batch.queries.size();
    const std::size_t n = static_cast<std::size_t>(batch.teacher_scores.cols());
    std::vector<std::vector<PairScore>> pairs(b);
    Eigen::MatrixXd student(static_cast<Index>(b), static_cast<Index>(n));
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            pairs[i].push_back(ScorePair(batch.queries[i], batch.docs[i][j]));
            student(static_cast<Index>(i), static_cast<Index>(j)) = pairs[i][j].score;
        }
    }

    DistillGradients out;
    out.loss = DistillLossFromScores(student, batch.teacher_scores);
    for (std::size_t i = 0; i < b; ++i) {
        const auto& q = batch.queries[i];
        out.queries.push_back(Matrix::Zero(q.rows(), q.cols()));
        auto& slots = out.docs.emplace_back();
        for (const auto& d : batch.docs[i]) {
            slots.push_back(Matrix::Zero(d.rows(), d.cols()));
        }
    }
    for (std::size_t i = 0; i < b; ++i) {
        const auto srow = student.row(static_cast<Index>(i));
        const auto trow = batch.teacher_scores.row(static_cast<Index>(i));
        const Eigen::RowVectorXd q_dist = (srow.array() - LogSumExp(srow)).exp();
        const Eigen::RowVectorXd p_dist = (trow.array() - LogSumExp(trow)).exp();
        for (std::size_t j = 0; j < n; ++j) {
            const double coeff = (q_dist(static_cast<Index>(j)) - p_dist(static_cast<Index>(j))) / static_cast<double>(b);
            Backprop(batch.queries[i], batch.docs[i][j], pairs[i][j], coeff, out.queries[i], out.docs[i][j]);
        }
    }
    return out;
}

ContrastiveBatch
GatherShards(std::span<const ContrastiveBatch> shards) {
    if (shards.empty()) {
        Throw(ErrorCode::kShapeMismatch, "no shards to gather");
    }
    ContrastiveBatch out;
    out.temperature = shards.front().temperature;
    const std::size_t g = shards.front().group_size();
    Index dim = -1;
    for (const auto& shard : shards) {
        if (shard.group_size() != g || shard.temperature != out.temperature ||
            shard.doc_groups.size() != shard.queries.size()) {
            Throw(ErrorCode::kShapeMismatch, "shards disagree on group size or temperature");
        }
        for (const auto& group : shard.doc_groups) {
            if (group.size() != g) {
                Throw(ErrorCode::kShapeMismatch, "ragged document groups in shard");
            }
        }
        auto check_dim = [&](const Matrix& m) {
            if (dim < 0) {
                dim = m.cols();
            } else if (m.cols() != dim) {
                Throw(ErrorCode::kShapeMismatch, "shards disagree on embedding dim");
            }
        };
        for (const auto& q : shard.queries) {
            check_dim(q);
            out.queries.push_back(q);
        }
        for (const auto& group : shard.doc_groups) {
            for (const auto& d : group) {
                check_dim(d);
            }
            out.doc_groups.push_back(group);
        }
    }
    return out;
}

namespace {

ContrastiveBatch
EncodeRange(const ToyEncoder& encoder, const RawContrastiveBatch& inputs, std::size_t begin, std::size_t end) {
    ContrastiveBatch out;
    out.temperature = inputs.temperature;
    for (std::size_t i = begin; i < end; ++i) {
        out.queries.push_back(encoder.Encode(inputs.queries[i]));
        auto& group = out.doc_groups.emplace_back();
        for (const auto& d : inputs.doc_groups[i]) {
            group.push_back(encoder.Encode(d));
        }
    }
    return out;
}

void
CheckEncoderInputs(const ToyEncoder& encoder, const RawContrastiveBatch& inputs) {
    if (!encoder.weight.allFinite()) {
        Throw(ErrorCode::kInvalidArgument, "encoder weight holds non-finite values");
    }
    auto check = [&](const Matrix& x) {
        if (x.cols() != encoder.weight.rows()) {
            Throw(ErrorCode::kDimMismatch, "input feature dim does not match the encoder");
        }
    };
    for (const auto& q : inputs.queries) {
        check(q);
    }
    for (const auto& group : inputs.doc_groups) {
        for (const auto& d : group) {
            check(d);
        }
    }
}

}  // namespace

EncoderGradient
FullBatchRun(const ToyEncoder& encoder, const RawContrastiveBatch& inputs) {
    CheckEncoderInputs(encoder, inputs);
    const auto embedded = EncodeRange(encoder, inputs, 0, inputs.queries.size());
    const auto grads = ContrastiveGrad(embedded);
    EncoderGradient out{grads.loss, Eigen::MatrixXd::Zero(encoder.weight.rows(), encoder.weight.cols())};
    for (std::size_t i = 0; i < inputs.queries.size(); ++i) {
        out.weight_grad += encoder.Backward(inputs.queries[i], grads.queries[i]);
        for (std::size_t j = 0; j < inputs.doc_groups[i].size(); ++j) {
            out.weight_grad += encoder.Backward(inputs.doc_groups[i][j], grads.doc_groups[i][j]);
        }
    }
    return out;
}

EncoderGradient
GradCacheRun(const ToyEncoder& encoder, const RawContrastiveBatch& inputs, std::size_t chunk_size) {
    if (chunk_size == 0) {
        Throw(ErrorCode::kInvalidArgument, "chunk_size must be >= 1");
    }
    CheckEncoderInputs(encoder, inputs);
    const std::size_t b = inputs.queries.size();

    // Pass 1: embeddings only, chunk by chunk.
    ContrastiveBatch embedded;
    embedded.temperature = inputs.temperature;
    for (std::size_t begin = 0; begin < b; begin += chunk_size) {
        auto chunk = EncodeRange(encoder, inputs, begin, std::min(b, begin + chunk_size));
        for (auto& q : chunk.queries) {
            embedded.queries.push_back(std::move(q));
        }
        for (auto& group : chunk.doc_groups) {
            embedded.doc_groups.push_back(std::move(group));
        }
    }
    const auto cached = ContrastiveGrad(embedded);

    // Pass 2: re-encode each chunk and chain the cached embedding gradients.
    EncoderGradient out{cached.loss, Eigen::MatrixXd::Zero(encoder.weight.rows(), encoder.weight.cols())};
    for (std::size_t begin = 0; begin < b; begin += chunk_size) {
        const std::size_t end = std::min(b, begin + chunk_size);
        const auto chunk = EncodeRange(encoder, inputs, begin, end);
        Eigen::MatrixXd chunk_grad = Eigen::MatrixXd::Zero(encoder.weight.rows(), encoder.weight.cols());
        for (std::size_t i = begin; i < end; ++i) {
            const auto& local = chunk.queries[i - begin];
            if (local.rows() != cached.queries[i].rows()) {
                Throw(ErrorCode::kShapeMismatch, "re-encoded chunk changed shape");
            }
            chunk_grad += encoder.Backward(inputs.queries[i], cached.queries[i]);
            for (std::size_t j = 0; j < inputs.doc_groups[i].size(); ++j) {
                chunk_grad += encoder.Backward(inputs.doc_groups[i][j], cached.doc_groups[i][j]);
            }
        }
        out.weight_grad += chunk_grad;
    }
    return out;
}

namespace {

double
RelativeError(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    return std::abs(analytic - numeric) / denom;
}

template <typename Loss>
void
ProbeMatrix(Matrix& m, const Matrix& analytic, double eps, const Loss& loss, GradientCheck& report) {
    for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c) {
            const double saved = m(r, c);
            m(r, c) = saved + eps;
            const double up = loss();
            m(r, c) = saved - eps;
            const double down = loss();
            m(r, c) = saved;
            const double numeric = (up - down) / (2.0 * eps);
            report.max_rel_error = std::max(report.max_rel_error, RelativeError(analytic(r, c), numeric));
            ++report.coordinates;
        }
    }
}

}  // namespace

GradientCheck
CheckContrastiveGradient(const ContrastiveBatch& batch, double eps) {
    const auto grads = ContrastiveGrad(batch);
    ContrastiveBatch probe = batch;
    auto loss = [&]() { return ContrastiveForward(probe).loss; };
    GradientCheck report;
    for (std::size_t i = 0; i < probe.queries.size(); ++i) {
        ProbeMatrix(probe.queries[i], grads.queries[i], eps, loss, report);
    }
    for (std::size_t i = 0; i < probe.doc_groups.size(); ++i) {
        for (std::size_t j = 0; j < probe.doc_groups[i].size(); ++j) {
            ProbeMatrix(probe.doc_groups[i][j], grads.doc_groups[i][j], eps, loss, report);
        }
    }
    return report;
}

GradientCheck
CheckDistillGradient(const DistillBatch& batch, double eps) {
    const auto grads = DistillGrad(batch);
    DistillBatch probe = batch;
    auto loss = [&]() { return DistillForward(probe); };
    GradientCheck report;
    for (std::size_t i = 0; i < probe.queries.size(); ++i) {
        ProbeMatrix(probe.queries[i], grads.queries[i], eps, loss, report);
        for (std::size_t j = 0; j < probe.docs[i].size(); ++j) {
            ProbeMatrix(probe.docs[i][j], grads.docs[i][j], eps, loss, report);
        }
    }
    return report;
}

}  // namespace latesearch::losses

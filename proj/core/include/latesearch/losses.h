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

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <vector>

namespace latesearch::losses {

/// Token embeddings in double precision, one token per row.
using Matrix = Eigen::MatrixXd;

/// B queries, each with a group of g documents: its positive first, then
/// hard negatives. Every document in the batch is scored against every
/// query; document j of group i sits at column i * g + j.
struct ContrastiveBatch {
    std::vector<Matrix> queries;
    std::vector<std::vector<Matrix>> doc_groups;
    double temperature{1.0};

    std::size_t
    group_size() const noexcept {
        return doc_groups.empty() ? 0 : doc_groups.front().size();
    }
};

struct ContrastiveOutput {
    double loss{0.0};
    Eigen::MatrixXd scores;  // B x (B * g), already divided by temperature
};

/// Gradients w.r.t. every token embedding, shaped like the inputs.
struct ContrastiveGradients {
    double loss{0.0};
    std::vector<Matrix> queries;
    std::vector<std::vector<Matrix>> doc_groups;
};

/// Mean over queries of -log softmax(row)[positive]. Throws DegenerateBatch.
ContrastiveOutput
ContrastiveForward(const ContrastiveBatch& batch);

/// Analytic gradient. The max inside MaxSim routes to the best document
/// token, lowest index on ties.
ContrastiveGradients
ContrastiveGrad(const ContrastiveBatch& batch);

/// Per query, n_way candidate documents with teacher scores (B x n_way).
struct DistillBatch {
    std::vector<Matrix> queries;
    std::vector<std::vector<Matrix>> docs;
    Eigen::MatrixXd teacher_scores;
};

struct DistillGradients {
    double loss{0.0};
    std::vector<Matrix> queries;
    std::vector<std::vector<Matrix>> docs;
};

/// Mean over queries of KL(softmax(teacher) || softmax(student MaxSim)).
/// Throws DegenerateBatch.
double
DistillForward(const DistillBatch& batch);

DistillGradients
DistillGrad(const DistillBatch& batch);

/// Concatenates per-device batches in shard order. Throws ShapeMismatch when
/// group sizes, dims or temperatures differ.
ContrastiveBatch
GatherShards(std::span<const ContrastiveBatch> shards);

/// Linear stand-in for a sequence encoder: embeddings = features * weight.
struct ToyEncoder {
    Eigen::MatrixXd weight;  // d_in x d_out

    Matrix
    Encode(const Matrix& features) const {
        return features * weight;
    }

    /// Weight gradient contribution of one sequence given dL/d(embeddings).
    Eigen::MatrixXd
    Backward(const Matrix& features, const Matrix& embedding_grad) const {
        return features.transpose() * embedding_grad;
    }
};

struct EncoderGradient {
    double loss{0.0};
    Eigen::MatrixXd weight_grad;
};

/// Raw inputs (token features) shaped like ContrastiveBatch.
using RawContrastiveBatch = ContrastiveBatch;

/// Encodes the whole batch at once and backpropagates in one pass.
EncoderGradient
FullBatchRun(const ToyEncoder& encoder, const RawContrastiveBatch& inputs);

/// Two-pass cached-gradient protocol: embed every chunk of `chunk_size`
/// examples (query plus its group) without keeping encoder state, take the
/// loss and embedding gradients on the full score matrix, then re-encode
/// chunk by chunk and chain the cached embedding gradients into the weights.
EncoderGradient
GradCacheRun(const ToyEncoder& encoder, const RawContrastiveBatch& inputs, std::size_t chunk_size);

/// Largest relative error between analytic and central finite-difference
/// gradients, measured over every token coordinate.
struct GradientCheck {
    double max_rel_error{0.0};
    std::size_t coordinates{0};
};

GradientCheck
CheckContrastiveGradient(const ContrastiveBatch& batch, double eps = 1e-5);

GradientCheck
CheckDistillGradient(const DistillBatch& batch, double eps = 1e-5);

}  // namespace latesearch::losses

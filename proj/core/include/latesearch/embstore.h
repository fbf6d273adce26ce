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
#include <filesystem>
#include <initializer_list>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace latesearch {

/// Token embeddings of one sequence, stored row-major as 32-bit floats.
class TokenMatrix {
public:
    TokenMatrix() = default;

    /// Zero-filled n_tokens x dim matrix.
    TokenMatrix(std::size_t n_tokens, std::size_t dim);

    TokenMatrix(std::size_t n_tokens, std::size_t dim, std::vector<float> values);

    static TokenMatrix
    FromRows(std::initializer_list<std::initializer_list<float>> rows);

    static TokenMatrix
    FromRows(const std::vector<std::vector<float>>& rows);

    std::size_t
    n_tokens() const noexcept {
        return n_tokens_;
    }

    std::size_t
    dim() const noexcept {
        return dim_;
    }

    bool
    empty() const noexcept {
        return n_tokens_ == 0;
    }

    std::span<const float>
    row(std::size_t i) const noexcept {
        return {values_.data() + i * dim_, dim_};
    }

    std::span<float>
    row(std::size_t i) noexcept {
        return {values_.data() + i * dim_, dim_};
    }

    const std::vector<float>&
    values() const noexcept {
        return values_;
    }

    std::vector<float>&
    values() noexcept {
        return values_;
    }

    /// Bit-exact comparison (NaN payloads and signed zeros included).
    friend bool
    operator==(const TokenMatrix& a, const TokenMatrix& b);

private:
    std::size_t n_tokens_{0};
    std::size_t dim_{0};
    std::vector<float> values_;
};

enum class EmbeddingKind : std::uint8_t {
    kDocument = 0,
    kQuery = 1,
};

std::string_view
EmbeddingKindName(EmbeddingKind kind);

/// Ordered, id-addressable collection of token matrices sharing one dim.
/// Matrices with zero tokens are rejected.
class EmbeddingSet {
public:
    static constexpr std::size_t kMaxIdBytes = 65535;

    EmbeddingSet() = default;
    EmbeddingSet(EmbeddingKind kind, std::size_t dim);

    /// Throws DuplicateId, DimMismatch, EmptyMatrix or InvalidArgument (id
    /// longer than kMaxIdBytes).
    void
    Add(std::string id, TokenMatrix matrix);

    EmbeddingKind
    kind() const noexcept {
        return kind_;
    }

    std::size_t
    dim() const noexcept {
        return dim_;
    }

    std::size_t
    size() const noexcept {
        return ids_.size();
    }

    bool
    empty() const noexcept {
        return ids_.empty();
    }

    const std::vector<std::string>&
    ids() const noexcept {
        return ids_;
    }

    const std::vector<TokenMatrix>&
    matrices() const noexcept {
        return matrices_;
    }

    const std::string&
    id(std::size_t i) const {
        return ids_.at(i);
    }

    const TokenMatrix&
    matrix(std::size_t i) const {
        return matrices_.at(i);
    }

    /// nullptr when the id is unknown.
    const TokenMatrix*
    Find(std::string_view id) const;

    std::size_t
    total_tokens() const noexcept {
        return total_tokens_;
    }

    friend bool
    operator==(const EmbeddingSet& a, const EmbeddingSet& b);

private:
    EmbeddingKind kind_{EmbeddingKind::kDocument};
    std::size_t dim_{0};
    std::size_t total_tokens_{0};
    std::vector<std::string> ids_;
    std::vector<TokenMatrix> matrices_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

/// Divides every row by its Euclidean norm. Rows whose norm is already
/// within 1e-7 of one are copied unchanged so the operation is idempotent.
/// Throws ZeroRow if a row has norm below 1e-12.
TokenMatrix
NormalizeRows(const TokenMatrix& m);

EmbeddingSet
NormalizeAll(const EmbeddingSet& set);

/// True if every row norm is within `tol` of 1.
bool
IsNormalized(const TokenMatrix& m, double tol = 1e-3);

// PLEM-v1 container. Little-endian:
//   "PLEM" | version u32 = 1 | kind u8 | dim u32 | entry_count u64
//   per entry: id_len u16 | id bytes | n_tokens u32 | n_tokens*dim f32
inline constexpr std::uint32_t kPlemVersion = 1;

void
WriteEmbeddings(const EmbeddingSet& set, const std::filesystem::path& path);

void
WriteEmbeddings(const EmbeddingSet& set, std::ostream& out);

EmbeddingSet
ReadEmbeddings(const std::filesystem::path& path);

EmbeddingSet
ReadEmbeddings(std::istream& in);

}  // namespace latesearch

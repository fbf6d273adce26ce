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

#include "latesearch/embstore.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "file_util.h"
#include "latesearch/status.h"

namespace latesearch {

TokenMatrix::TokenMatrix(std::size_t n_tokens, std::size_t dim)
    : n_tokens_(n_tokens), dim_(dim), values_(n_tokens * dim, 0.0f) {
}

TokenMatrix::TokenMatrix(std::size_t n_tokens, std::size_t dim, std::vector<float> values)
    : n_tokens_(n_tokens), dim_(dim), values_(std::move(values)) {
    if (values_.size() != n_tokens_ * dim_) {
        Throw(ErrorCode::kDimMismatch,
              "expected " + std::to_string(n_tokens_ * dim_) + " values, got " +
                  std::to_string(values_.size()));
    }
}

TokenMatrix
TokenMatrix::FromRows(std::initializer_list<std::initializer_list<float>> rows) {
    std::vector<std::vector<float>> v;
    v.reserve(rows.size());
    for (const auto& r : rows) {
        v.emplace_back(r);
    }
    return FromRows(v);
}

TokenMatrix
TokenMatrix::FromRows(const std::vector<std::vector<float>>& rows) {
    if (rows.empty()) {
        return {};
    }
    const auto dim = rows.front().size();
    std::vector<float> values;
    values.reserve(rows.size() * dim);
    for (const auto& r : rows) {
        if (r.size() != dim) {
            Throw(ErrorCode::kDimMismatch, "ragged rows");
        }
        values.insert(values.end(), r.begin(), r.end());
    }
    return TokenMatrix(rows.size(), dim, std::move(values));
}

bool
operator==(const TokenMatrix& a, const TokenMatrix& b) {
    return a.n_tokens_ == b.n_tokens_ && a.dim_ == b.dim_ &&
           (a.values_.empty() ||
            std::memcmp(a.values_.data(), b.values_.data(), a.values_.size() * sizeof(float)) == 0);
}

std::string_view
EmbeddingKindName(EmbeddingKind kind) {
    return kind == EmbeddingKind::kQuery ? "query" : "document";
}

EmbeddingSet::EmbeddingSet(EmbeddingKind kind, std::size_t dim) : kind_(kind), dim_(dim) {
}

void
EmbeddingSet::Add(std::string id, TokenMatrix matrix) {
    if (id.size() > kMaxIdBytes) {
        Throw(ErrorCode::kInvalidArgument, "id longer than 65535 bytes");
    }
    if (matrix.empty()) {
        Throw(ErrorCode::kEmptyMatrix, "entry '" + id + "' has no tokens");
    }
    if (matrix.dim() != dim_) {
        Throw(ErrorCode::kDimMismatch,
              "entry '" + id + "' has dim " + std::to_string(matrix.dim()) + ", set dim is " +
                  std::to_string(dim_));
    }
    auto [it, inserted] = by_id_.emplace(id, ids_.size());
    if (!inserted) {
        Throw(ErrorCode::kDuplicateId, "id '" + id + "' already present");
    }
    total_tokens_ += matrix.n_tokens();
    ids_.push_back(std::move(id));
    matrices_.push_back(std::move(matrix));
}

const TokenMatrix*
EmbeddingSet::Find(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? nullptr : &matrices_[it->second];
}

bool
operator==(const EmbeddingSet& a, const EmbeddingSet& b) {
    return a.kind_ == b.kind_ && a.dim_ == b.dim_ && a.ids_ == b.ids_ &&
           a.matrices_ == b.matrices_;
}

TokenMatrix
NormalizeRows(const TokenMatrix& m) {
    TokenMatrix out = m;
    for (std::size_t i = 0; i < m.n_tokens(); ++i) {
        auto row = out.row(i);
        double sq = 0.0;
        for (float v : row) {
            sq += static_cast<double>(v) * v;
        }
        const double norm = std::sqrt(sq);
        if (!(norm >= 1e-12)) {
            Throw(ErrorCode::kZeroRow, "row " + std::to_string(i) + " has zero norm");
        }
        if (std::abs(norm - 1.0) <= 1e-7) {
            continue;
        }
        for (auto& v : row) {
            v = static_cast<float>(v / norm);
        }
    }
    return out;
}

EmbeddingSet
NormalizeAll(const EmbeddingSet& set) {
    EmbeddingSet out(set.kind(), set.dim());
    for (std::size_t i = 0; i < set.size(); ++i) {
        try {
            out.Add(set.id(i), NormalizeRows(set.matrix(i)));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::kZeroRow) {
                throw;
            }
            Throw(ErrorCode::kZeroRow, "entry '" + set.id(i) + "': " + e.what());
        }
    }
    return out;
}

bool
IsNormalized(const TokenMatrix& m, double tol) {
    for (std::size_t i = 0; i < m.n_tokens(); ++i) {
        double sq = 0.0;
        for (float v : m.row(i)) {
            sq += static_cast<double>(v) * v;
        }
        if (std::abs(std::sqrt(sq) - 1.0) > tol) {
            return false;
        }
    }
    return true;
}

namespace {

constexpr char kMagic[4] = {'P', 'L', 'E', 'M'};

std::string
Encode(const EmbeddingSet& set) {
    detail::ByteWriter w;
    w.PutBytes(std::string_view(kMagic, 4));
    w.Put<std::uint32_t>(kPlemVersion);
    w.Put<std::uint8_t>(static_cast<std::uint8_t>(set.kind()));
    w.Put<std::uint32_t>(static_cast<std::uint32_t>(set.dim()));
    w.Put<std::uint64_t>(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto& id = set.id(i);
        const auto& m = set.matrix(i);
        if (m.dim() != set.dim()) {
            Throw(ErrorCode::kDimMismatch, "entry '" + id + "' does not match set dim");
        }
        w.Put<std::uint16_t>(static_cast<std::uint16_t>(id.size()));
        w.PutBytes(id);
        w.Put<std::uint32_t>(static_cast<std::uint32_t>(m.n_tokens()));
        w.PutArray(std::span<const float>(m.values()));
    }
    return std::move(w.buffer());
}

EmbeddingSet
Decode(std::string_view bytes) {
    detail::ByteReader r(bytes);
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        Throw(ErrorCode::kBadMagic, "not a PLEM file");
    }
    r.GetBytes(4);
    const auto version = r.Get<std::uint32_t>();
    if (version != kPlemVersion) {
        Throw(ErrorCode::kUnsupportedVersion, "PLEM version " + std::to_string(version));
    }
    const auto kind_byte = r.Get<std::uint8_t>();
    if (kind_byte > 1) {
        Throw(ErrorCode::kParseError, "unknown kind byte " + std::to_string(kind_byte));
    }
    const auto dim = r.Get<std::uint32_t>();
    const auto count = r.Get<std::uint64_t>();
    if (dim == 0 && count > 0) {
        Throw(ErrorCode::kDimMismatch, "dim 0 with non-empty entry list");
    }
    EmbeddingSet set(static_cast<EmbeddingKind>(kind_byte), dim);
    for (std::uint64_t e = 0; e < count; ++e) {
        const auto id_len = r.Get<std::uint16_t>();
        std::string id(r.GetBytes(id_len));
        const auto n_tokens = r.Get<std::uint32_t>();
        if (n_tokens == 0) {
            Throw(ErrorCode::kEmptyMatrix, "entry '" + id + "' has no tokens");
        }
        const std::size_t n_values = static_cast<std::size_t>(n_tokens) * dim;
        if (r.remaining() / sizeof(float) < n_values) {
            Throw(ErrorCode::kTruncatedFile, "entry '" + id + "' is cut short");
        }
        std::vector<float> values(n_values);
        r.GetArray(std::span<float>(values));
        set.Add(std::move(id), TokenMatrix(n_tokens, dim, std::move(values)));
    }
    if (r.remaining() != 0) {
        Throw(ErrorCode::kParseError, std::to_string(r.remaining()) + " trailing bytes");
    }
    return set;
}

}  // namespace

void
WriteEmbeddings(const EmbeddingSet& set, std::ostream& out) {
    const auto bytes = Encode(set);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        Throw(ErrorCode::kIo, "stream write failed");
    }
}

void
WriteEmbeddings(const EmbeddingSet& set, const std::filesystem::path& path) {
    detail::WriteFile(path, Encode(set));
}

EmbeddingSet
ReadEmbeddings(std::istream& in) {
    std::ostringstream ss;
    ss << in.rdbuf();
    return Decode(ss.view());
}

EmbeddingSet
ReadEmbeddings(const std::filesystem::path& path) {
    const auto bytes = detail::ReadFile(path);
    return Decode(bytes);
}

}  // namespace latesearch

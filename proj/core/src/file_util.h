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

// Internal helpers for little-endian binary files and checksums.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>

#include "latesearch/status.h"

namespace latesearch::detail {

template <typename T>
T
ToLittle(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) {
            std::swap(b[i], b[sizeof(T) - 1 - i]);
        }
        std::memcpy(&v, b, sizeof(T));
    }
    return v;
}

class ByteWriter {
public:
    template <typename T>
    void
    Put(T v) {
        v = ToLittle(v);
        const auto* p = reinterpret_cast<const char*>(&v);
        buf_.append(p, sizeof(T));
    }

    template <typename T>
    void
    PutArray(std::span<const T> values) {
        if constexpr (std::endian::native == std::endian::little) {
            buf_.append(reinterpret_cast<const char*>(values.data()), values.size_bytes());
        } else {
            for (auto v : values) {
                Put(v);
            }
        }
    }

    void
    PutBytes(std::string_view bytes) {
        buf_.append(bytes);
    }

    const std::string&
    buffer() const noexcept {
        return buf_;
    }

    std::string&
    buffer() noexcept {
        return buf_;
    }

private:
    std::string buf_;
};

/// Reads from an in-memory byte buffer; running past the end throws
/// TruncatedFile.
class ByteReader {
public:
    explicit ByteReader(std::string_view data) : data_(data) {
    }

    template <typename T>
    T
    Get() {
        Need(sizeof(T));
        T v;
        std::memcpy(&v, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return ToLittle(v);
    }

    template <typename T>
    void
    GetArray(std::span<T> out) {
        Need(out.size_bytes());
        std::memcpy(out.data(), data_.data() + pos_, out.size_bytes());
        pos_ += out.size_bytes();
        if constexpr (std::endian::native == std::endian::big) {
            for (auto& v : out) {
                v = ToLittle(v);
            }
        }
    }

    std::string_view
    GetBytes(std::size_t n) {
        Need(n);
        auto s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    std::size_t
    remaining() const noexcept {
        return data_.size() - pos_;
    }

private:
    void
    Need(std::size_t n) const {
        if (data_.size() - pos_ < n) {
            Throw(ErrorCode::kTruncatedFile,
                  "need " + std::to_string(n) + " bytes at offset " + std::to_string(pos_) +
                      ", " + std::to_string(data_.size() - pos_) + " available");
        }
    }

    std::string_view data_;
    std::size_t pos_{0};
};

std::string
ReadFile(const std::filesystem::path& path);

void
WriteFile(const std::filesystem::path& path, std::string_view bytes);

std::uint32_t
Crc32(std::string_view bytes);

/// "crc32:xxxxxxxx" lowercase hex.
std::string
ChecksumString(std::string_view bytes);

/// Tab-separated line-safe encoding for ids: backslash, tab, newline and
/// carriage return are escaped.
std::string
EscapeField(std::string_view s);

std::string
UnescapeField(std::string_view s);

}  // namespace latesearch::detail

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
#include <span>
#include <vector>

namespace latesearch {

/// Scalar quantizer for residual components: 2^nbits equal-mass buckets with
/// cutoffs at sample quantiles and the per-bucket sample mean as the
/// reconstruction value. Bucket indices are packed LSB-first, nbits each.
class ResidualCodec {
public:
    ResidualCodec() = default;
    ResidualCodec(std::size_t nbits, std::vector<float> cutoffs, std::vector<float> midpoints);

    /// Fits cutoffs and midpoints on a sample of residual component values.
    /// nbits must be 1, 2 or 4.
    static ResidualCodec
    Fit(std::span<const float> sample, std::size_t nbits);

    std::size_t
    nbits() const noexcept {
        return nbits_;
    }

    std::size_t
    n_buckets() const noexcept {
        return std::size_t{1} << nbits_;
    }

    const std::vector<float>&
    cutoffs() const noexcept {
        return cutoffs_;
    }

    const std::vector<float>&
    midpoints() const noexcept {
        return midpoints_;
    }

    std::size_t
    PackedBytes(std::size_t dim) const noexcept {
        return dim * nbits_ / 8;
    }

    /// Bucket i holds values v with cutoffs[i-1] <= v < cutoffs[i].
    std::uint8_t
    Bucket(float v) const;

    void
    Encode(std::span<const float> residual, std::span<std::uint8_t> packed) const;

    /// Writes the midpoint of each packed bucket into `out` (dim values).
    void
    Decode(std::span<const std::uint8_t> packed, std::span<float> out) const;

private:
    std::size_t nbits_{0};
    std::vector<float> cutoffs_;
    std::vector<float> midpoints_;
};

}  // namespace latesearch

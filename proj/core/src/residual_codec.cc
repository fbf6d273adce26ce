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

#include "latesearch/residual_codec.h"

#include <algorithm>
#include <cmath>

#include "latesearch/status.h"

namespace latesearch {

namespace {

void
CheckNbits(std::size_t nbits) {
    if (nbits != 1 && nbits != 2 && nbits != 4) {
        Throw(ErrorCode::kInvalidArgument, "nbits must be 1, 2 or 4, got " + std::to_string(nbits));
    }
}

}  // namespace

ResidualCodec::ResidualCodec(std::size_t nbits, std::vector<float> cutoffs, std::vector<float> midpoints)
    : nbits_(nbits), cutoffs_(std::move(cutoffs)), midpoints_(std::move(midpoints)) {
    CheckNbits(nbits_);
    if (cutoffs_.size() + 1 != n_buckets() || midpoints_.size() != n_buckets()) {
        Throw(ErrorCode::kShapeMismatch, "bucket table sizes do not match nbits");
    }
}

ResidualCodec
ResidualCodec::Fit(std::span<const float> sample, std::size_t nbits) {
    CheckNbits(nbits);
    const std::size_t buckets = std::size_t{1} << nbits;
    std::vector<float> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());

    std::vector<float> cutoffs(buckets - 1, 0.0f);
    if (!sorted.empty()) {
        for (std::size_t j = 1; j < buckets; ++j) {
            const auto pos = std::min(sorted.size() - 1, j * sorted.size() / buckets);
            cutoffs[j - 1] = sorted[pos];
        }
    }

    std::vector<double> sums(buckets, 0.0);
    std::vector<std::size_t> counts(buckets, 0);
    for (float v : sorted) {
        const auto b = static_cast<std::size_t>(std::upper_bound(cutoffs.begin(), cutoffs.end(), v) - cutoffs.begin());
        sums[b] += v;
        ++counts[b];
    }
    std::vector<float> midpoints(buckets, 0.0f);
    for (std::size_t b = 0; b < buckets; ++b) {
        if (counts[b] > 0) {
            midpoints[b] = static_cast<float>(sums[b] / static_cast<double>(counts[b]));
            continue;
        }
        // Empty bucket: sit between its bounds, or on the one finite bound.
        const bool has_lo = b > 0;
        const bool has_hi = b + 1 < buckets;
        if (has_lo && has_hi) {
            midpoints[b] = 0.5f * (cutoffs[b - 1] + cutoffs[b]);
        } else if (has_lo) {
            midpoints[b] = cutoffs[b - 1];
        } else if (has_hi) {
            midpoints[b] = cutoffs[b];
        }
    }
    return ResidualCodec(nbits, std::move(cutoffs), std::move(midpoints));
}

std::uint8_t
ResidualCodec::Bucket(float v) const {
    return static_cast<std::uint8_t>(std::upper_bound(cutoffs_.begin(), cutoffs_.end(), v) - cutoffs_.begin());
}

void
ResidualCodec::Encode(std::span<const float> residual, std::span<std::uint8_t> packed) const {
    std::fill(packed.begin(), packed.end(), std::uint8_t{0});
    for (std::size_t d = 0; d < residual.size(); ++d) {
        const std::size_t bit = d * nbits_;
        packed[bit / 8] |= static_cast<std::uint8_t>(Bucket(residual[d]) << (bit % 8));
    }
}

void
ResidualCodec::Decode(std::span<const std::uint8_t> packed, std::span<float> out) const {
    const unsigned mask = (1u << nbits_) - 1u;
    for (std::size_t d = 0; d < out.size(); ++d) {
        const std::size_t bit = d * nbits_;
        out[d] = midpoints_[(packed[bit / 8] >> (bit % 8)) & mask];
    }
}

}  // namespace latesearch

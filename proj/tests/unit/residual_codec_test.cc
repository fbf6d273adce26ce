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

#include <gtest/gtest.h>

#include <random>

#include "latesearch/status.h"

namespace latesearch {
namespace {

TEST(ResidualCodec, EqualMassCutoffsAndMeanMidpoints) {
    // 0..7: quartile cutoffs at sorted[2], sorted[4], sorted[6].
    const std::vector<float> sample{7, 1, 3, 5, 0, 2, 6, 4};
    const auto codec = ResidualCodec::Fit(sample, 2);
    EXPECT_EQ(codec.cutoffs(), (std::vector<float>{2, 4, 6}));
    EXPECT_EQ(codec.midpoints(), (std::vector<float>{0.5f, 2.5f, 4.5f, 6.5f}));
    EXPECT_EQ(codec.Bucket(-10.0f), 0);
    EXPECT_EQ(codec.Bucket(1.99f), 0);
    EXPECT_EQ(codec.Bucket(2.0f), 1);
    EXPECT_EQ(codec.Bucket(6.0f), 3);
    EXPECT_EQ(codec.Bucket(100.0f), 3);
}

TEST(ResidualCodec, BucketsHoldEqualMass) {
    std::mt19937_64 rng(1);
    std::normal_distribution<float> g(0.0f, 0.1f);
    std::vector<float> sample(4096);
    for (auto& v : sample) {
        v = g(rng);
    }
    for (std::size_t nbits : {1u, 2u, 4u}) {
        const auto codec = ResidualCodec::Fit(sample, nbits);
        std::vector<std::size_t> counts(codec.n_buckets(), 0);
        for (float v : sample) {
            ++counts[codec.Bucket(v)];
        }
        for (auto c : counts) {
            EXPECT_EQ(c, sample.size() / codec.n_buckets());
        }
        for (std::size_t b = 0; b + 1 < codec.n_buckets(); ++b) {
            EXPECT_LT(codec.midpoints()[b], codec.midpoints()[b + 1]);
        }
    }
}

TEST(ResidualCodec, PackingIsLsbFirst) {
    const ResidualCodec codec(2, {-0.5f, 0.0f, 0.5f}, {-1.0f, -0.25f, 0.25f, 1.0f});
    const std::vector<float> residual{-0.9f, -0.1f, 0.1f, 0.9f, 0.9f, 0.1f, -0.1f, -0.9f};
    std::vector<std::uint8_t> packed(codec.PackedBytes(residual.size()));
    ASSERT_EQ(packed.size(), 2u);
    codec.Encode(residual, packed);
    EXPECT_EQ(packed[0], 0b11100100);
    EXPECT_EQ(packed[1], 0b00011011);
    std::vector<float> out(residual.size());
    codec.Decode(packed, out);
    EXPECT_EQ(out, (std::vector<float>{-1.0f, -0.25f, 0.25f, 1.0f, 1.0f, 0.25f, -0.25f, -1.0f}));
}

TEST(ResidualCodec, PackedSizes) {
    EXPECT_EQ(ResidualCodec(1, {0.0f}, {-1.0f, 1.0f}).PackedBytes(32), 4u);
    EXPECT_EQ(ResidualCodec(2, {-1, 0, 1}, {-2, -0.5f, 0.5f, 2}).PackedBytes(32), 8u);
    std::vector<float> cut(15);
    std::vector<float> mid(16);
    for (int i = 0; i < 15; ++i) {
        cut[i] = static_cast<float>(i);
    }
    EXPECT_EQ(ResidualCodec(4, cut, mid).PackedBytes(32), 16u);
}

TEST(ResidualCodec, RoundTripEveryBucketForFourBits) {
    std::vector<float> sample(160);
    for (std::size_t i = 0; i < sample.size(); ++i) {
        sample[i] = static_cast<float>(i) / 160.0f - 0.5f;
    }
    const auto codec = ResidualCodec::Fit(sample, 4);
    std::vector<float> residual(16);
    for (std::size_t b = 0; b < 16; ++b) {
        residual[b] = codec.midpoints()[b];
    }
    std::vector<std::uint8_t> packed(codec.PackedBytes(16));
    codec.Encode(residual, packed);
    std::vector<float> out(16);
    codec.Decode(packed, out);
    EXPECT_EQ(out, residual);
}

TEST(ResidualCodec, RejectsBadShapes) {
    EXPECT_THROW(ResidualCodec::Fit(std::vector<float>{1.0f}, 3), Error);
    EXPECT_THROW(ResidualCodec(2, {0.0f}, {0.0f, 1.0f}), Error);
}

}  // namespace
}  // namespace latesearch

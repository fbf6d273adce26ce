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

#include "latesearch/status.h"

namespace latesearch {

std::string_view
ErrorCodeName(ErrorCode code) {
    switch (code) {
        case ErrorCode::kInvalidArgument: return "InvalidArgument";
        case ErrorCode::kIo: return "IoError";
        case ErrorCode::kZeroRow: return "ZeroRow";
        case ErrorCode::kEmptyMatrix: return "EmptyMatrix";
        case ErrorCode::kDimMismatch: return "DimMismatch";
        case ErrorCode::kDuplicateId: return "DuplicateId";
        case ErrorCode::kBadMagic: return "BadMagic";
        case ErrorCode::kUnsupportedVersion: return "UnsupportedVersion";
        case ErrorCode::kTruncatedFile: return "TruncatedFile";
        case ErrorCode::kKindMismatch: return "KindMismatch";
        case ErrorCode::kKTooLarge: return "KTooLarge";
        case ErrorCode::kDimNotPackable: return "DimNotPackable";
        case ErrorCode::kOrdinalOutOfRange: return "OrdinalOutOfRange";
        case ErrorCode::kEmptyIndex: return "EmptyIndex";
        case ErrorCode::kBadManifest: return "BadManifest";
        case ErrorCode::kChecksumMismatch: return "ChecksumMismatch";
        case ErrorCode::kDegenerateBatch: return "DegenerateBatch";
        case ErrorCode::kShapeMismatch: return "ShapeMismatch";
        case ErrorCode::kParseError: return "ParseError";
        case ErrorCode::kNoJudgedQueries: return "NoJudgedQueries";
        case ErrorCode::kUnknownMetric: return "UnknownMetric";
        case ErrorCode::kMissingDoc: return "MissingDoc";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message), code_(code) {
}

void
Throw(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace latesearch

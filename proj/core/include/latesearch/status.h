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

#include <stdexcept>
#include <string>
#include <string_view>

namespace latesearch {

enum class ErrorCode {
    kInvalidArgument,
    kIo,
    kZeroRow,
    kEmptyMatrix,
    kDimMismatch,
    kDuplicateId,
    kBadMagic,
    kUnsupportedVersion,
    kTruncatedFile,
    kKindMismatch,
    kKTooLarge,
    kDimNotPackable,
    kOrdinalOutOfRange,
    kEmptyIndex,
    kBadManifest,
    kChecksumMismatch,
    kDegenerateBatch,
    kShapeMismatch,
    kParseError,
    kNoJudgedQueries,
    kUnknownMetric,
    kMissingDoc,
};

std::string_view ErrorCodeName(ErrorCode code);

/// Every failure surfaced by the library is an Error carrying one of the
/// codes above. The message is prefixed with the code name.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode
    code() const noexcept {
        return code_;
    }

private:
    ErrorCode code_;
};

[[noreturn]] void
Throw(ErrorCode code, const std::string& message);

}  // namespace latesearch

// Copyright 2026 The hei Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace hei {

// Input files or argument values that fail structural validation.
struct validation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed model/feature/serialization payloads. Carries the offending
// field path or row in the message.
struct parse_error : validation_error {
    using validation_error::validation_error;
};

// Ciphertext ran out of modulus-chain levels.
struct depth_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Decryption-side error estimate exceeded the configured bound.
struct precision_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A required rotation/relinearization key is missing.
struct key_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Operands disagree on level, scale, or form.
struct state_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace hei

// Copyright 2026 The skipshield Authors. All Rights Reserved.
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
//
// The skipshield command line: classify, harden, verify, simulate, report.

#ifndef SKIPSHIELD_CLI_H_
#define SKIPSHIELD_CLI_H_

#include <ostream>

namespace skipshield {

// Exit codes.
constexpr int kExitOk = 0;
constexpr int kExitToolError = 1;
constexpr int kExitCheckFailed = 2;  // verification failure or intolerance
constexpr int kExitUsage = 64;

int Main(int argc, const char* const* argv, std::ostream& out,
         std::ostream& err);

}  // namespace skipshield

#endif  // SKIPSHIELD_CLI_H_

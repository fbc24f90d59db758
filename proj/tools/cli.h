// Copyright 2026 The rnnscope Authors.
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

// The rnnscope command line: train, gradcheck, dump-plan, serve, bench.

#ifndef RNNSCOPE_TOOLS_CLI_H_
#define RNNSCOPE_TOOLS_CLI_H_

#include <iosfwd>

namespace rnnscope {

// Returns the process exit status. Output goes to out, diagnostics to err.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace rnnscope

#endif  // RNNSCOPE_TOOLS_CLI_H_

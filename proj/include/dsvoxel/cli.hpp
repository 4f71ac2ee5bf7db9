// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dsvoxel {

/// Command-line entry point, separated from main() so tests can drive it.
/// Exit codes: 0 success, 1 usage error, 2 input/parse error, 3 numerical
/// abort.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dsvoxel

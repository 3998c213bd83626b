// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pathind::cli {

enum ExitCode : int { kPass = 0, kFail = 1, kConfigError = 2 };

/// Runs one command. `args` excludes the program name. Returns 0 when the
/// command's check passes, 1 on a failed check or a numeric failure (with
/// diagnostics.json written), 2 on a configuration error.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace pathind::cli

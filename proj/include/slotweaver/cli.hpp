// Copyright 2026 The Slotweaver Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace slotweaver {

/// Exit codes: 0 success, 1 pipeline error, 2 configuration or auth error.
int run_cli(int argc, char** argv);
/// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace slotweaver

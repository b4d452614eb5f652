// Copyright 2026 The Slotweaver Authors
// SPDX-License-Identifier: Apache-2.0

#include "slotweaver/cli.hpp"

int main(int argc, char** argv) { return slotweaver::run_cli(argc, argv); }

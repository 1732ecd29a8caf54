// SPDX-FileCopyrightText: 2026 the occkit authors
// SPDX-License-Identifier: Apache-2.0

#include "occkit/cli.hpp"

int main(int argc, char** argv) { return occkit::cli::run(argc, argv); }

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The drbml Authors

#include "drbml/app.hpp"

int main(int argc, char** argv) { return drbml::run_cli(argc, argv); }

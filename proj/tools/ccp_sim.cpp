// SPDX-License-Identifier: Apache-2.0

#include "ccp/harness/cli.hpp"

int main(int argc, char** argv) { return ccp::harness::run_cli(argc, argv); }

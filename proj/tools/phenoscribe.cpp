// SPDX-License-Identifier: Apache-2.0
// Command-line entry point. Subcommands wired in once the pipeline lands.

#include <cstdio>

int main() {
  std::puts("phenoscribe: not yet wired");
  return 2;
}
